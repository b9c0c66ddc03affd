#include "triage/case_store.hpp"

#include "triage/csv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace triage {

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kUnitNames[kUnitCount] = {"MAT", "UTMC", "UIE",
                                                     "OEMASC", "UID"};

constexpr std::string_view kEventTypeNames[kEventTypeCount] = {
    "initialized",
    "progress_update",
    "unit_transfer",
    "search_warrant",
    "suspect_update",
    "party_update",
    "closure",
    "milestone:judicialization",
    "milestone:preventive_detention",
    "milestone:judicial_authorization",
    "milestone:arrest_warrant",
    "milestone:conciliation_referral",
    "milestone:vinculacion_a_proceso",
    "milestone:alternative_mechanism",
};

constexpr std::string_view kClosureKindNames[4] = {
    "administrative_closure", "alternative_mechanism", "transfer_out",
    "judicial_resolution"};

} // namespace

std::string_view unit_name(Unit u) { return kUnitNames[static_cast<int>(u)]; }

std::optional<Unit> parse_unit(std::string_view s) {
  for (int i = 0; i < kUnitCount; ++i)
    if (s == kUnitNames[i])
      return static_cast<Unit>(i);
  return std::nullopt;
}

std::string_view event_type_name(EventType t) {
  return kEventTypeNames[static_cast<int>(t)];
}

std::optional<EventType> parse_event_type(std::string_view s) {
  for (int i = 0; i < kEventTypeCount; ++i)
    if (s == kEventTypeNames[i])
      return static_cast<EventType>(i);
  return std::nullopt;
}

std::string_view closure_kind_name(ClosureKind k) {
  return kClosureKindNames[static_cast<int>(k)];
}

std::optional<ClosureKind> parse_closure_kind(std::string_view s) {
  for (int i = 0; i < 4; ++i)
    if (s == kClosureKindNames[i])
      return static_cast<ClosureKind>(i);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// CaseStore queries
// ---------------------------------------------------------------------------

std::optional<size_t> CaseStore::find_case(std::string_view case_id) const {
  auto it = by_id_.find(std::string(case_id));
  if (it == by_id_.end())
    return std::nullopt;
  return it->second;
}

std::span<const ProceduralEvent> CaseStore::events(size_t case_idx) const {
  return events_[case_idx];
}

std::span<const ProceduralEvent> CaseStore::events_as_of(size_t case_idx,
                                                         Date as_of) const {
  const auto &evs = events_[case_idx];
  auto it = std::upper_bound(
      evs.begin(), evs.end(), as_of,
      [](Date d, const ProceduralEvent &e) { return d < e.occurred_at; });
  return {evs.data(), static_cast<size_t>(it - evs.begin())};
}

std::vector<ProceduralEvent>
CaseStore::events_as_of(std::string_view case_id, Date as_of) const {
  auto idx = find_case(case_id);
  if (!idx)
    throw NotFoundError("unknown case_id: " + std::string(case_id));
  auto span = events_as_of(*idx, as_of);
  return {span.begin(), span.end()};
}

Unit CaseStore::unit_at(size_t case_idx, Date as_of) const {
  Unit u = cases_[case_idx].unit;
  for (const auto &e : events_as_of(case_idx, as_of))
    if (e.type == EventType::unit_transfer && e.to_unit)
      u = *e.to_unit;
  return u;
}

bool CaseStore::closed_on_or_before(size_t case_idx, Date as_of) const {
  const auto &rec = cases_[case_idx];
  if (rec.closed_at && *rec.closed_at <= as_of)
    return true;
  for (const auto &e : events_as_of(case_idx, as_of))
    if (e.type == EventType::closure)
      return true;
  return false;
}

bool CaseStore::open_in_unit(size_t case_idx, Unit unit, Date as_of) const {
  const auto &rec = cases_[case_idx];
  return rec.opened_at <= as_of && !closed_on_or_before(case_idx, as_of) &&
         unit_at(case_idx, as_of) == unit;
}

std::vector<size_t> CaseStore::open_cases(Unit unit, Date as_of) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < cases_.size(); ++i)
    if (open_in_unit(i, unit, as_of))
      out.push_back(i);
  return out;
}

void CaseStore::reindex() {
  by_id_.clear();
  by_id_.reserve(cases_.size());
  min_opened_ = cases_.empty() ? Date(0) : cases_[0].opened_at;
  Date max_seen = min_opened_;
  for (size_t i = 0; i < cases_.size(); ++i) {
    by_id_.emplace(cases_[i].case_id, i);
    min_opened_ = std::min(min_opened_, cases_[i].opened_at);
    max_seen = std::max(max_seen, cases_[i].opened_at);
    for (const auto &e : events_[i])
      max_seen = std::max(max_seen, e.occurred_at);
  }
  extraction_date_ = max_seen;
}

CaseStore CaseStore::truncated(Date cutoff) const {
  CaseStore out;
  for (size_t i = 0; i < cases_.size(); ++i) {
    CaseRecord rec = cases_[i];
    if (rec.opened_at > cutoff)
      continue;
    if (rec.closed_at && *rec.closed_at > cutoff) {
      rec.closed_at.reset();
      rec.closure_kind.reset();
    }
    std::vector<ProceduralEvent> evs;
    for (const auto &e : events_[i])
      if (e.occurred_at <= cutoff)
        evs.push_back(e);
    out.cases_.push_back(std::move(rec));
    out.events_.push_back(std::move(evs));
  }
  out.reindex();
  out.extraction_date_ = cutoff;
  return out;
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

void CaseStoreBuilder::add_case(CaseRecord record) {
  if (by_id_.count(record.case_id))
    throw DataError("duplicate case_id: " + record.case_id);
  if (record.closed_at.has_value() != record.closure_kind.has_value())
    throw DataError("case " + record.case_id +
                    ": closed_at and closure_kind must appear together");
  if (record.closed_at && *record.closed_at < record.opened_at)
    throw DataError("case " + record.case_id + ": closed before opened");
  by_id_.emplace(record.case_id, cases_.size());
  cases_.push_back(std::move(record));
  events_.emplace_back();
}

bool CaseStoreBuilder::has_case(std::string_view case_id) const {
  return by_id_.count(std::string(case_id)) > 0;
}

void CaseStoreBuilder::add_event(std::string_view case_id, EventType type,
                                 Date occurred_at, std::string actor_lawyer,
                                 std::optional<Unit> from_unit,
                                 std::optional<Unit> to_unit) {
  auto it = by_id_.find(std::string(case_id));
  if (it == by_id_.end())
    throw DataError("event references unknown case_id: " +
                    std::string(case_id));
  size_t idx = it->second;
  const CaseRecord &rec = cases_[idx];
  if (occurred_at < rec.opened_at)
    throw DataError("case " + rec.case_id + ": event dated " +
                    occurred_at.to_string() + " before opened_at " +
                    rec.opened_at.to_string());
  if (rec.closed_at && occurred_at > *rec.closed_at)
    throw DataError("case " + rec.case_id + ": event dated " +
                    occurred_at.to_string() + " after closed_at " +
                    rec.closed_at->to_string());
  bool is_transfer = type == EventType::unit_transfer;
  if (is_transfer != (from_unit.has_value() && to_unit.has_value()))
    throw DataError("case " + rec.case_id +
                    ": from_unit/to_unit allowed exactly on unit_transfer");
  if (is_transfer && *from_unit == *to_unit)
    throw DataError("case " + rec.case_id + ": transfer with from == to");

  ProceduralEvent e;
  e.seq = static_cast<int32_t>(events_[idx].size());
  e.type = type;
  e.occurred_at = occurred_at;
  e.actor_lawyer = std::move(actor_lawyer);
  e.from_unit = from_unit;
  e.to_unit = to_unit;
  events_[idx].push_back(std::move(e));
}

CaseStore CaseStoreBuilder::build(bool strict,
                                  std::optional<Date> extraction_floor) {
  // Canonical order: cases by id, events by (date, seq).
  std::vector<size_t> order(cases_.size());
  for (size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return cases_[a].case_id < cases_[b].case_id;
  });

  CaseStore store;
  store.cases_.reserve(cases_.size());
  store.events_.reserve(cases_.size());
  for (size_t i : order) {
    auto &evs = events_[i];
    std::sort(evs.begin(), evs.end(),
              [](const ProceduralEvent &a, const ProceduralEvent &b) {
                if (a.occurred_at != b.occurred_at)
                  return a.occurred_at < b.occurred_at;
                return a.seq < b.seq;
              });
    // Canonical sequence numbers: dense, in (date, file-order) order, so
    // export(ingest(f)) is idempotent.
    for (size_t k = 0; k < evs.size(); ++k)
      evs[k].seq = static_cast<int32_t>(k);
    if (strict) {
      const CaseRecord &rec = cases_[i];
      int n_init = 0, n_transfer = 0;
      Unit current = rec.unit;
      for (const auto &e : evs) {
        if (e.type == EventType::initialized)
          ++n_init;
        if (e.type == EventType::unit_transfer) {
          ++n_transfer;
          if (*e.from_unit != current)
            throw DataError("case " + rec.case_id +
                            ": transfer chain broken (expected from=" +
                            std::string(unit_name(current)) + ", got " +
                            std::string(unit_name(*e.from_unit)) + ")");
          current = *e.to_unit;
        }
      }
      if (n_init != 1 + n_transfer)
        throw DataError("case " + rec.case_id + ": expected " +
                        std::to_string(1 + n_transfer) +
                        " initialized events (one per unit entry), found " +
                        std::to_string(n_init));
    }
    store.cases_.push_back(std::move(cases_[i]));
    store.events_.push_back(std::move(evs));
  }
  store.reindex();
  if (extraction_floor)
    store.extraction_date_ =
        std::max(store.extraction_date_, *extraction_floor);

  cases_.clear();
  events_.clear();
  by_id_.clear();
  return store;
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kCaseColumns = {
    "case_id",   "opened_at",          "offense_at", "crime_category",
    "municipality", "unit",            "lawyer_id",  "arrested_at_intake",
    "closed_at", "closure_kind"};

const std::vector<std::string> kEventColumns = {
    "case_id",      "seq",       "event_type", "occurred_at",
    "actor_lawyer", "from_unit", "to_unit"};

struct RawCase {
  CaseRecord rec;
  int line;
};

struct RawEvent {
  std::string case_id;
  int64_t file_seq;
  EventType type;
  Date occurred_at;
  std::string actor_lawyer;
  std::optional<Unit> from_unit, to_unit;
  int line;
};

std::optional<bool> parse_bool(const std::string &s) {
  if (s == "true" || s == "1")
    return true;
  if (s == "false" || s == "0")
    return false;
  return std::nullopt;
}

// Field accessor shared by the CSV and JSONL paths.
using FieldMap = std::unordered_map<std::string, std::string>;

std::string field_or_empty(const FieldMap &f, const std::string &key) {
  auto it = f.find(key);
  return it == f.end() ? std::string() : it->second;
}

std::optional<RawCase> parse_case_fields(const FieldMap &f, int line,
                                         std::vector<RejectedRow> &rejects,
                                         const std::string &file) {
  auto reject = [&](const std::string &why) -> std::optional<RawCase> {
    rejects.push_back({file, line, why});
    return std::nullopt;
  };
  RawCase rc;
  rc.line = line;
  rc.rec.case_id = field_or_empty(f, "case_id");
  if (rc.rec.case_id.empty())
    return reject("missing case_id");
  auto opened = Date::parse(field_or_empty(f, "opened_at"));
  if (!opened)
    return reject("bad opened_at");
  rc.rec.opened_at = *opened;
  std::string offense = field_or_empty(f, "offense_at");
  if (!offense.empty()) {
    auto d = Date::parse(offense);
    if (!d)
      return reject("bad offense_at");
    rc.rec.offense_at = *d;
  }
  rc.rec.crime_category = field_or_empty(f, "crime_category");
  if (rc.rec.crime_category.empty())
    return reject("missing crime_category");
  rc.rec.municipality = field_or_empty(f, "municipality");
  auto unit = parse_unit(field_or_empty(f, "unit"));
  if (!unit)
    return reject("unknown unit");
  rc.rec.unit = *unit;
  rc.rec.lawyer_id = field_or_empty(f, "lawyer_id");
  auto arrested = parse_bool(field_or_empty(f, "arrested_at_intake"));
  if (!arrested)
    return reject("bad arrested_at_intake");
  rc.rec.arrested_at_intake = *arrested;
  std::string closed = field_or_empty(f, "closed_at");
  std::string kind = field_or_empty(f, "closure_kind");
  if (closed.empty() != kind.empty())
    return reject("closed_at and closure_kind must appear together");
  if (!closed.empty()) {
    auto d = Date::parse(closed);
    if (!d)
      return reject("bad closed_at");
    auto k = parse_closure_kind(kind);
    if (!k)
      return reject("unknown closure_kind");
    if (*d < rc.rec.opened_at)
      return reject("closed before opened");
    rc.rec.closed_at = *d;
    rc.rec.closure_kind = *k;
  }
  return rc;
}

std::optional<RawEvent> parse_event_fields(const FieldMap &f, int line,
                                           std::vector<RejectedRow> &rejects,
                                           const std::string &file) {
  auto reject = [&](const std::string &why) -> std::optional<RawEvent> {
    rejects.push_back({file, line, why});
    return std::nullopt;
  };
  RawEvent ev;
  ev.line = line;
  ev.case_id = field_or_empty(f, "case_id");
  if (ev.case_id.empty())
    return reject("missing case_id");
  try {
    ev.file_seq = std::stoll(field_or_empty(f, "seq"));
  } catch (...) {
    return reject("bad seq");
  }
  auto type = parse_event_type(field_or_empty(f, "event_type"));
  if (!type)
    return reject("unknown event_type");
  ev.type = *type;
  auto occurred = Date::parse(field_or_empty(f, "occurred_at"));
  if (!occurred)
    return reject("bad occurred_at");
  ev.occurred_at = *occurred;
  ev.actor_lawyer = field_or_empty(f, "actor_lawyer");
  std::string from = field_or_empty(f, "from_unit");
  std::string to = field_or_empty(f, "to_unit");
  bool is_transfer = ev.type == EventType::unit_transfer;
  if (is_transfer) {
    auto fu = parse_unit(from);
    auto tu = parse_unit(to);
    if (!fu || !tu)
      return reject("unit_transfer requires from_unit and to_unit");
    if (*fu == *tu)
      return reject("unit_transfer with from_unit == to_unit");
    ev.from_unit = fu;
    ev.to_unit = tu;
  } else if (!from.empty() || !to.empty()) {
    return reject("from_unit/to_unit only valid on unit_transfer");
  }
  return ev;
}

std::vector<FieldMap> read_rows_csv(const std::filesystem::path &path,
                                    const std::vector<std::string> &expected,
                                    std::vector<RejectedRow> &rejects,
                                    std::vector<int> &lines) {
  CsvReader reader(path);
  for (const auto &col : expected)
    if (reader.column(col) < 0)
      throw DataError(path.string() + ": missing column '" + col + "'");
  std::vector<FieldMap> rows;
  CsvRow row;
  while (reader.next(row)) {
    if (row.fields.size() != reader.header().size()) {
      rejects.push_back({path.string(), row.line, "wrong field count"});
      continue;
    }
    FieldMap f;
    for (size_t i = 0; i < row.fields.size(); ++i)
      f.emplace(reader.header()[i], row.fields[i]);
    rows.push_back(std::move(f));
    lines.push_back(row.line);
  }
  return rows;
}

std::vector<FieldMap> read_rows_jsonl(const std::filesystem::path &path,
                                      std::vector<RejectedRow> &rejects,
                                      std::vector<int> &lines) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open file: " + path.string());
  std::vector<FieldMap> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      rejects.push_back({path.string(), line_no, "invalid JSON object"});
      continue;
    }
    FieldMap f;
    for (auto &[key, val] : j.items()) {
      if (val.is_string())
        f.emplace(key, val.get<std::string>());
      else if (val.is_boolean())
        f.emplace(key, val.get<bool>() ? "true" : "false");
      else if (val.is_number_integer())
        f.emplace(key, std::to_string(val.get<int64_t>()));
      else if (!val.is_null())
        f.emplace(key, val.dump());
    }
    rows.push_back(std::move(f));
    lines.push_back(line_no);
  }
  return rows;
}

} // namespace

IngestResult ingest(const std::filesystem::path &cases_path,
                    const std::filesystem::path &events_path,
                    IngestFormat format) {
  std::vector<RejectedRow> rejects;
  std::vector<int> case_lines, event_lines;
  std::vector<FieldMap> case_rows, event_rows;
  if (format == IngestFormat::csv) {
    case_rows = read_rows_csv(cases_path, kCaseColumns, rejects, case_lines);
    event_rows =
        read_rows_csv(events_path, kEventColumns, rejects, event_lines);
  } else {
    case_rows = read_rows_jsonl(cases_path, rejects, case_lines);
    event_rows = read_rows_jsonl(events_path, rejects, event_lines);
  }

  CaseStoreBuilder builder;
  for (size_t i = 0; i < case_rows.size(); ++i) {
    auto rc =
        parse_case_fields(case_rows[i], case_lines[i], rejects,
                          cases_path.string());
    if (!rc)
      continue;
    if (builder.has_case(rc->rec.case_id)) {
      rejects.push_back({cases_path.string(), rc->line,
                         "duplicate case_id " + rc->rec.case_id});
      continue;
    }
    builder.add_case(std::move(rc->rec));
  }

  std::unordered_map<std::string, std::vector<int64_t>> seen_seq;
  for (size_t i = 0; i < event_rows.size(); ++i) {
    auto ev = parse_event_fields(event_rows[i], event_lines[i], rejects,
                                 events_path.string());
    if (!ev)
      continue;
    auto &seqs = seen_seq[ev->case_id];
    if (std::find(seqs.begin(), seqs.end(), ev->file_seq) != seqs.end()) {
      rejects.push_back({events_path.string(), ev->line,
                         "duplicate (case_id, seq) pair: " + ev->case_id +
                             "/" + std::to_string(ev->file_seq)});
      continue;
    }
    seqs.push_back(ev->file_seq);
    // Unknown case ids and out-of-span dates are hard errors, not rejects.
    builder.add_event(ev->case_id, ev->type, ev->occurred_at,
                      std::move(ev->actor_lawyer), ev->from_unit, ev->to_unit);
  }

  return IngestResult{builder.build(), std::move(rejects)};
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

void export_store(const CaseStore &store,
                  const std::filesystem::path &cases_path,
                  const std::filesystem::path &events_path) {
  CsvWriter cases_out(cases_path);
  cases_out.write_row(kCaseColumns);
  for (size_t i = 0; i < store.case_count(); ++i) {
    const CaseRecord &c = store.case_at(i);
    cases_out.write_row({
        c.case_id,
        c.opened_at.to_string(),
        c.offense_at ? c.offense_at->to_string() : "",
        c.crime_category,
        c.municipality,
        std::string(unit_name(c.unit)),
        c.lawyer_id,
        c.arrested_at_intake ? "true" : "false",
        c.closed_at ? c.closed_at->to_string() : "",
        c.closure_kind ? std::string(closure_kind_name(*c.closure_kind)) : "",
    });
  }

  CsvWriter events_out(events_path);
  events_out.write_row(kEventColumns);
  for (size_t i = 0; i < store.case_count(); ++i) {
    const CaseRecord &c = store.case_at(i);
    for (const auto &e : store.events(i)) {
      events_out.write_row({
          c.case_id,
          std::to_string(e.seq),
          std::string(event_type_name(e.type)),
          e.occurred_at.to_string(),
          e.actor_lawyer,
          e.from_unit ? std::string(unit_name(*e.from_unit)) : "",
          e.to_unit ? std::string(unit_name(*e.to_unit)) : "",
      });
    }
  }
}

CaseStore load_store_dir(const std::filesystem::path &dir) {
  auto result = ingest(dir / "cases.csv", dir / "events.csv");
  if (!result.rejects.empty())
    throw DataError("store directory " + dir.string() + " has " +
                    std::to_string(result.rejects.size()) +
                    " invalid rows (first: " + result.rejects[0].reason + ")");
  return std::move(result.store);
}

void save_store_dir(const CaseStore &store,
                    const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  export_store(store, dir / "cases.csv", dir / "events.csv");
}

} // namespace triage
