#include "triage/rct.hpp"

#include "triage/csv.hpp"
#include "triage/labels.hpp"
#include "triage/rng.hpp"

#include <algorithm>
#include <fstream>

namespace triage {

RctCohort assign_week(const CaseStore &store, const RankedList &ranked,
                      const std::set<std::string> &ledger, int week_index,
                      uint64_t seed, int cohort_size) {
  if (cohort_size <= 0 || cohort_size % 2 != 0)
    throw ConfigError("assign_week: cohort_size must be positive and even");

  RctCohort cohort;
  cohort.week_index = week_index;
  cohort.as_of = ranked.as_of;
  cohort.seed = seed;

  std::vector<CohortMember> selected;
  selected.reserve(cohort_size);
  for (size_t pos = 0; pos < ranked.entries.size(); ++pos) {
    if (static_cast<int>(selected.size()) == cohort_size)
      break;
    const auto &entry = ranked.entries[pos];
    const std::string &id = store.case_at(entry.case_index).case_id;
    if (ledger.count(id)) {
      ++cohort.replacements_used;
      continue;
    }
    selected.push_back({entry.case_index, id, static_cast<int>(pos) + 1});
  }
  if (static_cast<int>(selected.size()) < cohort_size) {
    cohort.shortfall = true;
    if (selected.size() % 2 != 0)
      selected.pop_back(); // largest even size <= eligible pool
  }

  Rng rng(seed);
  rng.shuffle(selected);
  size_t half = selected.size() / 2;
  cohort.treatment.assign(selected.begin(), selected.begin() + half);
  cohort.control.assign(selected.begin() + half, selected.end());
  auto by_rank = [](const CohortMember &a, const CohortMember &b) {
    return a.rank < b.rank;
  };
  std::sort(cohort.treatment.begin(), cohort.treatment.end(), by_rank);
  std::sort(cohort.control.begin(), cohort.control.end(), by_rank);
  return cohort;
}

Ledger Ledger::load(const std::filesystem::path &path) {
  Ledger ledger;
  std::ifstream in(path);
  if (!in)
    return ledger;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError("ledger " + path.string() + ": malformed line '" +
                      line + "'");
    std::string id = line.substr(0, comma);
    int week = 0;
    try {
      week = std::stoi(line.substr(comma + 1));
    } catch (...) {
      throw DataError("ledger " + path.string() + ": bad week in '" + line +
                      "'");
    }
    ledger.enrolled.insert(std::move(id));
    ledger.next_week_index = std::max(ledger.next_week_index, week + 1);
  }
  return ledger;
}

void Ledger::append(const std::filesystem::path &path,
                    const RctCohort &cohort) {
  std::ofstream out(path, std::ios::app);
  if (!out)
    throw DataError("cannot append to ledger: " + path.string());
  for (const auto &arm : {&cohort.treatment, &cohort.control})
    for (const auto &m : *arm)
      out << m.case_id << ',' << cohort.week_index << '\n';
}

void save_cohort_csv(const RctCohort &cohort,
                     const std::filesystem::path &path) {
  CsvWriter out(path);
  out.write_row({"case_id", "rank", "arm", "week_index", "as_of", "seed",
                 "replacements_used", "shortfall"});
  auto dump = [&](const std::vector<CohortMember> &arm, const char *name) {
    for (const auto &m : arm)
      out.write_row({m.case_id, std::to_string(m.rank), name,
                     std::to_string(cohort.week_index),
                     cohort.as_of.to_string(), std::to_string(cohort.seed),
                     std::to_string(cohort.replacements_used),
                     cohort.shortfall ? "true" : "false"});
  };
  dump(cohort.treatment, "treatment");
  dump(cohort.control, "control");
}

RctCohort load_cohort_csv(const CaseStore &store,
                          const std::filesystem::path &path) {
  CsvReader reader(path);
  for (const char *col : {"case_id", "rank", "arm", "week_index"})
    if (reader.column(col) < 0)
      throw DataError(path.string() + ": missing column '" +
                      std::string(col) + "'");
  RctCohort cohort;
  bool first = true;
  CsvRow row;
  while (reader.next(row)) {
    auto field = [&](const char *name) -> const std::string & {
      return row.fields[reader.column(name)];
    };
    CohortMember m;
    m.case_id = field("case_id");
    auto idx = store.find_case(m.case_id);
    if (!idx)
      throw NotFoundError("cohort " + path.string() +
                          " references unknown case " + m.case_id);
    m.case_index = *idx;
    m.rank = std::stoi(field("rank"));
    if (first) {
      cohort.week_index = std::stoi(field("week_index"));
      if (reader.column("as_of") >= 0)
        if (auto d = Date::parse(field("as_of")))
          cohort.as_of = *d;
      if (reader.column("seed") >= 0)
        cohort.seed = std::stoull(field("seed"));
      if (reader.column("replacements_used") >= 0)
        cohort.replacements_used = std::stoi(field("replacements_used"));
      if (reader.column("shortfall") >= 0)
        cohort.shortfall = field("shortfall") == "true";
      first = false;
    }
    if (field("arm") == "treatment")
      cohort.treatment.push_back(std::move(m));
    else
      cohort.control.push_back(std::move(m));
  }
  return cohort;
}

OutcomesReport outcomes_report(const CaseStore &store,
                               const std::vector<RctCohort> &cohorts,
                               int horizon_days, Unit unit) {
  if (cohorts.empty())
    throw DataError("outcomes_report: no cohorts");
  Date last_as_of = cohorts.front().as_of;
  for (const auto &c : cohorts)
    last_as_of = std::max(last_as_of, c.as_of);
  if (last_as_of + horizon_days > store.extraction_date()) {
    int shortfall = (last_as_of + horizon_days) - store.extraction_date();
    throw DataError("outcomes_report: follow-up window ends " +
                    std::to_string(shortfall) +
                    " days past the store's data horizon");
  }

  auto summarize = [&](bool treatment_arm) {
    ArmSummary s;
    std::vector<double> days;
    for (const auto &cohort : cohorts) {
      const auto &arm = treatment_arm ? cohort.treatment : cohort.control;
      for (const auto &m : arm) {
        ++s.n;
        if (!finalized_within(store, m.case_index, unit, cohort.as_of,
                              horizon_days))
          continue;
        ++s.resolved;
        // First finalizing event in the window.
        const Date end = cohort.as_of + horizon_days;
        const CaseRecord &rec = store.case_at(m.case_index);
        std::optional<Date> resolved_at;
        for (const auto &e : store.events(m.case_index)) {
          if (e.occurred_at <= cohort.as_of)
            continue;
          if (e.occurred_at > end)
            break;
          if (e.type == EventType::closure ||
              (e.type == EventType::unit_transfer && e.from_unit == unit)) {
            resolved_at = e.occurred_at;
            break;
          }
        }
        if (!resolved_at && rec.closed_at)
          resolved_at = rec.closed_at;
        days.push_back(static_cast<double>(*resolved_at - cohort.as_of));
      }
    }
    s.resolution_rate =
        s.n > 0 ? static_cast<double>(s.resolved) / s.n : 0.0;
    if (!days.empty()) {
      std::sort(days.begin(), days.end());
      size_t mid = days.size() / 2;
      s.median_days_to_resolution = days.size() % 2
                                        ? days[mid]
                                        : (days[mid - 1] + days[mid]) / 2.0;
    }
    return s;
  };

  OutcomesReport report;
  report.horizon_days = horizon_days;
  report.treatment = summarize(true);
  report.control = summarize(false);
  return report;
}

} // namespace triage
