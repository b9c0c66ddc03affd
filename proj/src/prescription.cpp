#include "triage/prescription.hpp"

#include "triage/csv.hpp"

#include <algorithm>
#include <cmath>

namespace triage {

namespace {
constexpr std::string_view kKindNames[3] = {"fine_only", "rights_only",
                                            "prison"};
constexpr std::string_view kRuleNames[3] = {"min", "mean", "max"};
} // namespace

std::string_view penalty_kind_name(PenaltyKind k) {
  return kKindNames[static_cast<int>(k)];
}

std::optional<PenaltyKind> parse_penalty_kind(std::string_view s) {
  for (int i = 0; i < 3; ++i)
    if (s == kKindNames[i])
      return static_cast<PenaltyKind>(i);
  return std::nullopt;
}

std::string_view rule_name(PrescriptionRule r) {
  return kRuleNames[static_cast<int>(r)];
}

std::optional<PrescriptionRule> parse_rule(std::string_view s) {
  for (int i = 0; i < 3; ++i)
    if (s == kRuleNames[i])
      return static_cast<PrescriptionRule>(i);
  return std::nullopt;
}

std::optional<double> subtype_period(const CrimeSubtype &s) {
  if (s.imprescriptible)
    return std::nullopt;
  switch (s.penalty_kind) {
  case PenaltyKind::fine_only:
    return 1.0;
  case PenaltyKind::rights_only:
    return 2.0;
  case PenaltyKind::prison: {
    if (!s.prison_min_years || !s.prison_max_years)
      throw DataError("subtype " + s.category + "/" + s.subtype_id +
                      ": prison penalty without term bounds");
    double lo = *s.prison_min_years, hi = *s.prison_max_years;
    if (lo <= 0 || hi < lo)
      throw DataError("subtype " + s.category + "/" + s.subtype_id +
                      ": invalid prison term bounds");
    return std::max(3.0, (lo + hi) / 2.0);
  }
  }
  return std::nullopt;
}

PrescriptionThresholds
category_thresholds(const std::vector<CrimeSubtype> &subtypes) {
  if (subtypes.empty())
    throw DataError("category_thresholds: empty subtype list");
  PrescriptionThresholds t;
  t.category = subtypes.front().category;
  t.subtype_count = static_cast<int>(subtypes.size());
  std::vector<double> periods;
  for (const auto &s : subtypes)
    if (auto p = subtype_period(s))
      periods.push_back(*p);
  if (periods.empty()) {
    t.all_imprescriptible = true;
    return t;
  }
  t.t_min_years = *std::min_element(periods.begin(), periods.end());
  t.t_max_years = *std::max_element(periods.begin(), periods.end());
  double sum = 0;
  for (double p : periods)
    sum += p;
  t.t_mean_years = sum / static_cast<double>(periods.size());
  return t;
}

PenaltyTable load_penalty_table(const std::filesystem::path &path) {
  CsvReader reader(path);
  for (const char *col :
       {"category", "subtype_id", "penalty_kind", "prison_min_years",
        "prison_max_years", "imprescriptible"})
    if (reader.column(col) < 0)
      throw DataError(path.string() + ": missing column '" +
                      std::string(col) + "'");

  PenaltyTable table;
  CsvRow row;
  auto field = [&](const char *name) -> const std::string & {
    return row.fields[reader.column(name)];
  };
  while (reader.next(row)) {
    if (row.fields.size() != reader.header().size())
      throw DataError(path.string() + ":" + std::to_string(row.line) +
                      ": wrong field count");
    const std::string &category = field("category");
    const std::string &kind_str = field("penalty_kind");
    if (category.empty())
      throw DataError(path.string() + ":" + std::to_string(row.line) +
                      ": missing category");
    if (kind_str == "unlegislated") {
      table.unlegislated.insert(category);
      continue;
    }
    CrimeSubtype s;
    s.category = category;
    s.subtype_id = field("subtype_id");
    auto kind = parse_penalty_kind(kind_str);
    if (!kind)
      throw DataError(path.string() + ":" + std::to_string(row.line) +
                      ": unknown penalty_kind '" + kind_str + "'");
    s.penalty_kind = *kind;
    auto parse_years = [&](const std::string &v) -> std::optional<double> {
      if (v.empty())
        return std::nullopt;
      try {
        return std::stod(v);
      } catch (...) {
        throw DataError(path.string() + ":" + std::to_string(row.line) +
                        ": bad year value '" + v + "'");
      }
    };
    s.prison_min_years = parse_years(field("prison_min_years"));
    s.prison_max_years = parse_years(field("prison_max_years"));
    const std::string &impr = field("imprescriptible");
    s.imprescriptible = impr == "true" || impr == "1";
    subtype_period(s); // validates bounds early
    table.subtypes[category].push_back(std::move(s));
  }
  for (const auto &[category, subs] : table.subtypes)
    table.thresholds.emplace(category, category_thresholds(subs));
  return table;
}

std::vector<std::string> missing_categories(const CaseStore &store,
                                            const PenaltyTable &table) {
  std::set<std::string> seen;
  for (size_t i = 0; i < store.case_count(); ++i)
    seen.insert(store.case_at(i).crime_category);
  std::vector<std::string> missing;
  for (const auto &cat : seen)
    if (!table.covers(cat) && !table.unlegislated.count(cat))
      missing.push_back(cat);
  return missing;
}

PrescriptionScreen flag_prescribed(const CaseStore &store,
                                   const RankedList &ranked,
                                   const PenaltyTable &table,
                                   PrescriptionRule rule, int k_bottom,
                                   Date as_of) {
  if (k_bottom <= 0)
    throw ConfigError("flag_prescribed: k_bottom must be positive");
  PrescriptionScreen screen;
  screen.as_of = as_of;
  screen.rule = rule;
  screen.k_bottom = k_bottom;
  screen.tail_size = static_cast<int>(
      std::min<size_t>(k_bottom, ranked.entries.size()));

  std::set<std::string> warned;
  // Walk the tail from the lowest score upward.
  for (int i = 0; i < screen.tail_size; ++i) {
    size_t pos = ranked.entries.size() - 1 - static_cast<size_t>(i);
    const RankedEntry &entry = ranked.entries[pos];
    const CaseRecord &rec = store.case_at(entry.case_index);
    auto it = table.thresholds.find(rec.crime_category);
    if (it == table.thresholds.end()) {
      if (warned.insert(rec.crime_category).second)
        screen.warnings.push_back(
            "no prescription thresholds for category " + rec.crime_category +
            (table.unlegislated.count(rec.crime_category)
                 ? " (declared unlegislated)"
                 : ""));
      continue;
    }
    if (it->second.all_imprescriptible)
      continue;
    double years = 0.0;
    switch (rule) {
    case PrescriptionRule::t_min:
      years = it->second.t_min_years;
      break;
    case PrescriptionRule::t_mean:
      years = it->second.t_mean_years;
      break;
    case PrescriptionRule::t_max:
      years = it->second.t_max_years;
      break;
    }
    int age = as_of - rec.opened_at;
    if (static_cast<double>(age) >= years * 365.0) {
      FlaggedCase f;
      f.case_index = entry.case_index;
      f.score = entry.score;
      f.rank = static_cast<int>(pos) + 1;
      f.age_days = age;
      f.threshold_years = years;
      screen.flagged.push_back(f);
    }
  }
  return screen;
}

} // namespace triage
