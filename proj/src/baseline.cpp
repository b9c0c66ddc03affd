#include "triage/baseline.hpp"

#include "triage/labels.hpp"

namespace triage {

double BaseRateTable::score_category(const std::string &category) const {
  auto it = per_crime.find(category);
  return it == per_crime.end() ? global_rate : it->second.p_smoothed;
}

BaseRateTable build_table(const CaseStore &store, Date as_of,
                          double prior_strength, Date train_start,
                          int snapshot_cadence_days, int horizon_days) {
  if (prior_strength < 0)
    throw ConfigError("build_table: prior_strength must be >= 0");

  struct Tally {
    long n = 0;
    long positive = 0;
  };
  std::map<std::string, Tally> tallies;
  long total_n = 0, total_pos = 0;

  // Same censoring rule as model training: the whole label window must be
  // observable by as_of.
  for (Date o = train_start; o + horizon_days <= as_of;
       o += snapshot_cadence_days) {
    for (size_t i = 0; i < store.case_count(); ++i) {
      const CaseRecord &rec = store.case_at(i);
      if (rec.opened_at > o || store.closed_on_or_before(i, o))
        continue;
      Unit u = store.unit_at(i, o);
      bool label = finalized_within(store, i, u, o, horizon_days);
      auto &t = tallies[rec.crime_category];
      ++t.n;
      t.positive += label;
      ++total_n;
      total_pos += label;
    }
  }
  if (total_n == 0)
    throw DataError("build_table: no labeled historical observations before " +
                    as_of.to_string());

  BaseRateTable table;
  table.as_of = as_of;
  table.prior_strength = prior_strength;
  table.global_rate =
      static_cast<double>(total_pos) / static_cast<double>(total_n);
  for (const auto &[cat, t] : tallies) {
    BaseRateEntry e;
    e.n = t.n;
    e.p_raw = static_cast<double>(t.positive) / static_cast<double>(t.n);
    // n == 0 yields the global rate exactly (no entry is stored for unseen
    // categories; score_category falls back).
    e.p_smoothed = (static_cast<double>(t.n) * e.p_raw +
                    prior_strength * table.global_rate) /
                   (static_cast<double>(t.n) + prior_strength);
    table.per_crime.emplace(cat, e);
  }
  return table;
}

BaseRateTable build_table(const CaseStore &store, Date as_of,
                          double prior_strength) {
  return build_table(store, as_of, prior_strength, store.min_opened());
}

std::vector<double> score_baseline(const BaseRateTable &table,
                                   const CaseStore &store,
                                   const std::vector<size_t> &case_indices) {
  std::vector<double> out;
  out.reserve(case_indices.size());
  for (size_t idx : case_indices)
    out.push_back(table.score_category(store.case_at(idx).crime_category));
  return out;
}

} // namespace triage
