#pragma once

#include "triage/case_store.hpp"

#include <map>
#include <vector>

namespace triage {

// Historical base-rate ranking: per-crime six-month finalization rates,
// shrunk toward the office-wide rate with pseudo-count weight m. Uses no
// case-level information beyond the crime category.
struct BaseRateEntry {
  long n = 0;           // historical observations of the category
  double p_raw = 0.0;   // empirical finalization rate
  double p_smoothed = 0.0;
};

struct BaseRateTable {
  Date as_of;
  double global_rate = 0.0;
  double prior_strength = 0.0;
  std::map<std::string, BaseRateEntry> per_crime;

  // p_smoothed of the category; unseen categories get the global rate.
  double score_category(const std::string &category) const;
};

// Builds the table from historical observations strictly before as_of:
// snapshots at `snapshot_cadence_days` strides from train_start, keeping
// only those whose full label horizon closes by as_of (same finalization
// definition and censoring rule as model training). Observations cover all
// units. Throws DataError when no labeled history exists.
BaseRateTable build_table(const CaseStore &store, Date as_of,
                          double prior_strength, Date train_start,
                          int snapshot_cadence_days = 7,
                          int horizon_days = kDaysPerHalfYear);

// Convenience overload anchored at the store's earliest opening.
BaseRateTable build_table(const CaseStore &store, Date as_of,
                          double prior_strength);

// One score per case, by table lookup; pure.
std::vector<double> score_baseline(const BaseRateTable &table,
                                   const CaseStore &store,
                                   const std::vector<size_t> &case_indices);

} // namespace triage
