#pragma once

#include "triage/case_store.hpp"
#include "triage/harness.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace triage {

// Weekly randomized cohort assignment with once-only enrollment. The walk
// goes down the ranking, skipping cases already in the ledger, until the
// cohort is filled; the fill is then split into equal arms by seeded
// permutation.

struct CohortMember {
  size_t case_index = 0;
  std::string case_id;
  int rank = 0; // 1-based rank in the source list
};

struct RctCohort {
  int week_index = 0;
  Date as_of;
  uint64_t seed = 0;
  std::vector<CohortMember> treatment, control;
  int replacements_used = 0; // ledger members skipped during the walk
  bool shortfall = false;    // eligible pool was smaller than the target
};

RctCohort assign_week(const CaseStore &store, const RankedList &ranked,
                      const std::set<std::string> &ledger, int week_index,
                      uint64_t seed, int cohort_size = 600);

// Append-only enrollment ledger, one "case_id,week_index" line per case.
struct Ledger {
  std::set<std::string> enrolled;
  int next_week_index = 0;

  static Ledger load(const std::filesystem::path &path); // absent file -> empty
  static void append(const std::filesystem::path &path,
                     const RctCohort &cohort);
};

// Cohort CSV: case_id, rank, arm, week_index.
void save_cohort_csv(const RctCohort &cohort,
                     const std::filesystem::path &path);
RctCohort load_cohort_csv(const CaseStore &store,
                          const std::filesystem::path &path);

struct ArmSummary {
  int n = 0;
  int resolved = 0;
  double resolution_rate = 0.0;
  std::optional<double> median_days_to_resolution; // among resolved
};

struct OutcomesReport {
  int horizon_days = 0;
  ArmSummary treatment, control;
};

// Descriptive per-arm outcomes over `horizon_days` after each cohort's
// as-of date; resolution means the case finalized (closed or left `unit`).
// Censored cases count as unresolved. Throws DataError when the store's
// data horizon ends before any cohort's follow-up window.
OutcomesReport outcomes_report(const CaseStore &store,
                               const std::vector<RctCohort> &cohorts,
                               int horizon_days = kDaysPerHalfYear,
                               Unit unit = Unit::MAT);

} // namespace triage
