#pragma once

#include "triage/case_store.hpp"

#include <filesystem>
#include <utility>
#include <vector>

namespace triage {

// Configuration for the synthetic register generator. Rates are means per
// 30.44-day month; negative rate fields are derived from the arrival rate.
// Generation is fully determined by `seed` (fixed integer RNG, see rng.hpp).
struct SynthConfig {
  uint64_t seed = 7;
  int n_cases = 0; // drives arrivals when monthly_arrivals <= 0
  Date span_start = Date::from_civil(2020, 1, 1);
  Date span_end = Date::from_civil(2023, 12, 31);
  double monthly_arrivals = 0.0;
  double monthly_closures = -1.0;    // formal closures; -1 -> 0.45 * arrivals
  double monthly_alternative = -1.0; // alternative mechanism; -1 -> 0.10 * arrivals
  double monthly_transfers = -1.0;   // unit transfers; -1 -> 0.50 * closures
  std::vector<std::pair<std::string, double>> crime_mix; // empty -> default mix
  // Strength of the planted "recent activity => resolution" signal. Zero
  // makes finalization independent of everything the features can see.
  double activity_effect = 1.0;
  int lawyer_count = 40;
  int unit_count = 5; // first N of MAT, UTMC, UIE, OEMASC, UID
  // Fraction of arrivals whose intake unit is MAT; the rest spread uniformly
  // over the remaining active units.
  double mat_intake_share = 0.75;

  void validate() const; // throws ConfigError
};

SynthConfig synth_config_from_json(const std::filesystem::path &path);

// Deterministic for a fixed config: the same seed yields the same store,
// byte-identical when exported.
CaseStore generate_store(const SynthConfig &config);

// Writes <out_dir>/cases.csv and <out_dir>/events.csv.
void generate(const SynthConfig &config, const std::filesystem::path &out_dir);

// Returns a copy in which round(fraction * open_case_count) open cases,
// chosen by seeded shuffle, have their whole history shifted back so each
// is older than min_age_days with no event in the trailing min_age_days
// window. The extraction date of the original store is preserved.
CaseStore plant_prescription_tail(const CaseStore &store, double fraction,
                                  int min_age_days, uint64_t seed = 0);

} // namespace triage
