#pragma once

#include "triage/harness.hpp"
#include "triage/prescription.hpp"
#include "triage/rct.hpp"
#include "triage/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace triage {

// ---------------------------------------------------------------------------
// Ranked-list artifacts
// ---------------------------------------------------------------------------

// Columns: as_of, rank, case_id, score, label ("" when not realized).
void save_ranked_csv(const CaseStore &store, const RankedList &list,
                     const std::filesystem::path &path);
RankedList load_ranked_csv(const CaseStore &store,
                           const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// Pipeline configuration
// ---------------------------------------------------------------------------

// One master seed drives every stage through fixed derivation streams
// (synth, plan, model specs, weekly RCT assignment).
struct PipelineConfig {
  uint64_t master_seed = 7;
  std::optional<SynthConfig> synth;                 // generate a store...
  std::optional<std::filesystem::path> store_dir;   // ...or load one
  Unit unit = Unit::MAT;

  // Plan shape; prediction dates are the last `n_weeks` weekly strides
  // ending at extraction_date - horizon, unless given explicitly.
  int n_weeks = 8;
  std::vector<Date> prediction_dates;
  std::optional<Date> train_start; // default: earliest opening
  int label_horizon_days = kDaysPerHalfYear;
  int k_top = 300;
  int k_bottom = 1000;
  int snapshot_cadence_days = 28;
  int max_cases_per_snapshot = 0;
  int refit_every = 1;
  double baseline_prior = 20.0;
  int max_crime_categories = 40;
  int min_history_days = 365;
  int n_threads = 1;
  std::vector<ModelSpec> model_specs; // empty -> default grid
  bool include_dummy = true;
  bool include_empirical = true;

  std::filesystem::path penalties_path;
  PrescriptionRule prescription_rule = PrescriptionRule::t_mean;

  bool rct_enabled = false;
  int rct_weeks = 6;
  int rct_cohort_size = 600;

  std::filesystem::path out_dir;
};

// require_source=false admits plan-only files (evaluate CLI) where the
// store comes from the command line instead of the config.
PipelineConfig pipeline_config_from_json(const std::filesystem::path &path,
                                         bool require_source = true);

// Default model grid used when the config lists none: one spec per family
// from the declared hyperparameter grid, seeds derived from master_seed.
std::vector<ModelSpec> default_model_specs(uint64_t master_seed);

EvaluationPlan make_plan(const PipelineConfig &config, const CaseStore &store);

// Metrics, grouped importance, best-model summary, subgroup diagnostics and
// per-week ranked lists under eval_dir.
void write_eval_artifacts(const CaseStore &store, const PlanResult &result,
                          const std::filesystem::path &eval_dir);

// ---------------------------------------------------------------------------
// run-all
// ---------------------------------------------------------------------------

struct Artifact {
  std::string path; // relative to out_dir
  std::string sha256;
  uint64_t bytes = 0;
};

struct RunAllResult {
  std::vector<Artifact> manifest;
  std::filesystem::path manifest_path;
};

// Executes synth/ingest -> evaluate -> prescribe -> (optional) rct ->
// report, writing every artifact under config.out_dir and a manifest.json
// hashing each one. Fully deterministic for a fixed (config, master seed).
RunAllResult run_all(const PipelineConfig &config);

// Aggregated tables from an evaluate/prescribe output directory:
// model-average precision, prescription counts and shares, threshold
// sensitivity, plus per-week series. Returns the files written.
std::vector<std::filesystem::path>
report_tables(const std::filesystem::path &results_dir,
              const std::filesystem::path &out_dir);

std::string sha256_file(const std::filesystem::path &path);

} // namespace triage
