#pragma once

#include "triage/baseline.hpp"
#include "triage/models.hpp"

#include <map>
#include <string>
#include <vector>

namespace triage {

struct ModelSpec {
  ModelFamily family = ModelFamily::random_forest;
  Hyperparams hp;
  uint64_t seed = 0;
  std::string tag; // empty -> hp.tag(family)

  std::string effective_tag() const {
    return tag.empty() ? hp.tag(family) : tag;
  }
};

// Rolling temporal evaluation plan. Weekly prediction dates; at each date
// models are trained on observation snapshots whose label horizon has fully
// elapsed, then score the unit's open cases.
struct EvaluationPlan {
  Unit unit = Unit::MAT;
  std::vector<Date> prediction_dates; // strictly increasing
  int label_horizon_days = kDaysPerHalfYear;
  Date train_start;
  int k_top = 300;
  int k_bottom = 1000;
  std::vector<ModelSpec> model_specs;
  bool include_dummy = true;
  bool include_empirical = true;

  uint64_t seed = 1;              // dummy scoring / snapshot subsampling
  int snapshot_cadence_days = 28; // training observation stride
  int max_cases_per_snapshot = 0; // 0 = keep all open cases per snapshot
  int refit_every = 1;            // refit cadence in prediction dates
  double baseline_prior = 20.0;
  int max_crime_categories = 40;
  int min_history_days = 365; // burn-in between train_start and first date
  int n_threads = 1;

  void validate(const CaseStore &store) const; // throws ConfigError
};

struct RankedEntry {
  size_t case_index = 0;
  double score = 0.0;
  uint8_t label = 0;
};

// Full ranking of the unit's open cases for one (date, model) cell, sorted
// by score descending with ties broken by older opened_at then case_id.
struct RankedList {
  Date as_of;
  std::string model_tag;
  std::vector<RankedEntry> entries;
  bool labels_realized = false;
};

struct WeekMetrics {
  Date as_of;
  std::string model_tag;
  double precision = 0.0;
  double recall = 0.0;
  int k_requested = 0;
  int k_used = 0;
  bool shortfall = false;      // fewer open cases than k
  bool zero_positives = false; // recall denominator was empty
};

struct GroupImportanceRow {
  Date as_of;
  std::string model_tag;
  std::map<std::string, double> by_group;
};

struct PlanResult {
  EvaluationPlan plan;
  std::vector<std::string> model_tags; // spec order, then dummy, empirical
  // date-major, model-minor; parallel vectors.
  std::vector<RankedList> lists;
  std::vector<WeekMetrics> metrics;
  std::vector<GroupImportanceRow> grouped_importance; // refit dates only

  const RankedList *find_list(Date as_of, const std::string &tag) const;
  double mean_precision(const std::string &tag) const;
  std::vector<const WeekMetrics *> metrics_for(const std::string &tag) const;
};

// Executes the plan. Training data never reaches past each prediction date,
// and all randomness is derived from plan/spec seeds, so results are
// reproducible and identical on any store that agrees up to
// last prediction date + horizon.
PlanResult run_plan(const CaseStore &store, const EvaluationPlan &plan);

// Share of realized positives among the top min(k, size) entries.
double precision_at_k(const RankedList &list, int k);
// Positives in the top k over positives in the whole scored population;
// zero-positive populations score 0 (flagged in WeekMetrics).
double recall_at_k(const RankedList &list, int k);

enum class Grouping { municipality, crime_category };

struct SubgroupRow {
  std::string group;
  size_t n_scored = 0;
  size_t n_top = 0;
  double exposure = 0.0;  // top-K share minus population share
  double precision = 0.0; // within the group's top-K slice
  double recall = 0.0;    // group positives captured in top-K
  bool low_support = false;
};

std::vector<SubgroupRow> subgroup_diagnostics(const CaseStore &store,
                                              const RankedList &list, int k,
                                              Grouping grouping,
                                              int min_support = 20);

// Best spec per family by mean precision@k_top; ties prefer fewer trees,
// shallower depth, smaller l2, then spec order.
std::map<ModelFamily, ModelSpec>
select_best_per_family(const PlanResult &result);

} // namespace triage
