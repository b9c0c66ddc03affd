#include "triage/harness.hpp"

#include "triage/labels.hpp"
#include "triage/rng.hpp"

#include <algorithm>
#include <set>

namespace triage {

void EvaluationPlan::validate(const CaseStore &store) const {
  if (prediction_dates.empty())
    throw ConfigError("plan: no prediction dates");
  for (size_t i = 1; i < prediction_dates.size(); ++i)
    if (prediction_dates[i] <= prediction_dates[i - 1])
      throw ConfigError("plan: prediction dates must be strictly increasing");
  if (label_horizon_days <= 0 || k_top <= 0 || k_bottom <= 0)
    throw ConfigError("plan: horizon and k values must be positive");
  if (prediction_dates.back() + label_horizon_days > store.extraction_date())
    throw ConfigError(
        "plan: last prediction date " + prediction_dates.back().to_string() +
        " + horizon exceeds the store's data horizon " +
        store.extraction_date().to_string() +
        " (only fully observable weeks are evaluated)");
  if (prediction_dates.front() < train_start + min_history_days)
    throw ConfigError("plan: first prediction date needs at least " +
                      std::to_string(min_history_days) +
                      " days of history after train_start");
  if (snapshot_cadence_days <= 0 || refit_every <= 0)
    throw ConfigError("plan: cadence fields must be positive");
  std::set<std::string> tags;
  for (const auto &spec : model_specs) {
    std::string t = spec.effective_tag();
    if (t == "dummy" || t == "empirical" || !tags.insert(t).second)
      throw ConfigError("plan: duplicate or reserved model tag: " + t);
  }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double precision_at_k(const RankedList &list, int k) {
  if (!list.labels_realized)
    throw DataError("precision_at_k: labels not realized for " +
                    list.as_of.to_string());
  size_t k_used = std::min<size_t>(k, list.entries.size());
  if (k_used == 0)
    return 0.0;
  double positives = 0;
  for (size_t i = 0; i < k_used; ++i)
    positives += list.entries[i].label;
  return positives / static_cast<double>(k_used);
}

double recall_at_k(const RankedList &list, int k) {
  if (!list.labels_realized)
    throw DataError("recall_at_k: labels not realized for " +
                    list.as_of.to_string());
  size_t k_used = std::min<size_t>(k, list.entries.size());
  double top = 0, total = 0;
  for (size_t i = 0; i < list.entries.size(); ++i) {
    total += list.entries[i].label;
    if (i < k_used)
      top += list.entries[i].label;
  }
  return total > 0 ? top / total : 0.0;
}

std::vector<SubgroupRow> subgroup_diagnostics(const CaseStore &store,
                                              const RankedList &list, int k,
                                              Grouping grouping,
                                              int min_support) {
  if (!list.labels_realized)
    throw DataError("subgroup_diagnostics: labels not realized");
  size_t k_used = std::min<size_t>(k, list.entries.size());

  struct Tally {
    size_t n = 0, n_top = 0;
    long pos = 0, pos_top = 0;
  };
  std::map<std::string, Tally> tallies;
  for (size_t i = 0; i < list.entries.size(); ++i) {
    const auto &e = list.entries[i];
    const CaseRecord &rec = store.case_at(e.case_index);
    const std::string &key = grouping == Grouping::municipality
                                 ? rec.municipality
                                 : rec.crime_category;
    auto &t = tallies[key];
    ++t.n;
    t.pos += e.label;
    if (i < k_used) {
      ++t.n_top;
      t.pos_top += e.label;
    }
  }

  std::vector<SubgroupRow> rows;
  const double n_all = static_cast<double>(list.entries.size());
  for (const auto &[key, t] : tallies) {
    SubgroupRow row;
    row.group = key;
    row.n_scored = t.n;
    row.n_top = t.n_top;
    double top_share =
        k_used > 0 ? static_cast<double>(t.n_top) / static_cast<double>(k_used)
                   : 0.0;
    row.exposure = top_share - static_cast<double>(t.n) / n_all;
    row.precision = t.n_top > 0 ? static_cast<double>(t.pos_top) /
                                      static_cast<double>(t.n_top)
                                : 0.0;
    row.recall =
        t.pos > 0 ? static_cast<double>(t.pos_top) / static_cast<double>(t.pos)
                  : 0.0;
    row.low_support = t.n < static_cast<size_t>(min_support);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// PlanResult helpers
// ---------------------------------------------------------------------------

const RankedList *PlanResult::find_list(Date as_of,
                                        const std::string &tag) const {
  for (const auto &l : lists)
    if (l.as_of == as_of && l.model_tag == tag)
      return &l;
  return nullptr;
}

double PlanResult::mean_precision(const std::string &tag) const {
  double sum = 0;
  int n = 0;
  for (const auto &m : metrics)
    if (m.model_tag == tag) {
      sum += m.precision;
      ++n;
    }
  return n > 0 ? sum / n : 0.0;
}

std::vector<const WeekMetrics *>
PlanResult::metrics_for(const std::string &tag) const {
  std::vector<const WeekMetrics *> out;
  for (const auto &m : metrics)
    if (m.model_tag == tag)
      out.push_back(&m);
  return out;
}

// ---------------------------------------------------------------------------
// run_plan
// ---------------------------------------------------------------------------

namespace {

// Rows cached against the vocabulary-free base schema; the crime one-hot
// block is spliced in per training date.
struct CachedRow {
  size_t case_index;
  uint8_t label;
  std::vector<double> base_values;
};

struct SnapshotCache {
  std::vector<Date> dates;
  std::vector<std::vector<CachedRow>> rows; // parallel to dates
};

std::vector<double> splice_onehot(const std::vector<double> &base,
                                  size_t other_pos,
                                  const std::unordered_map<std::string, int>
                                      &vocab_pos,
                                  size_t vocab_size,
                                  const std::string &category) {
  std::vector<double> out;
  out.resize(base.size() + vocab_size);
  std::copy(base.begin(), base.begin() + other_pos, out.begin());
  auto it = vocab_pos.find(category);
  size_t hot = it == vocab_pos.end() ? vocab_size
                                     : static_cast<size_t>(it->second);
  for (size_t v = 0; v <= vocab_size; ++v)
    out[other_pos + v] = v == hot ? 1.0 : 0.0;
  std::copy(base.begin() + other_pos + 1, base.end(),
            out.begin() + other_pos + vocab_size + 1);
  return out;
}

WeekMetrics make_metrics(const RankedList &list, const EvaluationPlan &plan) {
  WeekMetrics m;
  m.as_of = list.as_of;
  m.model_tag = list.model_tag;
  m.k_requested = plan.k_top;
  m.k_used = static_cast<int>(
      std::min<size_t>(plan.k_top, list.entries.size()));
  m.shortfall = m.k_used < plan.k_top;
  m.precision = precision_at_k(list, plan.k_top);
  m.recall = recall_at_k(list, plan.k_top);
  long total_pos = 0;
  for (const auto &e : list.entries)
    total_pos += e.label;
  m.zero_positives = total_pos == 0;
  return m;
}

} // namespace

PlanResult run_plan(const CaseStore &store, const EvaluationPlan &plan) {
  plan.validate(store);

  PlanResult result;
  result.plan = plan;
  for (const auto &spec : plan.model_specs)
    result.model_tags.push_back(spec.effective_tag());
  if (plan.include_dummy)
    result.model_tags.push_back("dummy");
  if (plan.include_empirical)
    result.model_tags.push_back("empirical");

  // Base extractor: schema without crime vocabulary; rows are upgraded to
  // each training date's vocabulary by splicing the one-hot block.
  FeatureSchema base_schema = build_schema(store, plan.train_start, 0);
  const int other_idx = base_schema.index_of("crime_is_OTHER");
  FeatureExtractor base_extractor(store, base_schema);

  SnapshotCache cache;
  Date next_snapshot = plan.train_start;

  // Running base-rate tallies over the same snapshots the models train on.
  struct Tally {
    long n = 0, pos = 0;
  };
  std::map<std::string, Tally> baseline_tallies;
  long baseline_n = 0, baseline_pos = 0;
  size_t baseline_absorbed = 0;

  // Carried between refits.
  std::vector<TrainedModel> fitted(plan.model_specs.size());
  FeatureSchema train_schema;
  std::unordered_map<std::string, int> train_vocab_pos;
  bool have_fit = false;

  for (size_t week = 0; week < plan.prediction_dates.size(); ++week) {
    const Date t = plan.prediction_dates[week];

    // Extend the snapshot cache through t - horizon.
    while (next_snapshot + plan.label_horizon_days <= t) {
      const Date o = next_snapshot;
      std::vector<size_t> open_all;
      for (size_t i = 0; i < store.case_count(); ++i) {
        const auto &rec = store.case_at(i);
        if (rec.opened_at <= o && !store.closed_on_or_before(i, o))
          open_all.push_back(i);
      }
      if (plan.max_cases_per_snapshot > 0 &&
          open_all.size() >
              static_cast<size_t>(plan.max_cases_per_snapshot)) {
        Rng rng(Rng::derive(plan.seed, 0x5a5a0000u ^
                                           static_cast<uint64_t>(o.days())));
        rng.shuffle(open_all);
        open_all.resize(plan.max_cases_per_snapshot);
        std::sort(open_all.begin(), open_all.end());
      }
      std::vector<CachedRow> rows;
      rows.reserve(open_all.size());
      for (size_t idx : open_all) {
        CachedRow row;
        row.case_index = idx;
        Unit u = store.unit_at(idx, o);
        row.label = finalized_within(store, idx, u, o,
                                     plan.label_horizon_days)
                        ? 1
                        : 0;
        row.base_values = base_extractor.extract(idx, o).values;
        rows.push_back(std::move(row));
      }
      cache.dates.push_back(o);
      cache.rows.push_back(std::move(rows));
      next_snapshot += plan.snapshot_cadence_days;
    }

    // Absorb newly observable snapshots into the base-rate tallies.
    while (baseline_absorbed < cache.dates.size() &&
           cache.dates[baseline_absorbed] + plan.label_horizon_days <= t) {
      for (const auto &row : cache.rows[baseline_absorbed]) {
        auto &tl =
            baseline_tallies[store.case_at(row.case_index).crime_category];
        ++tl.n;
        tl.pos += row.label;
        ++baseline_n;
        baseline_pos += row.label;
      }
      ++baseline_absorbed;
    }

    // Refit on schedule.
    const bool refit = !have_fit || (week % plan.refit_every == 0);
    if (refit) {
      train_schema = build_schema(store, t, plan.max_crime_categories);
      train_vocab_pos.clear();
      for (size_t v = 0; v < train_schema.crime_vocab.size(); ++v)
        train_vocab_pos.emplace(train_schema.crime_vocab[v],
                                static_cast<int>(v));

      std::vector<LabeledExample> examples;
      for (size_t s = 0; s < cache.dates.size(); ++s) {
        if (cache.dates[s] + plan.label_horizon_days > t)
          continue;
        for (const auto &row : cache.rows[s]) {
          LabeledExample ex;
          ex.label = row.label;
          ex.observation_date = cache.dates[s];
          ex.x.case_index = row.case_index;
          ex.x.as_of = cache.dates[s];
          ex.x.values = splice_onehot(
              row.base_values, other_idx, train_vocab_pos,
              train_schema.crime_vocab.size(),
              store.case_at(row.case_index).crime_category);
          examples.push_back(std::move(ex));
        }
      }
      for (size_t s = 0; s < plan.model_specs.size(); ++s) {
        const ModelSpec &spec = plan.model_specs[s];
        fitted[s] = fit(spec.family, spec.hp, train_schema, examples,
                        spec.seed, t, plan.n_threads);
        GroupImportanceRow gi;
        gi.as_of = t;
        gi.model_tag = spec.effective_tag();
        gi.by_group = fitted[s].importance_by_group();
        result.grouped_importance.push_back(std::move(gi));
      }
      have_fit = true;
    }

    // Score this week's open cases in the target unit.
    std::vector<size_t> open = store.open_cases(plan.unit, t);
    std::vector<FeatureVector> vectors;
    vectors.reserve(open.size());
    for (size_t idx : open) {
      FeatureVector fv;
      fv.case_index = idx;
      fv.as_of = t;
      fv.values = splice_onehot(base_extractor.extract(idx, t).values,
                                other_idx, train_vocab_pos,
                                train_schema.crime_vocab.size(),
                                store.case_at(idx).crime_category);
      vectors.push_back(std::move(fv));
    }

    std::vector<uint8_t> labels(open.size());
    for (size_t i = 0; i < open.size(); ++i)
      labels[i] = finalized_within(store, open[i], plan.unit, t,
                                   plan.label_horizon_days)
                      ? 1
                      : 0;

    auto emit = [&](const std::string &tag,
                    const std::vector<double> &scores) {
      RankedList list;
      list.as_of = t;
      list.model_tag = tag;
      list.entries.resize(open.size());
      for (size_t i = 0; i < open.size(); ++i)
        list.entries[i] = {open[i], scores[i], labels[i]};
      std::sort(list.entries.begin(), list.entries.end(),
                [&](const RankedEntry &a, const RankedEntry &b) {
                  if (a.score != b.score)
                    return a.score > b.score;
                  Date oa = store.case_at(a.case_index).opened_at;
                  Date ob = store.case_at(b.case_index).opened_at;
                  if (oa != ob)
                    return oa < ob;
                  return a.case_index < b.case_index;
                });
      list.labels_realized = true;
      result.metrics.push_back(make_metrics(list, plan));
      result.lists.push_back(std::move(list));
    };

    for (size_t s = 0; s < plan.model_specs.size(); ++s)
      emit(plan.model_specs[s].effective_tag(), fitted[s].score(vectors));

    if (plan.include_dummy) {
      Hyperparams hp;
      TrainedModel dummy = fit(ModelFamily::dummy, hp, train_schema, {},
                               Rng::derive(plan.seed, 0xd000 + week), t);
      emit("dummy", dummy.score(vectors));
    }
    if (plan.include_empirical) {
      if (baseline_n == 0)
        throw DataError("run_plan: no labeled history for the empirical "
                        "baseline before " +
                        t.to_string());
      BaseRateTable table;
      table.as_of = t;
      table.prior_strength = plan.baseline_prior;
      table.global_rate = static_cast<double>(baseline_pos) /
                          static_cast<double>(baseline_n);
      for (const auto &[cat, tl] : baseline_tallies) {
        BaseRateEntry e;
        e.n = tl.n;
        e.p_raw = static_cast<double>(tl.pos) / static_cast<double>(tl.n);
        e.p_smoothed = (static_cast<double>(tl.n) * e.p_raw +
                        plan.baseline_prior * table.global_rate) /
                       (static_cast<double>(tl.n) + plan.baseline_prior);
        table.per_crime.emplace(cat, e);
      }
      emit("empirical", score_baseline(table, store, open));
    }
  }

  return result;
}

// ---------------------------------------------------------------------------
// Best-per-family selection
// ---------------------------------------------------------------------------

std::map<ModelFamily, ModelSpec>
select_best_per_family(const PlanResult &result) {
  auto depth_key = [](int d) { return d < 0 ? INT32_MAX : d; };
  std::map<ModelFamily, std::pair<double, size_t>> best; // mean, spec index
  for (size_t s = 0; s < result.plan.model_specs.size(); ++s) {
    const ModelSpec &spec = result.plan.model_specs[s];
    double mean = result.mean_precision(spec.effective_tag());
    auto it = best.find(spec.family);
    if (it == best.end()) {
      best.emplace(spec.family, std::make_pair(mean, s));
      continue;
    }
    const ModelSpec &cur = result.plan.model_specs[it->second.second];
    bool better = mean > it->second.first;
    if (mean == it->second.first) {
      auto key = [&](const ModelSpec &m) {
        return std::make_tuple(m.hp.n_trees, depth_key(m.hp.max_depth),
                               m.hp.l2);
      };
      better = key(spec) < key(cur);
    }
    if (better)
      it->second = {mean, s};
  }
  std::map<ModelFamily, ModelSpec> out;
  for (const auto &[fam, pair] : best)
    out.emplace(fam, result.plan.model_specs[pair.second]);
  return out;
}

} // namespace triage
