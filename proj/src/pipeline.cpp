#include "triage/pipeline.hpp"

#include "triage/csv.hpp"
#include "triage/labels.hpp"
#include "triage/rng.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace triage {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string sanitize_tag(const std::string &tag) {
  std::string out = tag;
  for (char &c : out)
    if (c == '/' || c == ' ')
      c = '-';
  return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Ranked-list files
// ---------------------------------------------------------------------------

void save_ranked_csv(const CaseStore &store, const RankedList &list,
                     const fs::path &path) {
  CsvWriter out(path);
  out.write_row({"as_of", "model", "rank", "case_id", "score", "label"});
  for (size_t i = 0; i < list.entries.size(); ++i) {
    const auto &e = list.entries[i];
    out.write_row({list.as_of.to_string(), list.model_tag,
                   std::to_string(i + 1), store.case_at(e.case_index).case_id,
                   fmt_double(e.score),
                   list.labels_realized ? std::to_string(e.label) : ""});
  }
}

RankedList load_ranked_csv(const CaseStore &store, const fs::path &path) {
  CsvReader reader(path);
  for (const char *col : {"as_of", "rank", "case_id", "score"})
    if (reader.column(col) < 0)
      throw DataError(path.string() + ": missing column '" +
                      std::string(col) + "'");
  RankedList list;
  list.labels_realized = true;
  CsvRow row;
  bool first = true;
  while (reader.next(row)) {
    auto field = [&](const char *name) -> const std::string & {
      return row.fields[reader.column(name)];
    };
    if (first) {
      auto d = Date::parse(field("as_of"));
      if (!d)
        throw DataError(path.string() + ": bad as_of date");
      list.as_of = *d;
      if (reader.column("model") >= 0)
        list.model_tag = field("model");
      first = false;
    }
    RankedEntry e;
    auto idx = store.find_case(field("case_id"));
    if (!idx)
      throw NotFoundError(path.string() + ": unknown case_id " +
                          field("case_id"));
    e.case_index = *idx;
    e.score = std::stod(field("score"));
    if (reader.column("label") >= 0 && !field("label").empty())
      e.label = static_cast<uint8_t>(std::stoi(field("label")));
    else
      list.labels_realized = false;
    list.entries.push_back(e);
  }
  return list;
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

std::string sha256_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot hash missing file: " + path.string());
  EVP_MD_CTX *ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    EVP_DigestUpdate(ctx, buf, static_cast<size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    char b[3];
    std::snprintf(b, sizeof(b), "%02x", digest[i]);
    hex += b;
  }
  return hex;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

std::vector<ModelSpec> default_model_specs(uint64_t master_seed) {
  std::vector<ModelSpec> specs;
  auto push = [&](ModelFamily fam, auto mutate) {
    ModelSpec s;
    s.family = fam;
    mutate(s.hp);
    s.seed = Rng::derive(master_seed, 0x10 + specs.size());
    specs.push_back(std::move(s));
  };
  push(ModelFamily::random_forest, [](Hyperparams &hp) {
    hp.n_trees = 100;
    hp.max_depth = 10;
    hp.min_leaf = 5;
  });
  push(ModelFamily::extra_trees, [](Hyperparams &hp) {
    hp.n_trees = 100;
    hp.max_depth = 10;
    hp.min_leaf = 5;
  });
  push(ModelFamily::scaled_logistic, [](Hyperparams &hp) { hp.l2 = 0.1; });
  push(ModelFamily::decision_tree, [](Hyperparams &hp) {
    hp.max_depth = 10;
    hp.min_leaf = 20;
  });
  return specs;
}

namespace {

ModelSpec spec_from_json(const nlohmann::json &j, uint64_t master_seed,
                         size_t index) {
  ModelSpec s;
  auto fam = parse_family(j.value("family", ""));
  if (!fam)
    throw ConfigError("config: unknown model family '" +
                      j.value("family", "") + "'");
  s.family = *fam;
  s.hp.n_trees = j.value("n_trees", s.hp.n_trees);
  s.hp.max_depth = j.value("max_depth", s.hp.max_depth);
  s.hp.min_leaf = j.value("min_leaf", s.hp.min_leaf);
  s.hp.max_features = j.value("max_features", s.hp.max_features);
  if (j.contains("bootstrap"))
    s.hp.bootstrap = j.at("bootstrap").get<bool>() ? 1 : 0;
  s.hp.l2 = j.value("l2", s.hp.l2);
  s.hp.tol = j.value("tol", s.hp.tol);
  s.hp.max_iter = j.value("max_iter", s.hp.max_iter);
  s.seed = j.value("seed", Rng::derive(master_seed, 0x10 + index));
  s.tag = j.value("tag", "");
  return s;
}

} // namespace

PipelineConfig pipeline_config_from_json(const fs::path &path,
                                         bool require_source) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ConfigError("invalid JSON in config: " + path.string());
  if (j.value("schema_version", 1) != 1)
    throw ConfigError("config: unsupported schema_version");

  PipelineConfig cfg;
  cfg.master_seed = j.value("master_seed", cfg.master_seed);

  if (j.contains("synth")) {
    // Reuse the synth parser by bouncing the block through a file-free path.
    const auto &sj = j.at("synth");
    SynthConfig sc;
    sc.seed = Rng::derive(cfg.master_seed, 0x5);
    sc.n_cases = sj.value("n_cases", sc.n_cases);
    if (sj.contains("date_span")) {
      auto start = Date::parse(sj.at("date_span").value("start", ""));
      auto end = Date::parse(sj.at("date_span").value("end", ""));
      if (!start || !end)
        throw ConfigError("config: bad synth.date_span");
      sc.span_start = *start;
      sc.span_end = *end;
    }
    sc.monthly_arrivals = sj.value("monthly_arrivals", sc.monthly_arrivals);
    sc.monthly_closures = sj.value("monthly_closures", sc.monthly_closures);
    sc.monthly_alternative =
        sj.value("monthly_alternative", sc.monthly_alternative);
    sc.monthly_transfers =
        sj.value("monthly_transfers", sc.monthly_transfers);
    sc.activity_effect = sj.value("activity_effect", sc.activity_effect);
    sc.lawyer_count = sj.value("lawyer_count", sc.lawyer_count);
    sc.unit_count = sj.value("unit_count", sc.unit_count);
    sc.mat_intake_share = sj.value("mat_intake_share", sc.mat_intake_share);
    if (sj.contains("crime_mix")) {
      std::map<std::string, double> mix =
          sj.at("crime_mix").get<std::map<std::string, double>>();
      sc.crime_mix.assign(mix.begin(), mix.end());
    }
    sc.validate();
    cfg.synth = sc;
  }
  if (j.contains("store"))
    cfg.store_dir = fs::path(j.at("store").get<std::string>());
  if (require_source && !cfg.synth && !cfg.store_dir)
    throw ConfigError("config: need either a synth block or a store path");

  if (j.contains("unit")) {
    auto u = parse_unit(j.at("unit").get<std::string>());
    if (!u)
      throw ConfigError("config: unknown unit");
    cfg.unit = *u;
  }

  if (j.contains("plan")) {
    const auto &pj = j.at("plan");
    cfg.n_weeks = pj.value("n_weeks", cfg.n_weeks);
    cfg.label_horizon_days =
        pj.value("label_horizon_days", cfg.label_horizon_days);
    cfg.k_top = pj.value("k_top", cfg.k_top);
    cfg.k_bottom = pj.value("k_bottom", cfg.k_bottom);
    cfg.snapshot_cadence_days =
        pj.value("snapshot_cadence_days", cfg.snapshot_cadence_days);
    cfg.max_cases_per_snapshot =
        pj.value("max_cases_per_snapshot", cfg.max_cases_per_snapshot);
    cfg.refit_every = pj.value("refit_every", cfg.refit_every);
    cfg.baseline_prior = pj.value("baseline_prior", cfg.baseline_prior);
    cfg.max_crime_categories =
        pj.value("max_crime_categories", cfg.max_crime_categories);
    cfg.min_history_days =
        pj.value("min_history_days", cfg.min_history_days);
    cfg.n_threads = pj.value("n_threads", cfg.n_threads);
    cfg.include_dummy = pj.value("include_dummy", cfg.include_dummy);
    cfg.include_empirical =
        pj.value("include_empirical", cfg.include_empirical);
    if (pj.contains("train_start")) {
      auto d = Date::parse(pj.at("train_start").get<std::string>());
      if (!d)
        throw ConfigError("config: bad plan.train_start");
      cfg.train_start = *d;
    }
    if (pj.contains("prediction_dates"))
      for (const auto &ds : pj.at("prediction_dates")) {
        auto d = Date::parse(ds.get<std::string>());
        if (!d)
          throw ConfigError("config: bad prediction date");
        cfg.prediction_dates.push_back(*d);
      }
    if (pj.contains("models")) {
      size_t i = 0;
      for (const auto &mj : pj.at("models"))
        cfg.model_specs.push_back(spec_from_json(mj, cfg.master_seed, i++));
    }
  }
  if (cfg.model_specs.empty())
    cfg.model_specs = default_model_specs(cfg.master_seed);

  if (j.contains("penalties"))
    cfg.penalties_path = fs::path(j.at("penalties").get<std::string>());
  if (j.contains("prescription_rule")) {
    auto r = parse_rule(j.at("prescription_rule").get<std::string>());
    if (!r)
      throw ConfigError("config: unknown prescription_rule");
    cfg.prescription_rule = *r;
  }
  if (j.contains("rct")) {
    const auto &rj = j.at("rct");
    cfg.rct_enabled = rj.value("enabled", false);
    cfg.rct_weeks = rj.value("weeks", cfg.rct_weeks);
    cfg.rct_cohort_size = rj.value("cohort_size", cfg.rct_cohort_size);
  }
  if (j.contains("out_dir"))
    cfg.out_dir = fs::path(j.at("out_dir").get<std::string>());
  return cfg;
}

EvaluationPlan make_plan(const PipelineConfig &config,
                         const CaseStore &store) {
  EvaluationPlan plan;
  plan.unit = config.unit;
  plan.label_horizon_days = config.label_horizon_days;
  plan.train_start = config.train_start.value_or(store.min_opened());
  plan.k_top = config.k_top;
  plan.k_bottom = config.k_bottom;
  plan.model_specs = config.model_specs;
  plan.include_dummy = config.include_dummy;
  plan.include_empirical = config.include_empirical;
  plan.seed = Rng::derive(config.master_seed, 0x2);
  plan.snapshot_cadence_days = config.snapshot_cadence_days;
  plan.max_cases_per_snapshot = config.max_cases_per_snapshot;
  plan.refit_every = config.refit_every;
  plan.baseline_prior = config.baseline_prior;
  plan.max_crime_categories = config.max_crime_categories;
  plan.min_history_days = config.min_history_days;
  plan.n_threads = config.n_threads;

  if (!config.prediction_dates.empty()) {
    plan.prediction_dates = config.prediction_dates;
  } else {
    Date last = store.extraction_date() - plan.label_horizon_days;
    for (int w = config.n_weeks - 1; w >= 0; --w)
      plan.prediction_dates.push_back(last - 7 * w);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

namespace {

void write_metrics_csv(const PlanResult &result, const fs::path &path) {
  CsvWriter out(path);
  out.write_row({"as_of", "model", "family", "precision", "recall",
                 "k_requested", "k_used", "shortfall", "zero_positives"});
  auto family_of = [&](const std::string &tag) -> std::string {
    for (const auto &spec : result.plan.model_specs)
      if (spec.effective_tag() == tag)
        return std::string(family_name(spec.family));
    return tag; // dummy / empirical
  };
  for (const auto &m : result.metrics)
    out.write_row({m.as_of.to_string(), m.model_tag, family_of(m.model_tag),
                   fmt_double(m.precision), fmt_double(m.recall),
                   std::to_string(m.k_requested), std::to_string(m.k_used),
                   m.shortfall ? "true" : "false",
                   m.zero_positives ? "true" : "false"});
}

void write_importance_csv(const PlanResult &result, const fs::path &path) {
  CsvWriter out(path);
  out.write_row({"as_of", "model", "group", "importance"});
  for (const auto &row : result.grouped_importance)
    for (const auto &[group, value] : row.by_group)
      out.write_row({row.as_of.to_string(), row.model_tag, group,
                     fmt_double(value)});
}

void write_best_models_csv(const PlanResult &result, const fs::path &path) {
  CsvWriter out(path);
  out.write_row({"family", "model", "mean_precision"});
  for (const auto &[family, spec] : select_best_per_family(result))
    out.write_row({std::string(family_name(family)), spec.effective_tag(),
                   fmt_double(result.mean_precision(spec.effective_tag()))});
  if (result.plan.include_dummy)
    out.write_row({"dummy", "dummy", fmt_double(result.mean_precision("dummy"))});
  if (result.plan.include_empirical)
    out.write_row({"empirical", "empirical",
                   fmt_double(result.mean_precision("empirical"))});
}

void write_subgroup_csv(const CaseStore &store, const PlanResult &result,
                        const std::string &tag, Grouping grouping,
                        const fs::path &path) {
  CsvWriter out(path);
  out.write_row({"as_of", "group", "n_scored", "n_top", "exposure",
                 "precision", "recall", "low_support"});
  for (const auto &list : result.lists) {
    if (list.model_tag != tag)
      continue;
    for (const auto &row :
         subgroup_diagnostics(store, list, result.plan.k_top, grouping))
      out.write_row({list.as_of.to_string(), row.group,
                     std::to_string(row.n_scored), std::to_string(row.n_top),
                     fmt_double(row.exposure), fmt_double(row.precision),
                     fmt_double(row.recall),
                     row.low_support ? "true" : "false"});
  }
}

std::string best_overall_tag(const PlanResult &result) {
  auto best = select_best_per_family(result);
  std::string tag;
  double best_mean = -1;
  for (const auto &[family, spec] : best) {
    double mean = result.mean_precision(spec.effective_tag());
    if (mean > best_mean) {
      best_mean = mean;
      tag = spec.effective_tag();
    }
  }
  if (tag.empty())
    tag = result.model_tags.front();
  return tag;
}

} // namespace

void write_eval_artifacts(const CaseStore &store, const PlanResult &result,
                          const fs::path &eval_dir) {
  fs::create_directories(eval_dir);
  write_metrics_csv(result, eval_dir / "metrics.csv");
  write_importance_csv(result, eval_dir / "importance_by_group.csv");
  write_best_models_csv(result, eval_dir / "best_models.csv");
  const std::string best_tag = best_overall_tag(result);
  write_subgroup_csv(store, result, best_tag, Grouping::municipality,
                     eval_dir / "subgroup_municipality.csv");
  write_subgroup_csv(store, result, best_tag, Grouping::crime_category,
                     eval_dir / "subgroup_crime_category.csv");
  for (const auto &list : result.lists) {
    fs::path dir = eval_dir / "ranked" / sanitize_tag(list.model_tag);
    fs::create_directories(dir);
    save_ranked_csv(store, list, dir / (list.as_of.to_string() + ".csv"));
  }
}

// ---------------------------------------------------------------------------
// report_tables
// ---------------------------------------------------------------------------

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int col(const std::string &name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return static_cast<int>(i);
    return -1;
  }
};

CsvTable read_csv(const fs::path &path) {
  CsvReader reader(path);
  CsvTable t;
  t.header = reader.header();
  CsvRow row;
  while (reader.next(row))
    t.rows.push_back(row.fields);
  return t;
}

} // namespace

std::vector<fs::path> report_tables(const fs::path &results_dir,
                                    const fs::path &out_dir) {
  fs::path metrics_path = results_dir / "eval" / "metrics.csv";
  if (!fs::exists(metrics_path))
    throw DataError("report_tables: no evaluation results at " +
                    metrics_path.string());
  fs::create_directories(out_dir);
  std::vector<fs::path> written;

  CsvTable metrics = read_csv(metrics_path);
  if (metrics.rows.empty())
    throw DataError("report_tables: empty metrics at " +
                    metrics_path.string());
  int c_model = metrics.col("model"), c_prec = metrics.col("precision");
  int c_recall = metrics.col("recall"), c_date = metrics.col("as_of");

  // Per-model averages.
  std::map<std::string, std::pair<double, int>> prec_sum, recall_sum;
  for (const auto &r : metrics.rows) {
    auto &p = prec_sum[r[c_model]];
    p.first += std::stod(r[c_prec]);
    p.second += 1;
    auto &q = recall_sum[r[c_model]];
    q.first += std::stod(r[c_recall]);
    q.second += 1;
  }

  // Best tag per family from the evaluate stage.
  std::map<std::string, std::string> best_by_family; // family -> tag
  fs::path best_path = results_dir / "eval" / "best_models.csv";
  if (fs::exists(best_path)) {
    CsvTable best = read_csv(best_path);
    int bf = best.col("family"), bm = best.col("model");
    for (const auto &r : best.rows)
      best_by_family[r[bf]] = r[bm];
  } else {
    for (const auto &[tag, sum] : prec_sum)
      best_by_family[tag] = tag;
  }

  {
    fs::path p = out_dir / "table_precision.csv";
    CsvWriter out(p);
    out.write_row({"model_type", "model", "avg_precision_at_k",
                   "avg_recall_at_k", "weeks"});
    for (const auto &[family, tag] : best_by_family) {
      const auto &ps = prec_sum.at(tag);
      const auto &rs = recall_sum.at(tag);
      out.write_row({family, tag, fmt_short(ps.first / ps.second),
                     fmt_short(rs.first / rs.second),
                     std::to_string(ps.second)});
    }
    written.push_back(p);
  }
  {
    fs::path p = out_dir / "precision_series.csv";
    CsvWriter out(p);
    out.write_row({"as_of", "model", "precision"});
    for (const auto &r : metrics.rows)
      out.write_row({r[c_date], r[c_model], r[c_prec]});
    written.push_back(p);
  }

  // Prescription aggregation when the counts file exists.
  fs::path counts_path = results_dir / "prescription" / "counts.csv";
  if (fs::exists(counts_path)) {
    CsvTable counts = read_csv(counts_path);
    int k_model = counts.col("model"), k_rule = counts.col("rule");
    int k_flagged = counts.col("flagged"), k_tail = counts.col("tail_size");
    int k_date = counts.col("as_of");
    struct Agg {
      double flagged = 0, tail = 0;
      int weeks = 0;
    };
    std::map<std::pair<std::string, std::string>, Agg> agg;
    for (const auto &r : counts.rows) {
      auto &a = agg[{r[k_model], r[k_rule]}];
      a.flagged += std::stod(r[k_flagged]);
      a.tail += std::stod(r[k_tail]);
      a.weeks += 1;
    }
    {
      fs::path p = out_dir / "table_prescription_mean_rule.csv";
      CsvWriter out(p);
      out.write_row({"model", "mean_flagged", "share_pct"});
      for (const auto &[key, a] : agg) {
        if (key.second != "mean")
          continue;
        double mean_flagged = a.flagged / a.weeks;
        double share = a.tail > 0 ? 100.0 * a.flagged / a.tail : 0.0;
        out.write_row({key.first, fmt_short(mean_flagged), fmt_short(share)});
      }
      written.push_back(p);
    }
    {
      fs::path p = out_dir / "table_threshold_sensitivity.csv";
      CsvWriter out(p);
      out.write_row({"model", "t_max_mean_flagged", "t_mean_mean_flagged",
                     "t_min_mean_flagged"});
      std::set<std::string> models;
      for (const auto &[key, a] : agg)
        models.insert(key.first);
      for (const auto &model : models) {
        auto value = [&](const char *rule) {
          auto it = agg.find({model, rule});
          return it == agg.end()
                     ? std::string("")
                     : fmt_short(it->second.flagged / it->second.weeks);
        };
        out.write_row({model, value("max"), value("mean"), value("min")});
      }
      written.push_back(p);
    }
    {
      fs::path p = out_dir / "prescription_series.csv";
      CsvWriter out(p);
      out.write_row({"as_of", "model", "rule", "flagged", "tail_size"});
      for (const auto &r : counts.rows)
        out.write_row({r[k_date], r[k_model], r[k_rule], r[k_flagged],
                       r[k_tail]});
      written.push_back(p);
    }
  }

  // Mean grouped importance per model.
  fs::path imp_path = results_dir / "eval" / "importance_by_group.csv";
  if (fs::exists(imp_path)) {
    CsvTable imp = read_csv(imp_path);
    int i_model = imp.col("model"), i_group = imp.col("group");
    int i_val = imp.col("importance");
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> agg;
    for (const auto &r : imp.rows) {
      auto &a = agg[{r[i_model], r[i_group]}];
      a.first += std::stod(r[i_val]);
      a.second += 1;
    }
    fs::path p = out_dir / "importance_summary.csv";
    CsvWriter out(p);
    out.write_row({"model", "group", "mean_importance"});
    for (const auto &[key, a] : agg)
      out.write_row({key.first, key.second, fmt_short(a.first / a.second)});
    written.push_back(p);
  }

  return written;
}

// ---------------------------------------------------------------------------
// run_all
// ---------------------------------------------------------------------------

RunAllResult run_all(const PipelineConfig &config) {
  if (config.out_dir.empty())
    throw ConfigError("run-all: out_dir is required");
  if (config.penalties_path.empty() || !fs::exists(config.penalties_path))
    throw ConfigError("run-all: penalty table not found at '" +
                      config.penalties_path.string() + "'");

  // Fresh slate for the directories this pipeline owns.
  for (const char *sub : {"store", "eval", "prescription", "rct", "report"})
    fs::remove_all(config.out_dir / sub);
  fs::remove(config.out_dir / "manifest.json");
  fs::create_directories(config.out_dir);

  // --- stage: store ---------------------------------------------------------
  CaseStore store = [&] {
    if (config.synth) {
      CaseStore s = generate_store(*config.synth);
      save_store_dir(s, config.out_dir / "store");
      return s;
    }
    return load_store_dir(*config.store_dir);
  }();

  PenaltyTable penalties = load_penalty_table(config.penalties_path);

  // --- stage: evaluate -------------------------------------------------------
  EvaluationPlan plan = make_plan(config, store);
  PlanResult result = run_plan(store, plan);

  write_eval_artifacts(store, result, config.out_dir / "eval");
  const std::string best_tag = best_overall_tag(result);

  // --- stage: prescription ---------------------------------------------------
  fs::path presc_dir = config.out_dir / "prescription";
  fs::create_directories(presc_dir);
  {
    CsvWriter counts(presc_dir / "counts.csv");
    counts.write_row({"as_of", "model", "rule", "flagged", "tail_size"});
    std::vector<std::string> all_warnings;
    for (const auto &list : result.lists) {
      for (PrescriptionRule rule :
           {PrescriptionRule::t_max, PrescriptionRule::t_mean,
            PrescriptionRule::t_min}) {
        PrescriptionScreen screen = flag_prescribed(
            store, list, penalties, rule, plan.k_bottom, list.as_of);
        counts.write_row({list.as_of.to_string(), list.model_tag,
                          std::string(rule_name(rule)),
                          std::to_string(screen.flagged.size()),
                          std::to_string(screen.tail_size)});
        if (list.model_tag == best_tag && rule == config.prescription_rule) {
          fs::path fp = presc_dir /
                        ("flags_" + list.as_of.to_string() + ".csv");
          CsvWriter out(fp);
          out.write_row({"as_of", "rank", "case_id", "score", "age_days",
                         "threshold_years", "category"});
          for (const auto &f : screen.flagged)
            out.write_row({list.as_of.to_string(), std::to_string(f.rank),
                           store.case_at(f.case_index).case_id,
                           fmt_double(f.score), std::to_string(f.age_days),
                           fmt_short(f.threshold_years),
                           store.case_at(f.case_index).crime_category});
          for (const auto &w : screen.warnings)
            all_warnings.push_back(list.as_of.to_string() + ": " + w);
        }
      }
    }
    if (!all_warnings.empty()) {
      std::ofstream warn(presc_dir / "warnings.txt");
      for (const auto &w : all_warnings)
        warn << w << '\n';
    }
  }

  // --- stage: rct -------------------------------------------------------------
  if (config.rct_enabled) {
    fs::path rct_dir = config.out_dir / "rct";
    fs::create_directories(rct_dir);
    fs::path ledger_path = rct_dir / "ledger.csv";
    std::set<std::string> enrolled;
    std::vector<RctCohort> cohorts;
    int weeks = std::min<int>(config.rct_weeks,
                              static_cast<int>(plan.prediction_dates.size()));
    int first_week = static_cast<int>(plan.prediction_dates.size()) - weeks;
    for (int w = 0; w < weeks; ++w) {
      Date as_of = plan.prediction_dates[first_week + w];
      const RankedList *list = result.find_list(as_of, best_tag);
      if (!list)
        throw DataError("run-all: missing ranked list for RCT week");
      RctCohort cohort =
          assign_week(store, *list, enrolled, w,
                      Rng::derive(config.master_seed, 0x100 + w),
                      config.rct_cohort_size);
      for (const auto &arm : {&cohort.treatment, &cohort.control})
        for (const auto &m : *arm)
          enrolled.insert(m.case_id);
      Ledger::append(ledger_path, cohort);
      char name[32];
      std::snprintf(name, sizeof(name), "cohort_w%02d.csv", w);
      save_cohort_csv(cohort, rct_dir / name);
      cohorts.push_back(std::move(cohort));
    }
    if (!cohorts.empty() &&
        cohorts.back().as_of + plan.label_horizon_days <=
            store.extraction_date()) {
      OutcomesReport report = outcomes_report(
          store, cohorts, plan.label_horizon_days, plan.unit);
      CsvWriter out(rct_dir / "outcomes.csv");
      out.write_row({"arm", "n", "resolved", "resolution_rate",
                     "median_days_to_resolution"});
      auto dump = [&](const char *arm, const ArmSummary &s) {
        out.write_row({arm, std::to_string(s.n), std::to_string(s.resolved),
                       fmt_double(s.resolution_rate),
                       s.median_days_to_resolution
                           ? fmt_short(*s.median_days_to_resolution)
                           : "N/A"});
      };
      dump("treatment", report.treatment);
      dump("control", report.control);
    }
  }

  // --- stage: report -----------------------------------------------------------
  report_tables(config.out_dir, config.out_dir / "report");

  // --- manifest ------------------------------------------------------------------
  RunAllResult out;
  std::vector<fs::path> files;
  for (const auto &entry : fs::recursive_directory_iterator(config.out_dir))
    if (entry.is_regular_file() &&
        entry.path().filename() != "manifest.json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  nlohmann::ordered_json manifest;
  manifest["files"] = nlohmann::ordered_json::array();
  for (const auto &f : files) {
    Artifact a;
    a.path = fs::relative(f, config.out_dir).generic_string();
    a.sha256 = sha256_file(f);
    a.bytes = fs::file_size(f);
    manifest["files"].push_back(
        {{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    out.manifest.push_back(std::move(a));
  }
  out.manifest_path = config.out_dir / "manifest.json";
  std::ofstream mf(out.manifest_path);
  mf << manifest.dump(2) << '\n';
  return out;
}

} // namespace triage
