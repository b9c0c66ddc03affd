#include "triage/baseline.hpp"
#include "triage/csv.hpp"
#include "triage/labels.hpp"
#include "triage/pipeline.hpp"
#include "triage/rng.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using namespace triage;

namespace {

Date parse_date_arg(const std::string &s, const char *what) {
  auto d = Date::parse(s);
  if (!d)
    throw ConfigError(std::string("bad ") + what + " date: " + s);
  return *d;
}

Unit parse_unit_arg(const std::string &s) {
  auto u = parse_unit(s);
  if (!u)
    throw ConfigError("unknown unit: " + s);
  return *u;
}

std::string default_out_dir() {
  const char *env = std::getenv("TRIAGE_OUT_DIR");
  return env ? env : "out";
}

int run(int argc, char **argv) {
  CLI::App app{"Case-triage engine: synthetic registers, rolling temporal "
               "evaluation, prescription screening and trial cohorts"};
  app.require_subcommand(1);

  // --- ingest ---------------------------------------------------------------
  auto *ingest_cmd =
      app.add_subcommand("ingest", "Validate and canonicalize case/event files");
  std::string in_cases, in_events, in_format = "csv", ingest_out;
  ingest_cmd->add_option("--cases", in_cases, "cases file")->required();
  ingest_cmd->add_option("--events", in_events, "events file")->required();
  ingest_cmd->add_option("--format", in_format, "csv or jsonl");
  ingest_cmd->add_option("--out", ingest_out, "store directory")->required();
  ingest_cmd->callback([&] {
    IngestFormat format;
    if (in_format == "csv")
      format = IngestFormat::csv;
    else if (in_format == "jsonl")
      format = IngestFormat::jsonl;
    else
      throw ConfigError("unknown format: " + in_format);
    IngestResult result = ingest(in_cases, in_events, format);
    for (const auto &r : result.rejects)
      std::cerr << "reject " << r.file << ":" << r.line << ": " << r.reason
                << '\n';
    save_store_dir(result.store, ingest_out);
    std::cout << "ingested " << result.store.case_count() << " cases ("
              << result.rejects.size() << " rejected rows) -> " << ingest_out
              << '\n';
  });

  // --- synth ------------------------------------------------------------------
  auto *synth_cmd =
      app.add_subcommand("synth", "Generate a synthetic case register");
  std::string synth_config, synth_out = default_out_dir();
  synth_cmd->add_option("--config", synth_config, "synth config JSON")
      ->required();
  synth_cmd->add_option("--out-dir", synth_out, "output directory");
  synth_cmd->callback([&] {
    SynthConfig cfg = synth_config_from_json(synth_config);
    generate(cfg, synth_out);
    std::cout << "wrote synthetic store -> " << synth_out << '\n';
  });

  // --- features ----------------------------------------------------------------
  auto *features_cmd =
      app.add_subcommand("features", "As-of feature matrix for open cases");
  std::string f_store, f_unit = "MAT", f_as_of, f_out;
  int f_max_crime = 40;
  features_cmd->add_option("--store", f_store, "store directory")->required();
  features_cmd->add_option("--unit", f_unit, "unit");
  features_cmd->add_option("--as-of", f_as_of, "as-of date")->required();
  features_cmd->add_option("--out", f_out, "output CSV")->required();
  features_cmd->add_option("--max-crime-categories", f_max_crime,
                           "one-hot vocabulary size");
  features_cmd->callback([&] {
    CaseStore store = load_store_dir(f_store);
    Date as_of = parse_date_arg(f_as_of, "as-of");
    FeatureSchema schema = build_schema(store, as_of, f_max_crime);
    FeatureExtractor extractor(store, schema);
    auto vectors = extractor.assemble(parse_unit_arg(f_unit), as_of);
    CsvWriter out(f_out);
    std::vector<std::string> header = {"case_id", "as_of"};
    header.insert(header.end(), schema.names.begin(), schema.names.end());
    out.write_row(header);
    for (const auto &v : vectors) {
      std::vector<std::string> row = {store.case_at(v.case_index).case_id,
                                      as_of.to_string()};
      for (double x : v.values) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        row.push_back(buf);
      }
      out.write_row(row);
    }
    std::cout << "wrote " << vectors.size() << " rows x " << schema.size()
              << " features -> " << f_out << '\n';
  });

  // --- train ---------------------------------------------------------------------
  auto *train_cmd = app.add_subcommand("train", "Fit one model");
  std::string t_store, t_unit = "MAT", t_through, t_family = "random_forest";
  std::string t_out, t_train_start;
  uint64_t t_seed = 7;
  int t_trees = 100, t_depth = 10, t_min_leaf = 5, t_cadence = 28;
  double t_l2 = 0.1;
  train_cmd->add_option("--store", t_store, "store directory")->required();
  train_cmd->add_option("--unit", t_unit, "unit (metadata only)");
  train_cmd->add_option("--through", t_through, "training cutoff date")
      ->required();
  train_cmd->add_option("--family", t_family, "model family");
  train_cmd->add_option("--seed", t_seed, "seed");
  train_cmd->add_option("--out", t_out, "model file")->required();
  train_cmd->add_option("--trees", t_trees, "forest size");
  train_cmd->add_option("--depth", t_depth, "max depth (-1 unlimited)");
  train_cmd->add_option("--min-leaf", t_min_leaf, "min samples per leaf");
  train_cmd->add_option("--l2", t_l2, "logistic ridge strength");
  train_cmd->add_option("--train-start", t_train_start,
                        "first observation snapshot (default: earliest case)");
  train_cmd->add_option("--snapshot-cadence", t_cadence,
                        "days between observation snapshots");
  train_cmd->callback([&] {
    CaseStore store = load_store_dir(t_store);
    Date through = parse_date_arg(t_through, "through");
    auto family = parse_family(t_family);
    if (!family)
      throw ConfigError("unknown model family: " + t_family);
    Hyperparams hp;
    hp.n_trees = t_trees;
    hp.max_depth = t_depth;
    hp.min_leaf = t_min_leaf;
    hp.l2 = t_l2;

    Date train_start = t_train_start.empty()
                           ? store.min_opened()
                           : parse_date_arg(t_train_start, "train-start");
    FeatureSchema schema = build_schema(store, through);
    FeatureExtractor extractor(store, schema);
    std::vector<LabeledExample> examples;
    for (Date o = train_start; o + kDaysPerHalfYear <= through;
         o += t_cadence) {
      for (size_t i = 0; i < store.case_count(); ++i) {
        const auto &rec = store.case_at(i);
        if (rec.opened_at > o || store.closed_on_or_before(i, o))
          continue;
        LabeledExample ex;
        ex.x = extractor.extract(i, o);
        ex.observation_date = o;
        ex.label = finalized_within(store, i, store.unit_at(i, o), o,
                                    kDaysPerHalfYear)
                       ? 1
                       : 0;
        examples.push_back(std::move(ex));
      }
    }
    TrainedModel model =
        fit(*family, hp, schema, examples, t_seed, through);
    model.save(t_out);
    std::cout << "fitted " << model.tag() << " on " << examples.size()
              << " examples -> " << t_out << '\n';
  });

  // --- baseline ---------------------------------------------------------------------
  auto *baseline_cmd =
      app.add_subcommand("baseline", "Historical base-rate table");
  std::string b_store, b_as_of, b_out;
  double b_prior = 20.0;
  baseline_cmd->add_option("--store", b_store, "store directory")->required();
  baseline_cmd->add_option("--as-of", b_as_of, "as-of date")->required();
  baseline_cmd->add_option("--prior", b_prior, "shrinkage pseudo-count m");
  baseline_cmd->add_option("--out", b_out, "output CSV")->required();
  baseline_cmd->callback([&] {
    CaseStore store = load_store_dir(b_store);
    Date as_of = parse_date_arg(b_as_of, "as-of");
    BaseRateTable table = build_table(store, as_of, b_prior);
    CsvWriter out(b_out);
    out.write_row({"category", "n", "p_raw", "p_smoothed"});
    char raw[40], smooth[40];
    std::snprintf(smooth, sizeof(smooth), "%.17g", table.global_rate);
    out.write_row({"__GLOBAL__", "0", smooth, smooth});
    for (const auto &[cat, e] : table.per_crime) {
      std::snprintf(raw, sizeof(raw), "%.17g", e.p_raw);
      std::snprintf(smooth, sizeof(smooth), "%.17g", e.p_smoothed);
      out.write_row({cat, std::to_string(e.n), raw, smooth});
    }
    std::cout << "wrote base-rate table (" << table.per_crime.size()
              << " categories, global " << table.global_rate << ") -> "
              << b_out << '\n';
  });

  // --- evaluate ----------------------------------------------------------------------
  auto *eval_cmd = app.add_subcommand(
      "evaluate", "Rolling temporal evaluation of the model set");
  std::string e_store, e_plan, e_out = default_out_dir();
  eval_cmd->add_option("--store", e_store, "store directory")->required();
  eval_cmd->add_option("--plan", e_plan, "plan config JSON")->required();
  eval_cmd->add_option("--out-dir", e_out, "output directory");
  eval_cmd->callback([&] {
    CaseStore store = load_store_dir(e_store);
    PipelineConfig cfg = pipeline_config_from_json(e_plan, false);
    EvaluationPlan plan = make_plan(cfg, store);
    PlanResult result = run_plan(store, plan);
    write_eval_artifacts(store, result, fs::path(e_out) / "eval");
    std::cout << "evaluated " << plan.prediction_dates.size() << " weeks x "
              << result.model_tags.size() << " models -> " << e_out << '\n';
  });

  // --- prescribe ----------------------------------------------------------------------
  auto *presc_cmd = app.add_subcommand(
      "prescribe", "Flag potentially prescribed cases in the ranking tail");
  std::string p_store, p_ranked, p_penalties, p_rule = "mean", p_out, p_as_of;
  int p_k = 1000;
  presc_cmd->add_option("--store", p_store, "store directory")->required();
  presc_cmd->add_option("--ranked", p_ranked, "ranked-list CSV")->required();
  presc_cmd->add_option("--penalties", p_penalties, "penalty table CSV")
      ->required();
  presc_cmd->add_option("--rule", p_rule, "min|mean|max");
  presc_cmd->add_option("--k", p_k, "bottom-tail size");
  presc_cmd->add_option("--out", p_out, "output CSV")->required();
  presc_cmd->add_option("--as-of", p_as_of,
                        "override evaluation date (default: list date)");
  presc_cmd->callback([&] {
    CaseStore store = load_store_dir(p_store);
    RankedList ranked = load_ranked_csv(store, p_ranked);
    PenaltyTable table = load_penalty_table(p_penalties);
    auto rule = parse_rule(p_rule);
    if (!rule)
      throw ConfigError("unknown rule: " + p_rule);
    Date as_of =
        p_as_of.empty() ? ranked.as_of : parse_date_arg(p_as_of, "as-of");
    PrescriptionScreen screen =
        flag_prescribed(store, ranked, table, *rule, p_k, as_of);
    for (const auto &w : screen.warnings)
      std::cerr << "warning: " << w << '\n';
    CsvWriter out(p_out);
    out.write_row({"as_of", "rank", "case_id", "score", "age_days",
                   "threshold_years", "category"});
    for (const auto &f : screen.flagged) {
      char score[40], yrs[40];
      std::snprintf(score, sizeof(score), "%.17g", f.score);
      std::snprintf(yrs, sizeof(yrs), "%.6g", f.threshold_years);
      out.write_row({as_of.to_string(), std::to_string(f.rank),
                     store.case_at(f.case_index).case_id, score,
                     std::to_string(f.age_days), yrs,
                     store.case_at(f.case_index).crime_category});
    }
    std::cout << "flagged " << screen.flagged.size() << " of "
              << screen.tail_size << " tail cases (rule "
              << rule_name(*rule) << ") -> " << p_out << '\n';
  });

  // --- rct ---------------------------------------------------------------------------
  auto *rct_cmd = app.add_subcommand("rct", "Trial cohort tooling");
  rct_cmd->require_subcommand(1);

  auto *assign_cmd =
      rct_cmd->add_subcommand("assign", "Assign one weekly cohort");
  std::string a_store, a_ranked, a_ledger, a_out;
  uint64_t a_seed = 1;
  int a_cohort = 600;
  assign_cmd->add_option("--store", a_store, "store directory")->required();
  assign_cmd->add_option("--ranked", a_ranked, "ranked-list CSV")->required();
  assign_cmd->add_option("--ledger", a_ledger, "enrollment ledger path")
      ->required();
  assign_cmd->add_option("--seed", a_seed, "arm-split seed");
  assign_cmd->add_option("--cohort-size", a_cohort, "cases per cohort");
  assign_cmd->add_option("--out", a_out, "cohort CSV")->required();
  assign_cmd->callback([&] {
    CaseStore store = load_store_dir(a_store);
    RankedList ranked = load_ranked_csv(store, a_ranked);
    Ledger ledger = Ledger::load(a_ledger);
    RctCohort cohort = assign_week(store, ranked, ledger.enrolled,
                                   ledger.next_week_index, a_seed, a_cohort);
    Ledger::append(a_ledger, cohort);
    save_cohort_csv(cohort, a_out);
    std::cout << "week " << cohort.week_index << ": "
              << cohort.treatment.size() << "/" << cohort.control.size()
              << " treatment/control, " << cohort.replacements_used
              << " replacements"
              << (cohort.shortfall ? " (shortfall)" : "") << " -> " << a_out
              << '\n';
  });

  auto *rreport_cmd =
      rct_cmd->add_subcommand("report", "Descriptive per-arm outcomes");
  std::string r_store, r_cohorts, r_out;
  int r_horizon = kDaysPerHalfYear;
  std::string r_unit = "MAT";
  rreport_cmd->add_option("--store", r_store, "store directory")->required();
  rreport_cmd->add_option("--cohorts", r_cohorts, "cohort CSV directory")
      ->required();
  rreport_cmd->add_option("--out", r_out, "output CSV")->required();
  rreport_cmd->add_option("--horizon", r_horizon, "follow-up days");
  rreport_cmd->add_option("--unit", r_unit, "unit");
  rreport_cmd->callback([&] {
    CaseStore store = load_store_dir(r_store);
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(r_cohorts))
      if (entry.is_regular_file() &&
          entry.path().filename().string().rfind("cohort_", 0) == 0)
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw DataError("no cohort_*.csv files in " + r_cohorts);
    std::vector<RctCohort> cohorts;
    for (const auto &f : files)
      cohorts.push_back(load_cohort_csv(store, f));
    OutcomesReport report =
        outcomes_report(store, cohorts, r_horizon, parse_unit_arg(r_unit));
    CsvWriter out(r_out);
    out.write_row({"arm", "n", "resolved", "resolution_rate",
                   "median_days_to_resolution"});
    auto dump = [&](const char *arm, const ArmSummary &s) {
      char rate[40];
      std::snprintf(rate, sizeof(rate), "%.17g", s.resolution_rate);
      char med[40];
      if (s.median_days_to_resolution)
        std::snprintf(med, sizeof(med), "%.6g", *s.median_days_to_resolution);
      out.write_row({arm, std::to_string(s.n), std::to_string(s.resolved),
                     rate,
                     s.median_days_to_resolution ? med : "N/A"});
    };
    dump("treatment", report.treatment);
    dump("control", report.control);
    std::cout << "wrote outcomes for " << cohorts.size() << " cohorts -> "
              << r_out << '\n';
  });

  // --- report -------------------------------------------------------------------------
  auto *report_cmd =
      app.add_subcommand("report", "Aggregate tables from results");
  std::string rep_results, rep_out;
  report_cmd->add_option("--results", rep_results, "results directory")
      ->required();
  report_cmd->add_option("--out-dir", rep_out, "output directory")
      ->required();
  report_cmd->callback([&] {
    auto files = report_tables(rep_results, rep_out);
    std::cout << "wrote " << files.size() << " report files -> " << rep_out
              << '\n';
  });

  // --- run-all ------------------------------------------------------------------------
  auto *runall_cmd =
      app.add_subcommand("run-all", "Full pipeline with artifact manifest");
  std::string ra_config, ra_out;
  runall_cmd->add_option("--config", ra_config, "pipeline config JSON")
      ->required();
  runall_cmd->add_option("--out-dir", ra_out, "override output directory");
  runall_cmd->callback([&] {
    PipelineConfig cfg = pipeline_config_from_json(ra_config);
    if (!ra_out.empty())
      cfg.out_dir = ra_out;
    if (cfg.out_dir.empty())
      cfg.out_dir = default_out_dir();
    RunAllResult result = run_all(cfg);
    std::cout << "pipeline complete: " << result.manifest.size()
              << " artifacts, manifest -> "
              << result.manifest_path.string() << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    // Usage problems map onto the config-error exit code; --help stays 0.
    return code == 0 ? 0 : 1;
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
