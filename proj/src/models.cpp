#include "triage/models.hpp"

#include "triage/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace triage {

namespace detail {
void fit_scaled_logistic(const Dataset &data, const Hyperparams &hp,
                         TrainedModel &model);
double score_logistic(const TrainedModel &model, std::span<const double> row);
} // namespace detail

namespace {

constexpr std::string_view kFamilyNames[] = {
    "decision_tree", "random_forest", "extra_trees", "scaled_logistic",
    "dummy"};

bool is_tree_family(ModelFamily f) {
  return f == ModelFamily::decision_tree || f == ModelFamily::random_forest ||
         f == ModelFamily::extra_trees;
}

} // namespace

std::string_view family_name(ModelFamily f) {
  return kFamilyNames[static_cast<int>(f)];
}

std::optional<ModelFamily> parse_family(std::string_view s) {
  for (int i = 0; i < 5; ++i)
    if (s == kFamilyNames[i])
      return static_cast<ModelFamily>(i);
  return std::nullopt;
}

std::string Hyperparams::tag(ModelFamily family) const {
  char buf[96];
  std::string depth =
      max_depth < 0 ? std::string("inf") : std::to_string(max_depth);
  switch (family) {
  case ModelFamily::decision_tree:
    std::snprintf(buf, sizeof(buf), "dt/d%s/l%d", depth.c_str(), min_leaf);
    break;
  case ModelFamily::random_forest:
    std::snprintf(buf, sizeof(buf), "rf/t%d/d%s/l%d", n_trees, depth.c_str(),
                  min_leaf);
    break;
  case ModelFamily::extra_trees:
    std::snprintf(buf, sizeof(buf), "et/t%d/d%s/l%d", n_trees, depth.c_str(),
                  min_leaf);
    break;
  case ModelFamily::scaled_logistic:
    std::snprintf(buf, sizeof(buf), "slr/l2_%g", l2);
    break;
  case ModelFamily::dummy:
    std::snprintf(buf, sizeof(buf), "dummy");
    break;
  }
  return buf;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

namespace {

void fit_tree_family(const Dataset &data, ModelFamily family,
                     const Hyperparams &hp, uint64_t seed, int n_threads,
                     TrainedModel &model) {
  const size_t nf = data.n_features;
  TreeParams params;
  params.max_depth = hp.max_depth;
  params.min_leaf = std::max(1, hp.min_leaf);
  params.random_thresholds = family == ModelFamily::extra_trees;
  if (family == ModelFamily::decision_tree) {
    params.max_features = 0;
    params.bootstrap = false;
  } else {
    params.max_features =
        hp.max_features > 0
            ? hp.max_features
            : std::max(1, static_cast<int>(
                              std::floor(std::sqrt(static_cast<double>(nf)))));
    params.bootstrap = hp.bootstrap >= 0
                           ? hp.bootstrap != 0
                           : family == ModelFamily::random_forest;
  }
  const int n_trees =
      family == ModelFamily::decision_tree ? 1 : std::max(1, hp.n_trees);

  std::vector<int32_t> all_rows(data.n_rows);
  for (size_t r = 0; r < data.n_rows; ++r)
    all_rows[r] = static_cast<int32_t>(r);

  model.trees.resize(n_trees);
  std::vector<std::vector<double>> tree_importance(
      n_trees, std::vector<double>(nf, 0.0));

  // Per-tree seeds are derived from (seed, tree index), so the forest is
  // identical no matter how trees are scheduled onto threads.
  auto build_range = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i)
      model.trees[i] = build_tree(data, all_rows, params,
                                  Rng::derive(seed, static_cast<uint64_t>(i)),
                                  &tree_importance[i]);
  };
  int threads = std::max(1, n_threads);
  if (threads == 1 || n_trees == 1) {
    build_range(0, n_trees);
  } else {
    std::vector<std::thread> pool;
    int per = (n_trees + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int lo = t * per, hi = std::min(n_trees, lo + per);
      if (lo < hi)
        pool.emplace_back(build_range, lo, hi);
    }
    for (auto &th : pool)
      th.join();
  }

  // Mean of per-tree normalized gains, renormalized.
  model.feature_importances.assign(nf, 0.0);
  for (int i = 0; i < n_trees; ++i) {
    double total = 0.0;
    for (double g : tree_importance[i])
      total += g;
    if (total <= 0)
      continue;
    for (size_t f = 0; f < nf; ++f)
      model.feature_importances[f] += tree_importance[i][f] / total;
  }
  double total = 0.0;
  for (double g : model.feature_importances)
    total += g;
  if (total > 0)
    for (double &g : model.feature_importances)
      g /= total;
  else
    model.feature_importances.assign(nf, 1.0 / static_cast<double>(nf));
}

} // namespace

TrainedModel fit(ModelFamily family, const Hyperparams &hp,
                 const FeatureSchema &schema,
                 const std::vector<LabeledExample> &examples, uint64_t seed,
                 Date trained_through, int n_threads) {
  TrainedModel model;
  model.family = family;
  model.hp = hp;
  model.seed = seed;
  model.schema = schema;
  model.trained_through = trained_through;

  for (const auto &ex : examples)
    if (ex.x.values.size() != schema.size())
      throw DataError("fit: example width " +
                      std::to_string(ex.x.values.size()) +
                      " does not match schema width " +
                      std::to_string(schema.size()));

  if (family == ModelFamily::dummy) {
    size_t nf = std::max<size_t>(1, schema.size());
    model.feature_importances.assign(schema.size(),
                                     1.0 / static_cast<double>(nf));
    return model;
  }

  if (examples.size() < 2)
    throw DataError("fit: need at least 2 labeled examples, got " +
                    std::to_string(examples.size()));
  size_t positives = 0;
  for (const auto &ex : examples)
    positives += ex.label;
  if (positives == 0 || positives == examples.size())
    throw DataError(
        std::string("fit: single-class training set (all labels ") +
        (positives ? "1" : "0") + "); refusing to fit " +
        std::string(family_name(family)));

  Dataset data = make_dataset(examples, schema.size());
  if (family == ModelFamily::scaled_logistic)
    detail::fit_scaled_logistic(data, hp, model);
  else
    fit_tree_family(data, family, hp, seed, n_threads, model);
  return model;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

void TrainedModel::check_schema(const FeatureSchema &input) const {
  if (input.names == schema.names)
    return;
  std::string msg = "schema mismatch;";
  int listed = 0;
  for (const auto &n : schema.names)
    if (input.index_of(n) < 0 && listed < 5) {
      msg += " missing:" + n;
      ++listed;
    }
  listed = 0;
  for (const auto &n : input.names)
    if (schema.index_of(n) < 0 && listed < 5) {
      msg += " extra:" + n;
      ++listed;
    }
  if (msg == "schema mismatch;")
    msg += " column order differs";
  throw DataError(msg);
}

std::vector<double>
TrainedModel::score(std::span<const FeatureVector> vectors) const {
  std::vector<double> out;
  out.reserve(vectors.size());
  Rng dummy_rng(seed);
  for (const auto &v : vectors) {
    if (v.values.size() != schema.size())
      throw DataError("score: vector width " +
                      std::to_string(v.values.size()) +
                      " does not match model schema width " +
                      std::to_string(schema.size()));
    switch (family) {
    case ModelFamily::dummy:
      out.push_back(dummy_rng.next_double());
      break;
    case ModelFamily::scaled_logistic:
      out.push_back(detail::score_logistic(*this, v.values));
      break;
    default: {
      double sum = 0.0;
      for (const auto &t : trees)
        sum += t.predict(v.values);
      out.push_back(trees.empty() ? 0.0
                                  : sum / static_cast<double>(trees.size()));
    }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Importance grouping
// ---------------------------------------------------------------------------

std::map<std::string, double> TrainedModel::importance_by_group() const {
  std::map<std::string, double> out;
  for (size_t f = 0; f < feature_importances.size(); ++f)
    out[std::string(feature_group_name(schema.groups[f]))] +=
        feature_importances[f];
  return out;
}

std::map<std::string, double>
importance_by_group(const std::vector<double> &importances,
                    const std::vector<std::string> &feature_names,
                    const std::map<std::string, std::string> &group_of) {
  std::map<std::string, double> out;
  for (size_t f = 0; f < importances.size(); ++f) {
    auto it = group_of.find(feature_names[f]);
    if (it == group_of.end())
      throw DataError("importance_by_group: no group for feature " +
                      feature_names[f]);
    out[it->second] += importances[f];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {
constexpr int kModelFormatVersion = 1;
}

void TrainedModel::save(const std::filesystem::path &path) const {
  nlohmann::ordered_json j;
  j["format_version"] = kModelFormatVersion;
  j["family"] = std::string(family_name(family));
  j["hyperparams"] = {
      {"max_depth", hp.max_depth},   {"min_leaf", hp.min_leaf},
      {"n_trees", hp.n_trees},       {"max_features", hp.max_features},
      {"bootstrap", hp.bootstrap},   {"l2", hp.l2},
      {"tol", hp.tol},               {"max_iter", hp.max_iter},
  };
  j["seed"] = seed;
  j["trained_through"] = trained_through.to_string();
  j["schema"]["hash"] = schema.hash();
  j["schema"]["names"] = schema.names;
  std::vector<int> groups(schema.groups.size());
  for (size_t i = 0; i < groups.size(); ++i)
    groups[i] = static_cast<int>(schema.groups[i]);
  j["schema"]["groups"] = groups;
  j["schema"]["crime_vocab"] = schema.crime_vocab;
  j["schema"]["vocab_as_of"] = schema.vocab_as_of.to_string();
  j["feature_importances"] = feature_importances;

  if (is_tree_family(family)) {
    nlohmann::ordered_json trees_json = nlohmann::ordered_json::array();
    for (const auto &tree : trees) {
      nlohmann::ordered_json t;
      std::vector<int32_t> fs, ls, rs;
      std::vector<double> th, vs;
      for (const auto &n : tree.nodes) {
        fs.push_back(n.feature);
        th.push_back(n.threshold);
        ls.push_back(n.left);
        rs.push_back(n.right);
        vs.push_back(n.value);
      }
      t["feature"] = fs;
      t["threshold"] = th;
      t["left"] = ls;
      t["right"] = rs;
      t["value"] = vs;
      trees_json.push_back(std::move(t));
    }
    j["trees"] = std::move(trees_json);
  } else if (family == ModelFamily::scaled_logistic) {
    j["logistic"] = {{"mu", mu},
                     {"sigma", sigma},
                     {"weights", weights},
                     {"intercept", intercept}};
  }

  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write model file: " + path.string());
  out << j.dump(2) << '\n';
}

TrainedModel TrainedModel::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open model file: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw DataError("invalid JSON in model file: " + path.string());
  if (j.value("format_version", -1) != kModelFormatVersion)
    throw DataError("unsupported model format version in " + path.string());

  TrainedModel m;
  auto fam = parse_family(j.at("family").get<std::string>());
  if (!fam)
    throw DataError("unknown model family in " + path.string());
  m.family = *fam;
  const auto &h = j.at("hyperparams");
  m.hp.max_depth = h.value("max_depth", -1);
  m.hp.min_leaf = h.value("min_leaf", 5);
  m.hp.n_trees = h.value("n_trees", 100);
  m.hp.max_features = h.value("max_features", -1);
  m.hp.bootstrap = h.value("bootstrap", -1);
  m.hp.l2 = h.value("l2", 0.1);
  m.hp.tol = h.value("tol", 1e-6);
  m.hp.max_iter = h.value("max_iter", 500);
  m.seed = j.at("seed").get<uint64_t>();
  m.trained_through = *Date::parse(j.at("trained_through").get<std::string>());
  m.schema.names = j.at("schema").at("names").get<std::vector<std::string>>();
  for (int g : j.at("schema").at("groups").get<std::vector<int>>())
    m.schema.groups.push_back(static_cast<FeatureGroup>(g));
  m.schema.crime_vocab =
      j.at("schema").at("crime_vocab").get<std::vector<std::string>>();
  m.schema.vocab_as_of =
      *Date::parse(j.at("schema").at("vocab_as_of").get<std::string>());
  m.feature_importances =
      j.at("feature_importances").get<std::vector<double>>();

  if (is_tree_family(m.family)) {
    for (const auto &t : j.at("trees")) {
      Tree tree;
      auto fs = t.at("feature").get<std::vector<int32_t>>();
      auto th = t.at("threshold").get<std::vector<double>>();
      auto ls = t.at("left").get<std::vector<int32_t>>();
      auto rs = t.at("right").get<std::vector<int32_t>>();
      auto vs = t.at("value").get<std::vector<double>>();
      tree.nodes.resize(fs.size());
      for (size_t i = 0; i < fs.size(); ++i)
        tree.nodes[i] = {fs[i], th[i], ls[i], rs[i], vs[i]};
      m.trees.push_back(std::move(tree));
    }
  } else if (m.family == ModelFamily::scaled_logistic) {
    const auto &lg = j.at("logistic");
    m.mu = lg.at("mu").get<std::vector<double>>();
    m.sigma = lg.at("sigma").get<std::vector<double>>();
    m.weights = lg.at("weights").get<std::vector<double>>();
    m.intercept = lg.at("intercept").get<double>();
  }
  return m;
}

} // namespace triage
