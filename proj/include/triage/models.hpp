#pragma once

#include "triage/features.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace triage {

enum class ModelFamily : uint8_t {
  decision_tree = 0,
  random_forest,
  extra_trees,
  scaled_logistic,
  dummy,
};

std::string_view family_name(ModelFamily f);
std::optional<ModelFamily> parse_family(std::string_view s);

struct Hyperparams {
  int max_depth = -1;    // trees; -1 = unlimited
  int min_leaf = 5;      // trees
  int n_trees = 100;     // forests
  int max_features = -1; // per-split candidates; -1 = floor(sqrt(F))
  int bootstrap = -1;    // -1 = family default (RF yes, extra-trees no)
  double l2 = 0.1;       // logistic ridge strength
  double tol = 1e-6;     // logistic gradient sup-norm stop
  int max_iter = 500;    // logistic

  // Compact spec string, e.g. "rf/t100/d10/l5".
  std::string tag(ModelFamily family) const;
};

struct LabeledExample {
  FeatureVector x;
  uint8_t label = 0; // 1 = finalized within the horizon
  Date observation_date;
};

struct TreeNode {
  int32_t feature = -1; // -1 marks a leaf
  double threshold = 0.0;
  int32_t left = -1, right = -1;
  double value = 0.0; // leaf: positive-class frequency
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> row) const;
};

// Fitted classifier with a uniform score interface. Scoring is pure; all
// stochastic fitting is reproducible from (seed, hyperparams, data).
class TrainedModel {
public:
  ModelFamily family = ModelFamily::dummy;
  Hyperparams hp;
  uint64_t seed = 0;
  Date trained_through;
  FeatureSchema schema;
  std::vector<double> feature_importances; // sums to 1

  // Tree families.
  std::vector<Tree> trees;
  // Scaled logistic: standardization + weights in standardized space.
  std::vector<double> mu, sigma, weights;
  double intercept = 0.0;

  std::string tag() const { return hp.tag(family); }

  // Throws DataError naming missing/extra columns on schema mismatch.
  void check_schema(const FeatureSchema &input) const;

  // Scores in [0,1], one per vector. Vectors must follow this model's
  // schema ordering (use check_schema against the producing extractor).
  std::vector<double> score(std::span<const FeatureVector> vectors) const;

  // Normalized importance summed per feature group; values sum to 1.
  std::map<std::string, double> importance_by_group() const;

  void save(const std::filesystem::path &path) const;
  static TrainedModel load(const std::filesystem::path &path);
};

// Group-importance aggregation over an explicit feature->group mapping.
std::map<std::string, double>
importance_by_group(const std::vector<double> &importances,
                    const std::vector<std::string> &feature_names,
                    const std::map<std::string, std::string> &group_of);

// Deterministic for fixed (seed, n_threads-independent). Non-dummy families
// refuse single-class training sets with a diagnostic.
TrainedModel fit(ModelFamily family, const Hyperparams &hp,
                 const FeatureSchema &schema,
                 const std::vector<LabeledExample> &examples, uint64_t seed,
                 Date trained_through, int n_threads = 1);

// --- exposed internals for verification ------------------------------------

// L2-regularized logistic loss and gradient on a dense design (row-major).
// The gradient is what the fitter descends; tests difference the loss.
double logistic_loss(const std::vector<std::vector<double>> &x,
                     const std::vector<uint8_t> &y,
                     const std::vector<double> &w, double b, double l2);
void logistic_gradient(const std::vector<std::vector<double>> &x,
                       const std::vector<uint8_t> &y,
                       const std::vector<double> &w, double b, double l2,
                       std::vector<double> &grad_w, double &grad_b);

// Column-major training matrix used by the tree builders.
struct Dataset {
  size_t n_rows = 0, n_features = 0;
  std::vector<double> columns; // columns[f * n_rows + r]
  std::vector<uint8_t> labels;
  double at(size_t row, size_t feature) const {
    return columns[feature * n_rows + row];
  }
};

Dataset make_dataset(const std::vector<LabeledExample> &examples,
                     size_t n_features);

struct TreeParams {
  int max_depth = -1;
  int min_leaf = 1;
  int max_features = 0; // 0 = all features, in schema order
  bool random_thresholds = false;
  bool bootstrap = false;
};

// Builds one CART/extra tree; importance gains (weighted impurity
// decreases) are accumulated into `importance_out` when non-null.
Tree build_tree(const Dataset &data, const std::vector<int32_t> &rows,
                const TreeParams &params, uint64_t tree_seed,
                std::vector<double> *importance_out);

} // namespace triage
