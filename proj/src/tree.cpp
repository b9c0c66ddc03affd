#include "triage/models.hpp"

#include "triage/rng.hpp"

#include <algorithm>
#include <cmath>

namespace triage {

double Tree::predict(std::span<const double> row) const {
  int32_t node = 0;
  while (nodes[node].feature >= 0) {
    const TreeNode &n = nodes[node];
    node = row[n.feature] < n.threshold ? n.left : n.right;
  }
  return nodes[node].value;
}

Dataset make_dataset(const std::vector<LabeledExample> &examples,
                     size_t n_features) {
  Dataset d;
  d.n_rows = examples.size();
  d.n_features = n_features;
  d.columns.resize(d.n_rows * n_features);
  d.labels.resize(d.n_rows);
  for (size_t r = 0; r < d.n_rows; ++r) {
    const auto &vals = examples[r].x.values;
    d.labels[r] = examples[r].label;
    for (size_t f = 0; f < n_features; ++f)
      d.columns[f * d.n_rows + r] = vals[f];
  }
  return d;
}

namespace {

inline double gini(double pos, double n) {
  if (n <= 0)
    return 0.0;
  double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct TreeBuilder {
  const Dataset &data;
  const TreeParams &params;
  Rng rng;
  std::vector<TreeNode> nodes;
  std::vector<double> *importance;
  double n_root;

  std::vector<int32_t> feature_order;          // reshuffled per node
  std::vector<std::pair<double, uint8_t>> scratch; // CART sort buffer

  TreeBuilder(const Dataset &d, const TreeParams &p, uint64_t seed,
              std::vector<double> *imp)
      : data(d), params(p), rng(seed), importance(imp), n_root(0) {
    feature_order.resize(d.n_features);
    for (size_t f = 0; f < d.n_features; ++f)
      feature_order[f] = static_cast<int32_t>(f);
  }

  // Exact best Gini split of `rows` on feature f; thresholds are midpoints
  // between consecutive distinct sorted values. Children must keep at
  // least min_leaf rows.
  void consider_cart(const std::vector<int32_t> &rows, int32_t f,
                     double parent_pos, BestSplit &best) {
    const size_t n = rows.size();
    scratch.clear();
    scratch.reserve(n);
    for (int32_t r : rows)
      scratch.emplace_back(data.at(r, f), data.labels[r]);
    std::sort(scratch.begin(), scratch.end(),
              [](const auto &a, const auto &b) { return a.first < b.first; });
    if (scratch.front().first == scratch.back().first)
      return;

    const double parent_impurity = gini(parent_pos, static_cast<double>(n));
    double left_pos = 0.0;
    for (size_t i = 1; i < n; ++i) {
      left_pos += scratch[i - 1].second;
      if (scratch[i].first <= scratch[i - 1].first)
        continue;
      if (i < static_cast<size_t>(params.min_leaf) ||
          n - i < static_cast<size_t>(params.min_leaf))
        continue;
      double nl = static_cast<double>(i), nr = static_cast<double>(n - i);
      double gain = parent_impurity -
                    (nl * gini(left_pos, nl) +
                     nr * gini(parent_pos - left_pos, nr)) /
                        static_cast<double>(n);
      if (gain > best.gain) {
        best.gain = gain;
        best.feature = f;
        best.threshold =
            scratch[i - 1].first + (scratch[i].first - scratch[i - 1].first) / 2.0;
      }
    }
  }

  // Extremely-randomized split: one uniform threshold in (min, max).
  void consider_random(const std::vector<int32_t> &rows, int32_t f,
                       double parent_pos, BestSplit &best) {
    double lo = data.at(rows[0], f), hi = lo;
    for (int32_t r : rows) {
      double v = data.at(r, f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == hi)
      return;
    double thr = lo + rng.next_double() * (hi - lo);
    if (thr <= lo || thr > hi)
      return;
    double nl = 0, left_pos = 0, pos = 0;
    for (int32_t r : rows) {
      pos += data.labels[r];
      if (data.at(r, f) < thr) {
        nl += 1;
        left_pos += data.labels[r];
      }
    }
    (void)parent_pos;
    double n = static_cast<double>(rows.size());
    double nr = n - nl;
    if (nl < params.min_leaf || nr < params.min_leaf)
      return;
    double gain =
        gini(pos, n) - (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / n;
    if (gain > best.gain) {
      best.gain = gain;
      best.feature = f;
      best.threshold = thr;
    }
  }

  int32_t grow(std::vector<int32_t> &rows, int depth) {
    const double n = static_cast<double>(rows.size());
    double pos = 0;
    for (int32_t r : rows)
      pos += data.labels[r];

    int32_t node_id = static_cast<int32_t>(nodes.size());
    nodes.emplace_back();
    nodes[node_id].value = n > 0 ? pos / n : 0.0;

    bool can_split = (params.max_depth < 0 || depth < params.max_depth) &&
                     rows.size() >= 2 * static_cast<size_t>(params.min_leaf) &&
                     pos > 0 && pos < n;
    if (!can_split)
      return node_id;

    // Candidate features: a fresh partial Fisher-Yates draw per node when
    // max_features limits the pool, otherwise every feature in order.
    size_t k = params.max_features > 0
                   ? std::min<size_t>(params.max_features, data.n_features)
                   : data.n_features;
    if (k < data.n_features)
      for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(rng.below(data.n_features - i));
        std::swap(feature_order[i], feature_order[j]);
      }

    BestSplit best;
    for (size_t i = 0; i < k; ++i) {
      int32_t f = feature_order[i];
      if (params.random_thresholds)
        consider_random(rows, f, pos, best);
      else
        consider_cart(rows, f, pos, best);
    }
    if (best.feature < 0 || best.gain <= 0.0)
      return node_id;

    if (importance)
      (*importance)[best.feature] += (n / n_root) * best.gain;

    std::vector<int32_t> left, right;
    left.reserve(rows.size());
    right.reserve(rows.size());
    for (int32_t r : rows) {
      if (data.at(r, best.feature) < best.threshold)
        left.push_back(r);
      else
        right.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes[node_id].feature = best.feature;
    nodes[node_id].threshold = best.threshold;
    int32_t l = grow(left, depth + 1);
    nodes[node_id].left = l;
    int32_t r = grow(right, depth + 1);
    nodes[node_id].right = r;
    return node_id;
  }
};

} // namespace

Tree build_tree(const Dataset &data, const std::vector<int32_t> &rows,
                const TreeParams &params, uint64_t tree_seed,
                std::vector<double> *importance_out) {
  TreeBuilder builder(data, params, tree_seed, importance_out);
  builder.n_root = static_cast<double>(rows.size());

  std::vector<int32_t> root_rows;
  if (params.bootstrap) {
    root_rows.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i)
      root_rows[i] = rows[builder.rng.below(rows.size())];
  } else {
    root_rows = rows;
  }
  builder.grow(root_rows, 0);
  Tree t;
  t.nodes = std::move(builder.nodes);
  return t;
}

} // namespace triage
