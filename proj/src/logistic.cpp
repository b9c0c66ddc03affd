#include "triage/models.hpp"

#include <algorithm>
#include <cmath>

namespace triage {

namespace {

// log(1 + e^t) without overflow.
inline double softplus(double t) {
  return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double sigmoid(double t) {
  return t >= 0 ? 1.0 / (1.0 + std::exp(-t))
                : std::exp(t) / (1.0 + std::exp(t));
}

} // namespace

double logistic_loss(const std::vector<std::vector<double>> &x,
                     const std::vector<uint8_t> &y,
                     const std::vector<double> &w, double b, double l2) {
  const size_t n = x.size();
  double loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double z = b;
    for (size_t f = 0; f < w.size(); ++f)
      z += w[f] * x[i][f];
    double margin = y[i] ? z : -z;
    loss += softplus(-margin);
  }
  loss /= static_cast<double>(n);
  double reg = 0.0;
  for (double wf : w)
    reg += wf * wf;
  return loss + 0.5 * l2 * reg;
}

void logistic_gradient(const std::vector<std::vector<double>> &x,
                       const std::vector<uint8_t> &y,
                       const std::vector<double> &w, double b, double l2,
                       std::vector<double> &grad_w, double &grad_b) {
  const size_t n = x.size();
  grad_w.assign(w.size(), 0.0);
  grad_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double z = b;
    for (size_t f = 0; f < w.size(); ++f)
      z += w[f] * x[i][f];
    double resid = sigmoid(z) - static_cast<double>(y[i]);
    grad_b += resid;
    for (size_t f = 0; f < w.size(); ++f)
      grad_w[f] += resid * x[i][f];
  }
  for (size_t f = 0; f < w.size(); ++f)
    grad_w[f] = grad_w[f] / static_cast<double>(n) + l2 * w[f];
  grad_b /= static_cast<double>(n);
}

namespace detail {

// Fits the standardized-design ridge logistic model by full-batch gradient
// descent with Armijo backtracking, until the gradient sup-norm falls under
// hp.tol or hp.max_iter passes.
void fit_scaled_logistic(const Dataset &data, const Hyperparams &hp,
                         TrainedModel &model) {
  const size_t n = data.n_rows, nf = data.n_features;
  model.mu.assign(nf, 0.0);
  model.sigma.assign(nf, 0.0);
  for (size_t f = 0; f < nf; ++f) {
    double mean = 0.0;
    for (size_t r = 0; r < n; ++r)
      mean += data.at(r, f);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (size_t r = 0; r < n; ++r) {
      double d = data.at(r, f) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    model.mu[f] = mean;
    // Constant columns are zeroed out (sigma stays 0).
    model.sigma[f] = var > 1e-24 ? std::sqrt(var) : 0.0;
  }

  // Standardized design, row-major.
  std::vector<std::vector<double>> xs(n, std::vector<double>(nf));
  for (size_t r = 0; r < n; ++r)
    for (size_t f = 0; f < nf; ++f)
      xs[r][f] = model.sigma[f] > 0
                     ? (data.at(r, f) - model.mu[f]) / model.sigma[f]
                     : 0.0;

  std::vector<double> w(nf, 0.0), grad(nf);
  double b = 0.0, grad_b = 0.0;
  double step = 1.0;
  double loss = logistic_loss(xs, data.labels, w, b, hp.l2);
  for (int iter = 0; iter < hp.max_iter; ++iter) {
    logistic_gradient(xs, data.labels, w, b, hp.l2, grad, grad_b);
    double sup = std::abs(grad_b), sq = grad_b * grad_b;
    for (double g : grad) {
      sup = std::max(sup, std::abs(g));
      sq += g * g;
    }
    if (sup < hp.tol)
      break;

    std::vector<double> w_try(nf);
    step = std::min(step * 2.0, 64.0);
    while (true) {
      for (size_t f = 0; f < nf; ++f)
        w_try[f] = w[f] - step * grad[f];
      double b_try = b - step * grad_b;
      double loss_try = logistic_loss(xs, data.labels, w_try, b_try, hp.l2);
      if (loss_try <= loss - 1e-4 * step * sq || step < 1e-12) {
        w = std::move(w_try);
        w_try.assign(nf, 0.0);
        b = b_try;
        loss = loss_try;
        break;
      }
      step *= 0.5;
    }
  }

  model.weights = std::move(w);
  model.intercept = b;

  model.feature_importances.assign(nf, 0.0);
  double total = 0.0;
  for (size_t f = 0; f < nf; ++f)
    total += std::abs(model.weights[f]);
  if (total > 0)
    for (size_t f = 0; f < nf; ++f)
      model.feature_importances[f] = std::abs(model.weights[f]) / total;
  else
    model.feature_importances.assign(nf, 1.0 / static_cast<double>(nf));
}

double score_logistic(const TrainedModel &model, std::span<const double> row) {
  double z = model.intercept;
  for (size_t f = 0; f < model.weights.size(); ++f)
    if (model.sigma[f] > 0)
      z += model.weights[f] * (row[f] - model.mu[f]) / model.sigma[f];
  return sigmoid(z);
}

} // namespace detail

} // namespace triage
