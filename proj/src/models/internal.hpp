#pragma once

// Per-family training and inference kernels shared by classifier.cpp.

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "canguard/models.hpp"
#include "canguard/rng.hpp"

namespace canguard::detail {

struct EncodedLabels {
  ClassVector classes;
  std::vector<int> y;
};

EncodedLabels encode_labels(const ClassVector& y);

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z);

/// Mean cross-entropy of softmax probabilities against class indices.
double cross_entropy(const Eigen::MatrixXd& proba, const std::vector<int>& y);

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows);

// --- logistic regression
LogRegModel init_logreg(Eigen::Index features, int classes, Rng* rng);
double logreg_loss(const LogRegModel& m, const Eigen::MatrixXd& x, const std::vector<int>& y, double l2,
                   LogRegModel* grad);
LogRegModel train_logreg(const LogRegParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                         std::vector<double>* history);
Eigen::MatrixXd logreg_proba(const LogRegModel& m, const Eigen::MatrixXd& x);

// --- CART
TreeModel build_tree(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                     std::vector<std::size_t> samples, const TreeParams& p, Rng& rng);
Eigen::MatrixXd tree_proba(const TreeModel& m, const Eigen::MatrixXd& x, int classes);

// --- forest
ForestModel train_forest(const ForestParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                         std::uint64_t seed);
Eigen::MatrixXd forest_proba(const ForestModel& m, const Eigen::MatrixXd& x, int classes);
std::vector<int> forest_vote(const ForestModel& m, const Eigen::MatrixXd& x, int classes);

// --- KNN
Eigen::MatrixXd knn_proba(const KnnModel& m, const Eigen::MatrixXd& x, int classes);

// --- SVM
SvmModel train_svm(const SvmParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                   std::uint64_t seed);
Eigen::MatrixXd svm_decision(const SvmModel& m, const Eigen::MatrixXd& x);

// --- neural
MlpModel init_mlp(Eigen::Index features, const std::vector<int>& hidden, int classes, Rng& rng);
double mlp_loss(const MlpModel& m, const Eigen::MatrixXd& x, const std::vector<int>& y, MlpModel* grad);
Eigen::MatrixXd mlp_proba(const MlpModel& m, const Eigen::MatrixXd& x);
MlpModel train_mlp(const MlpParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                   std::uint64_t seed, std::vector<double>* history);

CnnModel init_cnn(Eigen::Index features, int filters, int kernel, int classes, Rng& rng);
double cnn_loss(const CnnModel& m, const Eigen::MatrixXd& x, const std::vector<int>& y, CnnModel* grad);
Eigen::MatrixXd cnn_proba(const CnnModel& m, const Eigen::MatrixXd& x);
CnnModel train_cnn(const CnnParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                   std::uint64_t seed, std::vector<double>* history);

// --- flat parameter views (same order for a model and its gradient)
inline std::span<double> view(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> view(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline std::vector<std::span<double>> param_views(LogRegModel& m) { return {view(m.weights), view(m.bias)}; }
inline std::vector<std::span<double>> param_views(MlpModel& m) {
  std::vector<std::span<double>> out;
  for (auto& l : m.layers) {
    out.push_back(view(l.weights));
    out.push_back(view(l.bias));
  }
  return out;
}
inline std::vector<std::span<double>> param_views(CnnModel& m) {
  return {view(m.filters), view(m.filter_bias), view(m.head.weights), view(m.head.bias)};
}

template <typename Model>
Model zeros_like(const Model& m) {
  Model z = m;
  for (auto s : param_views(z)) std::fill(s.begin(), s.end(), 0.0);
  return z;
}

/// Minibatch Adam over a model with a loss(model, x, y, grad*) kernel.
template <typename Model, typename LossFn>
void adam_train(Model& model, const AdamParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y,
                std::uint64_t seed, LossFn loss, std::vector<double>* history) {
  Model grad = zeros_like(model);
  Model first = zeros_like(model);
  Model second = zeros_like(model);
  auto params = param_views(model);
  auto grads = param_views(grad);
  auto m1 = param_views(first);
  auto m2 = param_views(second);

  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0xada));
  const auto batch = static_cast<std::size_t>(std::max(1, p.batch));
  long step = 0;
  if (history) history->push_back(loss(model, x, y, nullptr));
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const Eigen::MatrixXd xb = gather_rows(x, rows);
      std::vector<int> yb;
      yb.reserve(rows.size());
      for (auto r : rows) yb.push_back(y[r]);
      loss(model, xb, yb, &grad);
      ++step;
      const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(step));
      for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t i = 0; i < params[t].size(); ++i) {
          const double g = grads[t][i];
          m1[t][i] = p.beta1 * m1[t][i] + (1.0 - p.beta1) * g;
          m2[t][i] = p.beta2 * m2[t][i] + (1.0 - p.beta2) * g * g;
          params[t][i] -= p.step * (m1[t][i] / c1) / (std::sqrt(m2[t][i] / c2) + p.epsilon);
        }
      }
    }
    if (history) history->push_back(loss(model, x, y, nullptr));
  }
}

}  // namespace canguard::detail
