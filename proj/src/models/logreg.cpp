#include "internal.hpp"

namespace canguard::detail {

LogRegModel init_logreg(Eigen::Index features, int classes, Rng* rng) {
  LogRegModel m;
  m.weights = Eigen::MatrixXd::Zero(classes, features);
  m.bias = Eigen::VectorXd::Zero(classes);
  if (rng) {
    for (Eigen::Index i = 0; i < m.weights.size(); ++i) m.weights.data()[i] = 0.1 * rng->normal();
    for (Eigen::Index i = 0; i < m.bias.size(); ++i) m.bias(i) = 0.1 * rng->normal();
  }
  return m;
}

Eigen::MatrixXd logreg_proba(const LogRegModel& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x * m.weights.transpose();
  z.rowwise() += m.bias.transpose();
  return softmax_rows(z);
}

// Mean cross-entropy plus (l2 / 2) * ||W||^2; the bias is not penalized.
double logreg_loss(const LogRegModel& m, const Eigen::MatrixXd& x, const std::vector<int>& y, double l2,
                   LogRegModel* grad) {
  const Eigen::MatrixXd p = logreg_proba(m, x);
  const double loss = cross_entropy(p, y) + 0.5 * l2 * m.weights.squaredNorm();
  if (grad) {
    Eigen::MatrixXd delta = p;
    for (std::size_t i = 0; i < y.size(); ++i) delta(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
    delta /= static_cast<double>(x.rows());
    grad->weights = delta.transpose() * x + l2 * m.weights;
    grad->bias = delta.colwise().sum().transpose();
  }
  return loss;
}

LogRegModel train_logreg(const LogRegParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                         std::vector<double>* history) {
  LogRegModel m = init_logreg(x.cols(), classes, nullptr);
  LogRegModel g = m;
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    const double loss = logreg_loss(m, x, y, p.l2, &g);
    if (history) history->push_back(loss);
    m.weights -= p.step * g.weights;
    m.bias -= p.step * g.bias;
  }
  if (history) history->push_back(logreg_loss(m, x, y, p.l2, nullptr));
  return m;
}

}  // namespace canguard::detail
