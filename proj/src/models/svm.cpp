#include <algorithm>
#include <cmath>

#include "canguard/error.hpp"
#include "internal.hpp"

namespace canguard::detail {
namespace {

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a * b.transpose();
  d2.colwise() += na;
  d2.rowwise() += nb.transpose();
  return (-gamma * d2.array().max(0.0)).exp().matrix();
}

// Two-coordinate SMO on a precomputed kernel. The second coordinate is the
// one maximizing |E_i - E_j|; if that step makes no progress, the remaining
// candidates are tried from a random offset.
class Smo {
 public:
  Smo(const Eigen::MatrixXd& kernel, Eigen::VectorXd labels, const SvmParams& p, std::uint64_t seed)
      : k_(kernel), y_(std::move(labels)), c_(p.c), tol_(p.tolerance), max_passes_(p.max_passes), rng_(seed) {
    const auto n = y_.size();
    alpha_ = Eigen::VectorXd::Zero(n);
    error_ = -y_;
  }

  void run() {
    const Eigen::Index n = y_.size();
    for (int pass = 0; pass < max_passes_; ++pass) {
      int changed = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (violates_kkt(i) && improve(i)) ++changed;
      if (changed == 0) break;
    }
  }

  const Eigen::VectorXd& alpha() const { return alpha_; }
  double bias() const { return b_; }

 private:
  bool violates_kkt(Eigen::Index i) const {
    const double r = error_(i) * y_(i);
    return (r < -tol_ && alpha_(i) < c_) || (r > tol_ && alpha_(i) > 0.0);
  }

  bool improve(Eigen::Index i) {
    const Eigen::Index n = y_.size();
    Eigen::Index best = -1;
    double gap = -1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double g = std::abs(error_(i) - error_(j));
      if (g > gap) {
        gap = g;
        best = j;
      }
    }
    if (best >= 0 && take_step(i, best)) return true;
    const auto offset = static_cast<Eigen::Index>(rng_.index(static_cast<std::uint64_t>(n)));
    for (Eigen::Index t = 0; t < n; ++t) {
      const Eigen::Index j = (offset + t) % n;
      if (j != i && j != best && take_step(i, j)) return true;
    }
    return false;
  }

  bool take_step(Eigen::Index i, Eigen::Index j) {
    const double ai = alpha_(i), aj = alpha_(j);
    const double yi = y_(i), yj = y_(j);
    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj - ai);
      hi = std::min(c_, c_ + aj - ai);
    } else {
      lo = std::max(0.0, ai + aj - c_);
      hi = std::min(c_, ai + aj);
    }
    if (hi - lo < 1e-12) return false;
    const double eta = 2.0 * k_(i, j) - k_(i, i) - k_(j, j);
    if (eta >= -1e-12) return false;
    double aj_new = std::clamp(aj - yj * (error_(i) - error_(j)) / eta, lo, hi);
    if (std::abs(aj_new - aj) < 1e-8 * (aj_new + aj + 1e-8)) return false;
    const double ai_new = ai + yi * yj * (aj - aj_new);
    const double di = ai_new - ai, dj = aj_new - aj;

    const double b1 = b_ - error_(i) - yi * di * k_(i, i) - yj * dj * k_(i, j);
    const double b2 = b_ - error_(j) - yi * di * k_(i, j) - yj * dj * k_(j, j);
    double b_new;
    if (ai_new > 0.0 && ai_new < c_) b_new = b1;
    else if (aj_new > 0.0 && aj_new < c_) b_new = b2;
    else b_new = (b1 + b2) / 2.0;

    error_ += (yi * di) * k_.col(i) + (yj * dj) * k_.col(j);
    error_.array() += b_new - b_;
    b_ = b_new;
    alpha_(i) = ai_new;
    alpha_(j) = aj_new;
    return true;
  }

  const Eigen::MatrixXd& k_;
  Eigen::VectorXd y_;
  double c_, tol_;
  int max_passes_;
  Rng rng_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd error_;  // f(x_i) - y_i
  double b_ = 0.0;
};

}  // namespace

SvmModel train_svm(const SvmParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                   std::uint64_t seed) {
  SvmModel model;
  model.gamma = p.gamma;
  if (model.gamma <= 0.0) {
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const double mean_var = (x.rowwise() - mean).array().square().colwise().mean().mean();
    model.gamma = mean_var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * mean_var)
                                 : 1.0 / static_cast<double>(x.cols());
  }
  const Eigen::MatrixXd kernel = rbf_kernel(x, x, model.gamma);
  model.machines.resize(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    Eigen::VectorXd labels(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) labels(i) = y[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
    BinarySvm& machine = model.machines[static_cast<std::size_t>(c)];
    if ((labels.array() > 0).all() || (labels.array() < 0).all()) {
      machine.support.resize(0, x.cols());
      machine.bias = labels(0);
      continue;
    }
    Smo smo(kernel, labels, p, derive_seed(seed, static_cast<std::uint64_t>(c)));
    smo.run();
    std::vector<Eigen::Index> sv;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (smo.alpha()(i) > 0.0) sv.push_back(i);
    machine.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
    machine.coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
      machine.support.row(static_cast<Eigen::Index>(s)) = x.row(sv[s]);
      machine.coef(static_cast<Eigen::Index>(s)) = smo.alpha()(sv[s]) * labels(sv[s]);
    }
    machine.bias = smo.bias();
  }
  return model;
}

Eigen::MatrixXd svm_decision(const SvmModel& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(m.machines.size()));
  for (std::size_t c = 0; c < m.machines.size(); ++c) {
    const BinarySvm& machine = m.machines[c];
    Eigen::VectorXd f = Eigen::VectorXd::Constant(x.rows(), machine.bias);
    if (machine.support.rows() > 0) f += rbf_kernel(x, machine.support, m.gamma) * machine.coef;
    out.col(static_cast<Eigen::Index>(c)) = f;
  }
  return out;
}

}  // namespace canguard::detail
