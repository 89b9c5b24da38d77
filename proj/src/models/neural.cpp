#include <cmath>

#include "internal.hpp"

namespace canguard::detail {
namespace {

DenseLayer he_layer(Eigen::Index in, Eigen::Index out, Rng& rng) {
  DenseLayer l;
  l.weights.resize(out, in);
  const double scale = std::sqrt(2.0 / static_cast<double>(in));
  for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = scale * rng.normal();
  l.bias = Eigen::VectorXd::Zero(out);
  return l;
}

Eigen::MatrixXd affine(const DenseLayer& l, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x * l.weights.transpose();
  z.rowwise() += l.bias.transpose();
  return z;
}

// (P - onehot(y)) / batch: gradient of mean cross-entropy w.r.t. logits.
Eigen::MatrixXd softmax_delta(const Eigen::MatrixXd& p, const std::vector<int>& y) {
  Eigen::MatrixXd d = p;
  for (std::size_t i = 0; i < y.size(); ++i) d(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
  return d / static_cast<double>(p.rows());
}

}  // namespace

// --- MLP

MlpModel init_mlp(Eigen::Index features, const std::vector<int>& hidden, int classes, Rng& rng) {
  MlpModel m;
  Eigen::Index in = features;
  for (int h : hidden) {
    m.layers.push_back(he_layer(in, h, rng));
    in = h;
  }
  m.layers.push_back(he_layer(in, classes, rng));
  return m;
}

Eigen::MatrixXd mlp_proba(const MlpModel& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    h = affine(m.layers[l], h);
    if (l + 1 < m.layers.size()) h = h.cwiseMax(0.0);
  }
  return softmax_rows(h);
}

double mlp_loss(const MlpModel& m, const Eigen::MatrixXd& x, const std::vector<int>& y, MlpModel* grad) {
  const std::size_t depth = m.layers.size();
  std::vector<Eigen::MatrixXd> inputs(depth);  // activation entering each layer
  std::vector<Eigen::MatrixXd> pre(depth);
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < depth; ++l) {
    inputs[l] = h;
    pre[l] = affine(m.layers[l], h);
    h = l + 1 < depth ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
  }
  const Eigen::MatrixXd p = softmax_rows(h);
  const double loss = cross_entropy(p, y);
  if (!grad) return loss;

  Eigen::MatrixXd delta = softmax_delta(p, y);
  for (std::size_t l = depth; l-- > 0;) {
    grad->layers[l].weights = delta.transpose() * inputs[l];
    grad->layers[l].bias = delta.colwise().sum().transpose();
    if (l == 0) break;
    delta = (delta * m.layers[l].weights).cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return loss;
}

MlpModel train_mlp(const MlpParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                   std::uint64_t seed, std::vector<double>* history) {
  Rng init(derive_seed(seed, 0x1417));
  MlpModel m = init_mlp(x.cols(), p.hidden, classes, init);
  adam_train(m, p.adam, x, y, seed, mlp_loss, history);
  return m;
}

// --- 1D CNN: valid convolution over the feature axis, ReLU, global max-pool, dense softmax.

CnnModel init_cnn(Eigen::Index features, int filters, int kernel, int classes, Rng& rng) {
  (void)features;
  CnnModel m;
  m.filters.resize(filters, kernel);
  const double scale = std::sqrt(2.0 / static_cast<double>(kernel));
  for (Eigen::Index i = 0; i < m.filters.size(); ++i) m.filters.data()[i] = scale * rng.normal();
  m.filter_bias = Eigen::VectorXd::Zero(filters);
  m.head = he_layer(filters, classes, rng);
  return m;
}

namespace {

struct CnnForward {
  Eigen::MatrixXd pooled;           // samples x filters
  std::vector<Eigen::Index> where;  // argmax position, samples*filters, -1 when the max is a clipped 0
};

CnnForward cnn_forward(const CnnModel& m, const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index f = m.filters.rows();
  const Eigen::Index k = m.filters.cols();
  const Eigen::Index positions = x.cols() - k + 1;
  CnnForward out;
  out.pooled = Eigen::MatrixXd::Zero(n, f);
  out.where.assign(static_cast<std::size_t>(n * f), -1);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index c = 0; c < f; ++c) {
      double best = 0.0;  // ReLU floor
      Eigen::Index at = -1;
      for (Eigen::Index p = 0; p < positions; ++p) {
        const double v = x.row(s).segment(p, k).dot(m.filters.row(c)) + m.filter_bias(c);
        if (v > best) {
          best = v;
          at = p;
        }
      }
      out.pooled(s, c) = best;
      out.where[static_cast<std::size_t>(s * f + c)] = at;
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd cnn_proba(const CnnModel& m, const Eigen::MatrixXd& x) {
  return softmax_rows(affine(m.head, cnn_forward(m, x).pooled));
}

double cnn_loss(const CnnModel& m, const Eigen::MatrixXd& x, const std::vector<int>& y, CnnModel* grad) {
  const CnnForward fw = cnn_forward(m, x);
  const Eigen::MatrixXd p = softmax_rows(affine(m.head, fw.pooled));
  const double loss = cross_entropy(p, y);
  if (!grad) return loss;

  const Eigen::MatrixXd delta = softmax_delta(p, y);
  grad->head.weights = delta.transpose() * fw.pooled;
  grad->head.bias = delta.colwise().sum().transpose();
  const Eigen::MatrixXd dpool = delta * m.head.weights;
  grad->filters.setZero();
  grad->filter_bias.setZero();
  const Eigen::Index f = m.filters.rows();
  const Eigen::Index k = m.filters.cols();
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    for (Eigen::Index c = 0; c < f; ++c) {
      const Eigen::Index at = fw.where[static_cast<std::size_t>(s * f + c)];
      if (at < 0) continue;
      grad->filters.row(c) += dpool(s, c) * x.row(s).segment(at, k);
      grad->filter_bias(c) += dpool(s, c);
    }
  }
  return loss;
}

CnnModel train_cnn(const CnnParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                   std::uint64_t seed, std::vector<double>* history) {
  Rng init(derive_seed(seed, 0xc22));
  CnnModel m = init_cnn(x.cols(), p.filters, p.kernel, classes, init);
  adam_train(m, p.adam, x, y, seed, cnn_loss, history);
  return m;
}

}  // namespace canguard::detail
