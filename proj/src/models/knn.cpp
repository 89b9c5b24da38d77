#include <algorithm>
#include <numeric>

#include "internal.hpp"

namespace canguard::detail {

Eigen::MatrixXd knn_proba(const KnnModel& m, const Eigen::MatrixXd& x, int classes) {
  const auto n = static_cast<std::size_t>(m.x.rows());
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(m.k), n);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), classes);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (Eigen::Index q = 0; q < x.rows(); ++q) {
    for (std::size_t i = 0; i < n; ++i)
      dist[i] = {(m.x.row(static_cast<Eigen::Index>(i)) - x.row(q)).norm(), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t j = 0; j < k; ++j)
      out(q, m.y[dist[j].second]) += 1.0 / (dist[j].first + 1e-9);
    out.row(q) /= out.row(q).sum();
  }
  return out;
}

}  // namespace canguard::detail
