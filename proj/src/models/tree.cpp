#include <algorithm>
#include <cmath>

#include "internal.hpp"

namespace canguard {

const TreeNode& TreeModel::leaf_for(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    node = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)];
}

namespace detail {
namespace {

double impurity(const std::vector<double>& counts, double total, Criterion criterion) {
  if (total <= 0.0) return 0.0;
  double acc = 0.0;
  if (criterion == Criterion::kGini) {
    for (double c : counts) {
      const double p = c / total;
      acc += p * p;
    }
    return 1.0 - acc;
  }
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    acc -= p * std::log2(p);
  }
  return acc;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double decrease = -1.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes, const TreeParams& p, Rng& rng)
      : x_(x), y_(y), classes_(classes), params_(p), rng_(rng) {}

  TreeModel build(std::vector<std::size_t> samples) {
    grow(std::move(samples), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> samples, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::vector<double> counts(static_cast<std::size_t>(classes_), 0.0);
    for (auto s : samples) counts[static_cast<std::size_t>(y_[s])] += 1.0;
    const double total = static_cast<double>(samples.size());
    {
      auto& dist = tree_.nodes[static_cast<std::size_t>(id)].distribution;
      dist.resize(counts.size());
      for (std::size_t c = 0; c < counts.size(); ++c) dist[c] = total > 0 ? counts[c] / total : 0.0;
    }
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
    if (pure || depth_capped || samples.size() < static_cast<std::size_t>(std::max(2, params_.min_samples_split)))
      return id;

    const double parent = impurity(counts, total, params_.criterion);
    Split best = search(samples, counts, parent, candidate_features());
    if (best.feature < 0 && params_.max_features > 0 && params_.max_features < x_.cols())
      best = search(samples, counts, parent, all_features());
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto s : samples) (x_(static_cast<Eigen::Index>(s), best.feature) <= best.threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::vector<int> all_features() const {
    std::vector<int> f(static_cast<std::size_t>(x_.cols()));
    std::iota(f.begin(), f.end(), 0);
    return f;
  }

  std::vector<int> candidate_features() {
    std::vector<int> f = all_features();
    const int m = params_.max_features;
    if (m <= 0 || m >= static_cast<int>(f.size())) return f;
    // Partial Fisher-Yates: the first m slots become a uniform subset.
    for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.index(f.size() - i));
      std::swap(f[i], f[j]);
    }
    f.resize(static_cast<std::size_t>(m));
    std::sort(f.begin(), f.end());
    return f;
  }

  // Exhaustive midpoint search; strict improvement keeps the lowest
  // (feature, threshold) among equal decreases.
  Split search(const std::vector<std::size_t>& samples, const std::vector<double>& counts, double parent,
               const std::vector<int>& features) const {
    Split best;
    const double total = static_cast<double>(samples.size());
    std::vector<std::pair<double, int>> column(samples.size());
    std::vector<double> left(counts.size());
    std::vector<double> right(counts.size());
    for (int f : features) {
      for (std::size_t i = 0; i < samples.size(); ++i)
        column[i] = {x_(static_cast<Eigen::Index>(samples[i]), f), y_[samples[i]]};
      std::sort(column.begin(), column.end());
      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        left[static_cast<std::size_t>(column[i].second)] += 1.0;
        right[static_cast<std::size_t>(column[i].second)] -= 1.0;
        const double a = column[i].first;
        const double b = column[i + 1].first;
        if (!(a < b)) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = total - nl;
        const double decrease = parent - (nl / total) * impurity(left, nl, params_.criterion) -
                                (nr / total) * impurity(right, nr, params_.criterion);
        if (decrease > best.decrease) {
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best = {f, mid, decrease};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<int>& y_;
  int classes_;
  const TreeParams& params_;
  Rng& rng_;
  TreeModel tree_;
};

}  // namespace

TreeModel build_tree(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                     std::vector<std::size_t> samples, const TreeParams& p, Rng& rng) {
  return TreeBuilder(x, y, classes, p, rng).build(std::move(samples));
}

Eigen::MatrixXd tree_proba(const TreeModel& m, const Eigen::MatrixXd& x, int classes) {
  Eigen::MatrixXd out(x.rows(), classes);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto& dist = m.leaf_for(x.row(i)).distribution;
    for (int c = 0; c < classes; ++c) out(i, c) = dist[static_cast<std::size_t>(c)];
  }
  return out;
}

}  // namespace detail
}  // namespace canguard
