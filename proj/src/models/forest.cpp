#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "internal.hpp"

namespace canguard::detail {

ForestModel train_forest(const ForestParams& p, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                         std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  TreeParams tp;
  tp.criterion = p.criterion;
  tp.max_features = p.max_features < 0
                        ? std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))))
                        : p.max_features;

  ForestModel forest;
  forest.trees.resize(static_cast<std::size_t>(p.n_trees));

  // Every tree owns a sub-seed, so the result is independent of scheduling.
  auto grow = [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> samples(n);
    if (p.bootstrap) {
      for (auto& s : samples) s = static_cast<std::size_t>(rng.index(n));
    } else {
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    forest.trees[t] = build_tree(x, y, classes, std::move(samples), tp, rng);
  };

  unsigned workers = p.workers > 0 ? static_cast<unsigned>(p.workers) : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::max(1, p.n_trees)));
  if (workers == 1) {
    for (std::size_t t = 0; t < forest.trees.size(); ++t) grow(t);
    return forest;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < forest.trees.size(); t = next++) {
        try {
          grow(t);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return forest;
}

Eigen::MatrixXd forest_proba(const ForestModel& m, const Eigen::MatrixXd& x, int classes) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), classes);
  for (const auto& tree : m.trees) out += tree_proba(tree, x, classes);
  return out / static_cast<double>(m.trees.size());
}

std::vector<int> forest_vote(const ForestModel& m, const Eigen::MatrixXd& x, int classes) {
  Eigen::MatrixXd votes = Eigen::MatrixXd::Zero(x.rows(), classes);
  for (const auto& tree : m.trees) {
    const std::vector<int> pred = argmax_rows(tree_proba(tree, x, classes));
    for (Eigen::Index i = 0; i < x.rows(); ++i) votes(i, pred[static_cast<std::size_t>(i)]) += 1.0;
  }
  return argmax_rows(votes);
}

}  // namespace canguard::detail
