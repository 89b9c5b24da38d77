#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "canguard/error.hpp"
#include "internal.hpp"

namespace canguard {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::kLogReg: return "LOGREG";
    case Family::kTree: return "TREE";
    case Family::kForest: return "FOREST";
    case Family::kKnn: return "KNN";
    case Family::kSvmRbf: return "SVM_RBF";
    case Family::kMlp: return "MLP";
    case Family::kCnn1d: return "CNN1D";
  }
  return "?";
}

std::optional<Family> parse_family(std::string_view s) {
  for (Family f : {Family::kLogReg, Family::kTree, Family::kForest, Family::kKnn, Family::kSvmRbf, Family::kMlp,
                   Family::kCnn1d})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

ClassifierSpec ClassifierSpec::make(Family family, std::uint64_t seed) {
  ClassifierSpec spec;
  spec.seed = seed;
  switch (family) {
    case Family::kLogReg: spec.params = LogRegParams{}; break;
    case Family::kTree: spec.params = TreeParams{}; break;
    case Family::kForest: spec.params = ForestParams{}; break;
    case Family::kKnn: spec.params = KnnParams{}; break;
    case Family::kSvmRbf: spec.params = SvmParams{}; break;
    case Family::kMlp: spec.params = MlpParams{}; break;
    case Family::kCnn1d: spec.params = CnnParams{}; break;
  }
  return spec;
}

std::string ClassifierSpec::describe() const {
  std::string name(to_string(family()));
  if (const auto* t = std::get_if<TreeParams>(&params))
    name += t->criterion == Criterion::kGini ? "(gini)" : "(entropy)";
  return name;
}

void validate(const ClassifierSpec& spec) {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ArgumentError("invalid hyperparameter: " + what);
  };
  auto check_adam = [&](const AdamParams& a) {
    check(a.step > 0.0, "learning rate must be > 0");
    check(a.epochs >= 0, "epochs must be >= 0");
    check(a.batch >= 1, "batch must be >= 1");
    check(a.beta1 >= 0.0 && a.beta1 < 1.0 && a.beta2 >= 0.0 && a.beta2 < 1.0, "betas must lie in [0, 1)");
  };
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LogRegParams>) {
          check(p.step > 0.0, "learning rate must be > 0");
          check(p.l2 >= 0.0, "l2 must be >= 0");
          check(p.epochs >= 0, "epochs must be >= 0");
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          check(p.max_depth >= 0, "max_depth must be >= 0");
          check(p.min_samples_split >= 2, "min_samples_split must be >= 2");
          check(p.max_features >= 0, "max_features must be >= 0");
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          check(p.n_trees >= 1, "trees must be >= 1");
          check(p.max_features >= -1, "max_features must be >= -1");
          check(p.workers >= 0, "workers must be >= 0");
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          check(p.k >= 1, "k must be >= 1");
        } else if constexpr (std::is_same_v<P, SvmParams>) {
          check(p.c > 0.0, "C must be > 0");
          check(p.gamma >= 0.0, "gamma must be >= 0");
          check(p.tolerance > 0.0, "tolerance must be > 0");
          check(p.max_passes >= 1, "max_passes must be >= 1");
        } else if constexpr (std::is_same_v<P, MlpParams>) {
          for (int h : p.hidden) check(h >= 1, "hidden width must be >= 1");
          check_adam(p.adam);
        } else {
          check(p.filters >= 1, "filters must be >= 1");
          check(p.kernel >= 1, "kernel must be >= 1");
          check_adam(p.adam);
        }
      },
      spec.params);
}

namespace detail {

EncodedLabels encode_labels(const ClassVector& y) {
  EncodedLabels out;
  out.classes = distinct_classes(y);
  std::map<std::string, int> lookup;
  for (std::size_t i = 0; i < out.classes.size(); ++i) lookup[out.classes[i]] = static_cast<int>(i);
  out.y.reserve(y.size());
  for (const auto& label : y) out.y.push_back(lookup.at(label));
  return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p = z.colwise() - z.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

double cross_entropy(const Eigen::MatrixXd& proba, const std::vector<int>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    total -= std::log(std::max(proba(static_cast<Eigen::Index>(i), y[i]), 1e-300));
  return total / static_cast<double>(y.size());
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace detail

FittedModel::FittedModel(ClassVector classes, Eigen::Index input_dim, ModelParams params)
    : classes_(std::move(classes)), input_dim_(input_dim), params_(std::move(params)) {
  if (classes_.empty()) throw ArgumentError("model class list is empty");
  if (distinct_classes(classes_).size() != classes_.size()) throw ArgumentError("model class list has duplicates");
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

FittedModel fit(const ClassifierSpec& spec, const Eigen::MatrixXd& x, const ClassVector& y) {
  validate(spec);
  if (x.rows() == 0) throw FitError(spec.describe() + ": no training samples");
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw ShapeError(spec.describe() + ": " + std::to_string(x.rows()) + " rows but " + std::to_string(y.size()) +
                     " labels");
  if (!x.allFinite()) throw FitError(spec.describe() + ": training matrix has non-finite values");
  const auto labels = detail::encode_labels(y);
  const int classes = static_cast<int>(labels.classes.size());
  if (x.rows() < classes) throw FitError(spec.describe() + ": fewer samples than classes");

  const auto start = std::chrono::steady_clock::now();
  std::vector<double> history;
  ModelParams params = std::visit(
      [&](const auto& p) -> ModelParams {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LogRegParams>) {
          return detail::train_logreg(p, x, labels.y, classes, &history);
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          Rng rng(derive_seed(spec.seed, 0x7ee));
          std::vector<std::size_t> all(static_cast<std::size_t>(x.rows()));
          std::iota(all.begin(), all.end(), std::size_t{0});
          return detail::build_tree(x, labels.y, classes, std::move(all), p, rng);
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          return detail::train_forest(p, x, labels.y, classes, spec.seed);
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          if (p.k > x.rows())
            throw FitError("KNN: k=" + std::to_string(p.k) + " exceeds " + std::to_string(x.rows()) + " samples");
          return KnnModel{p.k, x, labels.y};
        } else if constexpr (std::is_same_v<P, SvmParams>) {
          return detail::train_svm(p, x, labels.y, classes, spec.seed);
        } else if constexpr (std::is_same_v<P, MlpParams>) {
          return detail::train_mlp(p, x, labels.y, classes, spec.seed, &history);
        } else {
          if (p.kernel > x.cols())
            throw FitError("CNN1D: kernel " + std::to_string(p.kernel) + " wider than " + std::to_string(x.cols()) +
                           " features");
          return detail::train_cnn(p, x, labels.y, classes, spec.seed, &history);
        }
      },
      spec.params);
  const auto stop = std::chrono::steady_clock::now();

  FittedModel model(labels.classes, x.cols(), std::move(params));
  model.train_seconds = std::chrono::duration<double>(stop - start).count();
  model.loss_history = std::move(history);
  return model;
}

ProbabilityMatrix predict_proba(const FittedModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.input_dim())
    throw ShapeError("model expects " + std::to_string(model.input_dim()) + " features, got " +
                     std::to_string(x.cols()));
  const int classes = static_cast<int>(model.classes().size());
  return std::visit(
      [&](const auto& m) -> ProbabilityMatrix {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LogRegModel>) return detail::logreg_proba(m, x);
        else if constexpr (std::is_same_v<M, TreeModel>) return detail::tree_proba(m, x, classes);
        else if constexpr (std::is_same_v<M, ForestModel>) return detail::forest_proba(m, x, classes);
        else if constexpr (std::is_same_v<M, KnnModel>) return detail::knn_proba(m, x, classes);
        else if constexpr (std::is_same_v<M, SvmModel>) return detail::softmax_rows(detail::svm_decision(m, x));
        else if constexpr (std::is_same_v<M, MlpModel>) return detail::mlp_proba(m, x);
        else return detail::cnn_proba(m, x);
      },
      model.params());
}

ClassVector predict(const FittedModel& model, const Eigen::MatrixXd& x) {
  std::vector<int> idx;
  if (const auto* forest = std::get_if<ForestModel>(&model.params())) {
    if (x.cols() != model.input_dim()) throw ShapeError("model expects " + std::to_string(model.input_dim()) + " features");
    idx = detail::forest_vote(*forest, x, static_cast<int>(model.classes().size()));
  } else {
    idx = argmax_rows(predict_proba(model, x));
  }
  ClassVector out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(model.classes()[static_cast<std::size_t>(i)]);
  return out;
}

namespace {

template <typename Model, typename LossFn>
double compare_gradients(Model model, LossFn loss) {
  Model grad = detail::zeros_like(model);
  const double base = loss(model, &grad);
  if (!std::isfinite(base)) throw NumericError("gradient check: non-finite loss");
  auto params = detail::param_views(model);
  auto grads = detail::param_views(grad);
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double saved = params[t][i];
      params[t][i] = saved + kStep;
      const double up = loss(model, nullptr);
      params[t][i] = saved - kStep;
      const double down = loss(model, nullptr);
      params[t][i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) throw NumericError("gradient check: non-finite loss");
      const double numeric = (up - down) / (2.0 * kStep);
      const double analytic = grads[t][i];
      // Relative to the larger magnitude, floored so that gradients at the
      // finite-difference noise level (~1e-11) do not dominate.
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  }
  return worst;
}

}  // namespace

double gradient_check(const ClassifierSpec& spec, const Eigen::MatrixXd& x, const ClassVector& y, bool zero_init) {
  validate(spec);
  if (x.rows() == 0 || x.rows() > 16) throw ArgumentError("gradient check takes 1..16 samples");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ShapeError("gradient check: label count mismatch");
  const auto labels = detail::encode_labels(y);
  const int classes = static_cast<int>(labels.classes.size());
  Rng rng(derive_seed(spec.seed, 0x9c));
  switch (spec.family()) {
    case Family::kLogReg: {
      const double l2 = std::get<LogRegParams>(spec.params).l2;
      auto model = detail::init_logreg(x.cols(), classes, zero_init ? nullptr : &rng);
      return compare_gradients(model, [&](const LogRegModel& m, LogRegModel* g) {
        return detail::logreg_loss(m, x, labels.y, l2, g);
      });
    }
    case Family::kMlp: {
      const auto& p = std::get<MlpParams>(spec.params);
      auto model = detail::init_mlp(x.cols(), p.hidden, classes, rng);
      return compare_gradients(model, [&](const MlpModel& m, MlpModel* g) { return detail::mlp_loss(m, x, labels.y, g); });
    }
    case Family::kCnn1d: {
      const auto& p = std::get<CnnParams>(spec.params);
      if (p.kernel > x.cols()) throw ArgumentError("CNN1D kernel wider than the input");
      auto model = detail::init_cnn(x.cols(), p.filters, p.kernel, classes, rng);
      return compare_gradients(model, [&](const CnnModel& m, CnnModel* g) { return detail::cnn_loss(m, x, labels.y, g); });
    }
    default:
      throw ArgumentError("gradient check supports LOGREG, MLP and CNN1D, not " + std::string(to_string(spec.family())));
  }
}

}  // namespace canguard
