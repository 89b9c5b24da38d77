#include "canguard/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "canguard/error.hpp"

namespace canguard {
namespace {

void require_finite(const Eigen::MatrixXd& x, const char* what) {
  if (!x.allFinite()) throw NumericError(std::string(what) + ": input contains non-finite values");
}

// Largest-magnitude loading of every row made positive (first index on ties).
void fix_signs(Eigen::MatrixXd& rows) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < rows.cols(); ++c)
      if (std::abs(rows(r, c)) > std::abs(rows(r, best))) best = c;
    if (rows(r, best) < 0.0) rows.row(r) *= -1.0;
  }
}

struct ClassIndex {
  ClassVector classes;
  std::vector<std::size_t> of_sample;
  std::vector<std::size_t> counts;
};

ClassIndex index_classes(const ClassVector& y) {
  ClassIndex ci;
  ci.classes = distinct_classes(y);
  std::map<std::string, std::size_t> lookup;
  for (std::size_t i = 0; i < ci.classes.size(); ++i) lookup[ci.classes[i]] = i;
  ci.counts.assign(ci.classes.size(), 0);
  ci.of_sample.reserve(y.size());
  for (const auto& label : y) {
    const std::size_t c = lookup.at(label);
    ci.of_sample.push_back(c);
    ++ci.counts[c];
  }
  return ci;
}

struct Scatter {
  Eigen::VectorXd mean;
  Eigen::MatrixXd class_means;
  Eigen::MatrixXd within;
  Eigen::MatrixXd between;
};

Scatter scatter_matrices(const Eigen::MatrixXd& x, const ClassIndex& ci) {
  const Eigen::Index n = x.cols();
  const auto k = static_cast<Eigen::Index>(ci.classes.size());
  Scatter s;
  s.mean = x.colwise().mean().transpose();
  s.class_means = Eigen::MatrixXd::Zero(k, n);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    s.class_means.row(static_cast<Eigen::Index>(ci.of_sample[static_cast<std::size_t>(i)])) += x.row(i);
  for (Eigen::Index c = 0; c < k; ++c) s.class_means.row(c) /= static_cast<double>(ci.counts[static_cast<std::size_t>(c)]);
  s.within = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd d =
        x.row(i) - s.class_means.row(static_cast<Eigen::Index>(ci.of_sample[static_cast<std::size_t>(i)]));
    s.within.noalias() += d.transpose() * d;
  }
  s.between = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::VectorXd d = s.class_means.row(c).transpose() - s.mean;
    s.between.noalias() += static_cast<double>(ci.counts[static_cast<std::size_t>(c)]) * d * d.transpose();
  }
  return s;
}

nlohmann::json score_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double score_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw FormatError("bad score value '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

FeatureMatrix to_feature_matrix(const RecordTable& table) {
  FeatureMatrix fm;
  const auto n = static_cast<Eigen::Index>(table.size());
  fm.x.resize(n, static_cast<Eigen::Index>(kNumFeatures));
  fm.y.reserve(table.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = table[static_cast<std::size_t>(i)];
    fm.x(i, 0) = r.id;
    for (std::size_t b = 0; b < kPayloadBytes; ++b) fm.x(i, static_cast<Eigen::Index>(b + 1)) = r.data[b];
    fm.y.emplace_back(to_string(r.specific_class));
  }
  return fm;
}

ClassVector distinct_classes(const ClassVector& y) {
  ClassVector out(y);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::kScaler: return "SCALER";
    case TransformKind::kPca: return "PCA";
    case TransformKind::kLda: return "LDA";
    case TransformKind::kKBest: return "KBEST";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// FittedTransform

FittedTransform::FittedTransform(Params params, Eigen::Index input_dim, Eigen::Index output_dim)
    : params_(std::move(params)), input_dim_(input_dim), output_dim_(output_dim) {}

Eigen::MatrixXd FittedTransform::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_dim_)
    throw ShapeError(std::string(to_string(kind())) + " transform expects " + std::to_string(input_dim_) +
                     " columns, got " + std::to_string(x.cols()));
  return std::visit(
      [&](const auto& p) -> Eigen::MatrixXd {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ScalerParams>) {
          return (x.rowwise() - p.mean.transpose()).array().rowwise() / p.scale.transpose().array();
        } else if constexpr (std::is_same_v<P, PcaParams> || std::is_same_v<P, LdaParams>) {
          return (x.rowwise() - p.mean.transpose()) * p.components.transpose();
        } else {
          Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(p.indices.size()));
          for (std::size_t j = 0; j < p.indices.size(); ++j)
            out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(p.indices[j]));
          return out;
        }
      },
      params_);
}

Eigen::MatrixXd FittedTransform::inverse(const Eigen::MatrixXd& scores) const {
  if (kind() != TransformKind::kPca) throw ArgumentError("inverse is defined for PCA only");
  const auto& p = as<PcaParams>();
  if (scores.cols() != output_dim_) throw ShapeError("PCA inverse: column count mismatch");
  return (scores * p.components).rowwise() + p.mean.transpose();
}

nlohmann::json FittedTransform::to_json() const {
  nlohmann::json params = std::visit(
      [](const auto& p) -> nlohmann::json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ScalerParams>) {
          return {{"mean", vector_to_json(p.mean)},
                  {"scale", vector_to_json(p.scale)},
                  {"constant_columns", p.constant_columns}};
        } else if constexpr (std::is_same_v<P, PcaParams>) {
          return {{"mean", vector_to_json(p.mean)},
                  {"components", matrix_to_json(p.components)},
                  {"explained_variance", vector_to_json(p.explained_variance)},
                  {"explained_variance_ratio", vector_to_json(p.explained_variance_ratio)},
                  {"variance_target", p.variance_target}};
        } else if constexpr (std::is_same_v<P, LdaParams>) {
          return {{"mean", vector_to_json(p.mean)},
                  {"components", matrix_to_json(p.components)},
                  {"eigenvalues", vector_to_json(p.eigenvalues)},
                  {"classes", p.classes},
                  {"class_means", matrix_to_json(p.class_means)},
                  {"ridge", p.ridge}};
        } else {
          nlohmann::json scores = nlohmann::json::array();
          for (double s : p.scores) scores.push_back(score_to_json(s));
          return {{"indices", p.indices}, {"scores", scores}};
        }
      },
      params_);
  return {{"schema_version", kTransformSchemaVersion},
          {"kind", to_string(kind())},
          {"input_dim", input_dim_},
          {"output_dim", output_dim_},
          {"parameters", params}};
}

FittedTransform FittedTransform::from_json(const nlohmann::json& doc) {
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kTransformSchemaVersion)
      throw FormatError("unsupported transform schema_version " + std::to_string(version));
    const auto kind = doc.at("kind").get<std::string>();
    const auto in = doc.at("input_dim").get<Eigen::Index>();
    const auto out = doc.at("output_dim").get<Eigen::Index>();
    const auto& p = doc.at("parameters");
    if (kind == "SCALER") {
      ScalerParams s{vector_from_json(p.at("mean")), vector_from_json(p.at("scale")),
                     p.at("constant_columns").get<std::vector<std::size_t>>()};
      return FittedTransform(std::move(s), in, out);
    }
    if (kind == "PCA") {
      PcaParams s{vector_from_json(p.at("mean")), matrix_from_json(p.at("components")),
                  vector_from_json(p.at("explained_variance")),
                  vector_from_json(p.at("explained_variance_ratio")), p.at("variance_target").get<double>()};
      return FittedTransform(std::move(s), in, out);
    }
    if (kind == "LDA") {
      LdaParams s{vector_from_json(p.at("mean")),        matrix_from_json(p.at("components")),
                  vector_from_json(p.at("eigenvalues")), p.at("classes").get<ClassVector>(),
                  matrix_from_json(p.at("class_means")), p.at("ridge").get<double>()};
      return FittedTransform(std::move(s), in, out);
    }
    if (kind == "KBEST") {
      KBestParams s;
      s.indices = p.at("indices").get<std::vector<std::size_t>>();
      for (const auto& v : p.at("scores")) s.scores.push_back(score_from_json(v));
      return FittedTransform(std::move(s), in, out);
    }
    throw FormatError("unknown transform kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("transform document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Fitting

FittedTransform fit_scaler(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.cols() == 0) throw FitError("scaler: empty matrix");
  require_finite(x, "scaler");
  ScalerParams p;
  p.mean = x.colwise().mean().transpose();
  p.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - p.mean(j)).square().sum() / static_cast<double>(x.rows());
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      p.scale(j) = sd;
    } else {
      p.scale(j) = 1.0;
      p.constant_columns.push_back(static_cast<std::size_t>(j));
    }
  }
  return FittedTransform(std::move(p), x.cols(), x.cols());
}

FittedTransform fit_pca(const Eigen::MatrixXd& x, double variance_target) {
  if (!(variance_target > 0.0 && variance_target <= 1.0))
    throw ArgumentError("PCA variance target must lie in (0, 1]");
  if (x.rows() < 2 || x.cols() == 0) throw FitError("PCA needs at least 2 samples");
  require_finite(x, "PCA");
  const Eigen::Index n = x.cols();
  PcaParams p;
  p.variance_target = variance_target;
  p.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - p.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  if (!cov.allFinite()) throw NumericError("PCA: non-finite covariance");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("PCA: eigen-decomposition failed");
  // Eigen sorts ascending; reverse to descending.
  Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
  Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse().transpose();
  const double total = values.sum();
  Eigen::VectorXd ratio = total > 0.0 ? Eigen::VectorXd(values / total) : Eigen::VectorXd::Zero(n);

  Eigen::Index keep = n;
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cumulative += ratio(i);
    if (cumulative >= variance_target - 1e-12) {
      keep = i + 1;
      break;
    }
  }
  p.components = vectors.topRows(keep);
  fix_signs(p.components);
  p.explained_variance = values.head(keep);
  p.explained_variance_ratio = ratio.head(keep);
  return FittedTransform(std::move(p), n, keep);
}

FittedTransform fit_lda(const Eigen::MatrixXd& x, const ClassVector& y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ShapeError("LDA: label count mismatch");
  require_finite(x, "LDA");
  const ClassIndex ci = index_classes(y);
  if (ci.classes.size() < 2) throw FitError("LDA needs at least 2 classes");
  const Eigen::Index n = x.cols();
  Scatter s = scatter_matrices(x, ci);

  LdaParams p;
  p.ridge = 1e-6 * s.within.trace() / static_cast<double>(n);
  if (!(p.ridge > 0.0)) p.ridge = 1e-6;
  Eigen::MatrixXd within = s.within;
  within.diagonal().array() += p.ridge;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.between, within,
                                                                Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite())
    throw NumericError("LDA: within-class scatter is singular after regularization");

  const auto keep = std::min<Eigen::Index>(static_cast<Eigen::Index>(ci.classes.size()) - 1, n);
  p.eigenvalues = eig.eigenvalues().reverse().head(keep);
  p.components = eig.eigenvectors().rowwise().reverse().leftCols(keep).transpose();
  fix_signs(p.components);
  p.mean = s.mean;
  p.classes = ci.classes;
  p.class_means = s.class_means;
  return FittedTransform(std::move(p), n, keep);
}

double fisher_ratio(const Eigen::MatrixXd& x, const ClassVector& y, const Eigen::VectorXd& w) {
  const ClassIndex ci = index_classes(y);
  const Scatter s = scatter_matrices(x, ci);
  const double denom = w.dot(s.within * w);
  return denom > 0.0 ? w.dot(s.between * w) / denom : std::numeric_limits<double>::infinity();
}

std::vector<double> anova_f_scores(const Eigen::MatrixXd& x, const ClassVector& y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ShapeError("ANOVA: label count mismatch");
  const ClassIndex ci = index_classes(y);
  const std::size_t k = ci.classes.size();
  const auto n = static_cast<std::size_t>(x.rows());
  if (k < 2) throw StatisticsError("ANOVA F needs at least 2 classes");
  if (n <= k) throw StatisticsError("ANOVA F needs more samples than classes");

  std::vector<double> scores(static_cast<std::size_t>(x.cols()), 0.0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    std::vector<double> sums(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) sums[ci.of_sample[i]] += x(static_cast<Eigen::Index>(i), j);
    std::vector<double> means(k);
    for (std::size_t c = 0; c < k; ++c) means[c] = sums[c] / static_cast<double>(ci.counts[c]);
    const double grand = x.col(j).mean();
    double between = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      between += static_cast<double>(ci.counts[c]) * (means[c] - grand) * (means[c] - grand);
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x(static_cast<Eigen::Index>(i), j) - means[ci.of_sample[i]];
      within += d * d;
    }
    double f = 0.0;
    if (within > 0.0) {
      f = (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
    } else if (between > 0.0) {
      f = std::numeric_limits<double>::infinity();
    }
    scores[static_cast<std::size_t>(j)] = f;
  }
  return scores;
}

FittedTransform select_k_best(const std::vector<double>& scores, std::size_t k) {
  if (k < 1 || k > scores.size())
    throw ArgumentError("select_k_best: k=" + std::to_string(k) + " outside [1, " + std::to_string(scores.size()) + "]");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  KBestParams p;
  p.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(p.indices.begin(), p.indices.end());
  p.scores = scores;
  const auto n = static_cast<Eigen::Index>(scores.size());
  return FittedTransform(std::move(p), n, static_cast<Eigen::Index>(k));
}

FeatureMatrix transform(const FittedTransform& t, const FeatureMatrix& data) {
  return FeatureMatrix{t.apply(data.x), data.y};
}

// ---------------------------------------------------------------------------
// JSON helpers

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows))
    throw FormatError("matrix document: row count mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = data.at(static_cast<std::size_t>(r));
    if (row.size() != static_cast<std::size_t>(cols)) throw FormatError("matrix document: column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace canguard
