#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "canguard/record.hpp"

namespace canguard {

inline constexpr std::size_t kNumFeatures = 9;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "ID", "DATA_0", "DATA_1", "DATA_2", "DATA_3", "DATA_4", "DATA_5", "DATA_6", "DATA_7"};

/// Class labels travel as their names so model documents are self-describing.
using ClassVector = std::vector<std::string>;

/// Samples x features with one label per row.
struct FeatureMatrix {
  Eigen::MatrixXd x;
  ClassVector y;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
};

/// ID and DATA_0..7 as doubles; labels are the specific_class names.
FeatureMatrix to_feature_matrix(const RecordTable& table);

/// Sorted distinct labels.
ClassVector distinct_classes(const ClassVector& y);

enum class TransformKind { kScaler, kPca, kLda, kKBest };

std::string_view to_string(TransformKind kind);

struct ScalerParams {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;                     // population std, 1 where the column is constant
  std::vector<std::size_t> constant_columns;
};

struct PcaParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // output_dim x input_dim, rows orthonormal
  Eigen::VectorXd explained_variance;
  Eigen::VectorXd explained_variance_ratio;
  double variance_target = 0.0;
};

struct LdaParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // output_dim x input_dim
  Eigen::VectorXd eigenvalues;
  ClassVector classes;
  Eigen::MatrixXd class_means;  // classes x input_dim
  double ridge = 0.0;
};

struct KBestParams {
  std::vector<std::size_t> indices;  // strictly increasing
  std::vector<double> scores;        // +inf marks a perfectly separating feature
};

class FittedTransform {
 public:
  using Params = std::variant<ScalerParams, PcaParams, LdaParams, KBestParams>;

  FittedTransform(Params params, Eigen::Index input_dim, Eigen::Index output_dim);

  TransformKind kind() const { return static_cast<TransformKind>(params_.index()); }
  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index output_dim() const { return output_dim_; }
  const Params& params() const { return params_; }

  template <typename T>
  const T& as() const { return std::get<T>(params_); }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  /// PCA only: maps component scores back to the input space.
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& scores) const;

  nlohmann::json to_json() const;
  static FittedTransform from_json(const nlohmann::json& doc);

 private:
  Params params_;
  Eigen::Index input_dim_ = 0;
  Eigen::Index output_dim_ = 0;
};

inline constexpr int kTransformSchemaVersion = 1;

FittedTransform fit_scaler(const Eigen::MatrixXd& x);

/// Keeps the fewest leading components whose cumulative explained variance
/// reaches variance_target.
FittedTransform fit_pca(const Eigen::MatrixXd& x, double variance_target);

/// Fisher discriminant axes; keeps min(C-1, N) of them. Single-sample
/// classes add nothing to the within-class scatter.
FittedTransform fit_lda(const Eigen::MatrixXd& x, const ClassVector& y);

/// One-way ANOVA F statistic per column.
std::vector<double> anova_f_scores(const Eigen::MatrixXd& x, const ClassVector& y);

FittedTransform select_k_best(const std::vector<double>& scores, std::size_t k);

/// Applies a fitted transform. Never refits.
FeatureMatrix transform(const FittedTransform& t, const FeatureMatrix& data);

/// (w' Sb w) / (w' Sw w) for direction w.
double fisher_ratio(const Eigen::MatrixXd& x, const ClassVector& y, const Eigen::VectorXd& w);

// Shared matrix <-> JSON helpers.
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace canguard
