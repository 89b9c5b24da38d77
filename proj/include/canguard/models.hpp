#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "canguard/features.hpp"

namespace canguard {

enum class Family { kLogReg, kTree, kForest, kKnn, kSvmRbf, kMlp, kCnn1d };

std::string_view to_string(Family f);
std::optional<Family> parse_family(std::string_view s);

enum class Criterion { kGini, kEntropy };

// ---------------------------------------------------------------------------
// Hyperparameters (defaults are the documented ones)

struct LogRegParams {
  double l2 = 1e-4;
  double step = 0.1;
  int epochs = 500;
};

struct TreeParams {
  Criterion criterion = Criterion::kGini;
  int max_depth = 0;  // 0: unlimited
  int min_samples_split = 2;
  int max_features = 0;  // features examined per split; 0: all
};

struct ForestParams {
  int n_trees = 100;
  bool bootstrap = true;
  int max_features = -1;  // -1: floor(sqrt(N)); 0: all
  Criterion criterion = Criterion::kGini;
  int workers = 0;  // 0: hardware concurrency
};

struct KnnParams {
  int k = 5;
};

struct SvmParams {
  double c = 1.0;
  double gamma = 0.0;  // 0: 1 / (N * mean column variance)
  double tolerance = 1e-3;
  int max_passes = 10000;
};

struct AdamParams {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 200;
  int batch = 64;
};

struct MlpParams {
  std::vector<int> hidden = {64, 32};
  AdamParams adam;
};

struct CnnParams {
  int filters = 16;
  int kernel = 3;
  AdamParams adam;
};

using Hyperparams =
    std::variant<LogRegParams, TreeParams, ForestParams, KnnParams, SvmParams, MlpParams, CnnParams>;

struct ClassifierSpec {
  Hyperparams params;
  std::uint64_t seed = 0;

  Family family() const { return static_cast<Family>(params.index()); }
  /// Default hyperparameters for a family.
  static ClassifierSpec make(Family family, std::uint64_t seed = 0);
  /// Short display name, e.g. "TREE(entropy)".
  std::string describe() const;
};

void validate(const ClassifierSpec& spec);

// ---------------------------------------------------------------------------
// Learned parameters

struct LogRegModel {
  Eigen::MatrixXd weights;  // classes x features
  Eigen::VectorXd bias;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::vector<double> distribution;  // class frequencies of training samples at the node
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  const TreeNode& leaf_for(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

struct ForestModel {
  std::vector<TreeModel> trees;
};

struct KnnModel {
  int k = 5;
  Eigen::MatrixXd x;
  std::vector<int> y;  // class indices
};

struct BinarySvm {
  Eigen::MatrixXd support;  // support vectors (rows)
  Eigen::VectorXd coef;     // alpha_i * y_i
  double bias = 0.0;
};

struct SvmModel {
  double gamma = 1.0;
  std::vector<BinarySvm> machines;  // one per class (one-vs-rest)
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

struct MlpModel {
  std::vector<DenseLayer> layers;  // ReLU between layers, softmax after the last
};

struct CnnModel {
  Eigen::MatrixXd filters;  // filters x kernel, valid convolution over the feature axis
  Eigen::VectorXd filter_bias;
  DenseLayer head;  // classes x filters
};

using ModelParams =
    std::variant<LogRegModel, TreeModel, ForestModel, KnnModel, SvmModel, MlpModel, CnnModel>;

class FittedModel {
 public:
  FittedModel(ClassVector classes, Eigen::Index input_dim, ModelParams params);

  Family family() const { return static_cast<Family>(params_.index()); }
  const ClassVector& classes() const { return classes_; }
  Eigen::Index input_dim() const { return input_dim_; }
  const ModelParams& params() const { return params_; }

  template <typename T>
  const T& as() const { return std::get<T>(params_); }

  double train_seconds = 0.0;
  /// Full-training-set loss before the first and after every epoch (gradient-trained families).
  std::vector<double> loss_history;

 private:
  ClassVector classes_;
  Eigen::Index input_dim_ = 0;
  ModelParams params_;
};

using ProbabilityMatrix = Eigen::MatrixXd;  // samples x classes, rows sum to 1

FittedModel fit(const ClassifierSpec& spec, const Eigen::MatrixXd& x, const ClassVector& y);
inline FittedModel fit(const ClassifierSpec& spec, const FeatureMatrix& data) {
  return fit(spec, data.x, data.y);
}

ProbabilityMatrix predict_proba(const FittedModel& model, const Eigen::MatrixXd& x);
ClassVector predict(const FittedModel& model, const Eigen::MatrixXd& x);

/// Row argmax; ties go to the earliest column.
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);

/// Largest relative error between backpropagated and central-difference
/// (step 1e-5) gradients of the training loss, over every parameter of a
/// freshly initialized LOGREG, MLP or CNN1D model. zero_init starts LOGREG at
/// zero weights instead of small random ones.
double gradient_check(const ClassifierSpec& spec, const Eigen::MatrixXd& x, const ClassVector& y,
                      bool zero_init = false);

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json serialize_model(const FittedModel& model);
FittedModel deserialize_model(const nlohmann::json& doc);

}  // namespace canguard
