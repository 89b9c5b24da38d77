#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "canguard/features.hpp"
#include "canguard/models.hpp"

namespace canguard {

/// Per-sample modal class over the members' predictions; ties go to the class
/// that comes first in `classes`.
ClassVector hard_vote(const std::vector<ClassVector>& predictions, const ClassVector& classes);

struct SoftVote {
  ClassVector predictions;
  ProbabilityMatrix combined;
};

/// combined = sum(w_i * P_i) / sum(w_i); prediction is the row argmax.
SoftVote weighted_soft_vote(const std::vector<ProbabilityMatrix>& probas, const std::vector<double>& weights,
                            const ClassVector& classes);

struct Consensus {
  ClassVector predictions;
  std::size_t disagreements = 0;
};

/// Keeps agreeing predictions and takes the soft vote where the two differ.
Consensus hybrid_consensus(const ClassVector& hard, const ClassVector& soft);

enum class WeightsMode { kUniform, kValidationF1 };

std::string_view to_string(WeightsMode mode);
std::optional<WeightsMode> parse_weights_mode(std::string_view s);

class EnsembleConfig {
 public:
  /// Uniform weights when `weights` is empty.
  EnsembleConfig(std::vector<FittedModel> members, std::vector<double> weights = {});

  const std::vector<FittedModel>& members() const { return members_; }
  const std::vector<double>& weights() const { return weights_; }
  const ClassVector& classes() const { return members_.front().classes(); }

 private:
  std::vector<FittedModel> members_;
  std::vector<double> weights_;
};

/// KNN, TREE(gini), TREE(entropy), SVM_RBF, MLP.
std::vector<ClassifierSpec> default_ensemble_members(std::uint64_t seed);

struct EnsembleResult {
  ClassVector classes;
  std::vector<ClassVector> member_predictions;
  ClassVector hard;
  SoftVote soft;
  Consensus hybrid;
};

EnsembleResult run_ensemble(const EnsembleConfig& config, const Eigen::MatrixXd& x);

/// Weights proportional to each member's macro-F1 on a stratified 20% slice
/// of the training rows. Falls back to uniform when every score is zero.
std::vector<double> validation_f1_weights(const std::vector<ClassifierSpec>& members, const Eigen::MatrixXd& x,
                                          const ClassVector& y, std::uint64_t seed);

nlohmann::json to_json(const EnsembleResult& result, WeightsMode mode, const std::vector<double>& weights,
                       bool include_member_predictions);

}  // namespace canguard
