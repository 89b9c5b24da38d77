#include "canguard/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>

#include "canguard/error.hpp"
#include "canguard/metrics.hpp"
#include "canguard/rng.hpp"

namespace canguard {
namespace {

std::map<std::string, std::size_t> index_of(const ClassVector& classes) {
  std::map<std::string, std::size_t> lookup;
  for (std::size_t i = 0; i < classes.size(); ++i) lookup.emplace(classes[i], i);
  return lookup;
}

}  // namespace

ClassVector hard_vote(const std::vector<ClassVector>& predictions, const ClassVector& classes) {
  if (predictions.size() < 2)
    throw ArgumentError("hard vote needs at least 2 members, got " + std::to_string(predictions.size()));
  const std::size_t n = predictions.front().size();
  for (std::size_t m = 1; m < predictions.size(); ++m)
    if (predictions[m].size() != n)
      throw ShapeError("hard vote: member " + std::to_string(m) + " has " + std::to_string(predictions[m].size()) +
                       " predictions, member 0 has " + std::to_string(n));
  const auto lookup = index_of(classes);
  ClassVector out(n);
  std::vector<std::size_t> counts(classes.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& member : predictions) {
      auto it = lookup.find(member[i]);
      if (it == lookup.end()) throw LabelError("hard vote: label '" + member[i] + "' is not in the class list");
      ++counts[it->second];
    }
    const auto best = std::max_element(counts.begin(), counts.end());
    out[i] = classes[static_cast<std::size_t>(best - counts.begin())];
  }
  return out;
}

SoftVote weighted_soft_vote(const std::vector<ProbabilityMatrix>& probas, const std::vector<double>& weights,
                            const ClassVector& classes) {
  if (probas.empty()) throw ArgumentError("soft vote needs at least one member");
  if (weights.size() != probas.size())
    throw ShapeError("soft vote: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(probas.size()) + " members");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("soft vote weights must be finite and nonnegative");
    total += w;
  }
  if (total <= 0.0) throw ArgumentError("soft vote weights are all zero");
  const auto rows = probas.front().rows();
  const auto cols = static_cast<Eigen::Index>(classes.size());
  SoftVote out;
  out.combined = ProbabilityMatrix::Zero(rows, cols);
  for (std::size_t m = 0; m < probas.size(); ++m) {
    if (probas[m].rows() != rows || probas[m].cols() != cols)
      throw ShapeError("soft vote: member " + std::to_string(m) + " probabilities are " +
                       std::to_string(probas[m].rows()) + "x" + std::to_string(probas[m].cols()) + ", expected " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    if (weights[m] > 0.0) out.combined += (weights[m] / total) * probas[m];
  }
  out.predictions.reserve(static_cast<std::size_t>(rows));
  for (int c : argmax_rows(out.combined)) out.predictions.push_back(classes[static_cast<std::size_t>(c)]);
  return out;
}

Consensus hybrid_consensus(const ClassVector& hard, const ClassVector& soft) {
  if (hard.size() != soft.size())
    throw ShapeError("hybrid consensus: " + std::to_string(hard.size()) + " hard vs " +
                     std::to_string(soft.size()) + " soft predictions");
  Consensus out;
  out.predictions.reserve(hard.size());
  for (std::size_t i = 0; i < hard.size(); ++i) {
    if (hard[i] == soft[i]) {
      out.predictions.push_back(hard[i]);
    } else {
      out.predictions.push_back(soft[i]);
      ++out.disagreements;
    }
  }
  return out;
}

std::string_view to_string(WeightsMode mode) {
  return mode == WeightsMode::kUniform ? "uniform" : "validation-f1";
}

std::optional<WeightsMode> parse_weights_mode(std::string_view s) {
  if (s == "uniform") return WeightsMode::kUniform;
  if (s == "validation-f1") return WeightsMode::kValidationF1;
  return std::nullopt;
}

EnsembleConfig::EnsembleConfig(std::vector<FittedModel> members, std::vector<double> weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.size() < 2)
    throw ArgumentError("an ensemble needs at least 2 members, got " + std::to_string(members_.size()));
  for (std::size_t m = 1; m < members_.size(); ++m)
    if (members_[m].classes() != members_.front().classes())
      throw ArgumentError("ensemble member " + std::to_string(m) + " was trained on a different class list");
  if (weights_.empty()) weights_.assign(members_.size(), 1.0);
  if (weights_.size() != members_.size())
    throw ArgumentError(std::to_string(weights_.size()) + " weights for " + std::to_string(members_.size()) +
                        " members");
  bool positive = false;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("ensemble weights must be finite and nonnegative");
    positive = positive || w > 0.0;
  }
  if (!positive) throw ArgumentError("ensemble weights are all zero");
}

std::vector<ClassifierSpec> default_ensemble_members(std::uint64_t seed) {
  std::vector<ClassifierSpec> members;
  members.push_back(ClassifierSpec::make(Family::kKnn, derive_seed(seed, 1)));
  members.push_back(ClassifierSpec::make(Family::kTree, derive_seed(seed, 2)));
  auto entropy = ClassifierSpec::make(Family::kTree, derive_seed(seed, 3));
  std::get<TreeParams>(entropy.params).criterion = Criterion::kEntropy;
  members.push_back(entropy);
  members.push_back(ClassifierSpec::make(Family::kSvmRbf, derive_seed(seed, 4)));
  members.push_back(ClassifierSpec::make(Family::kMlp, derive_seed(seed, 5)));
  return members;
}

EnsembleResult run_ensemble(const EnsembleConfig& config, const Eigen::MatrixXd& x) {
  const auto& members = config.members();
  std::vector<std::future<ProbabilityMatrix>> jobs;
  jobs.reserve(members.size());
  for (const auto& member : members)
    jobs.push_back(std::async(std::launch::async, [&member, &x] { return predict_proba(member, x); }));
  std::vector<ProbabilityMatrix> probas;
  for (auto& job : jobs) probas.push_back(job.get());

  EnsembleResult out;
  out.classes = config.classes();
  for (const auto& p : probas) {
    ClassVector labels;
    labels.reserve(static_cast<std::size_t>(p.rows()));
    for (int c : argmax_rows(p)) labels.push_back(out.classes[static_cast<std::size_t>(c)]);
    out.member_predictions.push_back(std::move(labels));
  }
  out.hard = hard_vote(out.member_predictions, out.classes);
  out.soft = weighted_soft_vote(probas, config.weights(), out.classes);
  out.hybrid = hybrid_consensus(out.hard, out.soft.predictions);
  return out;
}

std::vector<double> validation_f1_weights(const std::vector<ClassifierSpec>& members, const Eigen::MatrixXd& x,
                                          const ClassVector& y, std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw ShapeError("validation weights: " + std::to_string(x.rows()) + " rows vs " + std::to_string(y.size()) +
                     " labels");
  const ClassVector classes = distinct_classes(y);
  std::vector<std::size_t> fit_rows;
  std::vector<std::size_t> val_rows;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == classes[c]) rows.push_back(i);
    Rng rng(derive_seed(seed, 0x7a1 + c));
    rng.shuffle(std::span<std::size_t>(rows));
    std::size_t n_val = rows.size() / 5;
    if (n_val == 0 && rows.size() >= 2) n_val = 1;
    val_rows.insert(val_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    fit_rows.insert(fit_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
  }
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(val_rows.begin(), val_rows.end());
  if (val_rows.empty()) throw SplitError("validation fold is empty; too few training rows");

  auto take = [&](const std::vector<std::size_t>& rows, Eigen::MatrixXd& xs, ClassVector& ys) {
    xs.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    ys.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
      ys.push_back(y[rows[i]]);
    }
  };
  Eigen::MatrixXd x_fit, x_val;
  ClassVector y_fit, y_val;
  take(fit_rows, x_fit, y_fit);
  take(val_rows, x_val, y_val);

  std::vector<double> weights;
  double total = 0.0;
  for (const auto& spec : members) {
    const FittedModel model = fit(spec, x_fit, y_fit);
    const double f1 = f1_macro(y_val, predict(model, x_val), classes);
    weights.push_back(f1);
    total += f1;
  }
  if (total <= 0.0) std::fill(weights.begin(), weights.end(), 1.0);
  return weights;
}

nlohmann::json to_json(const EnsembleResult& result, WeightsMode mode, const std::vector<double>& weights,
                       bool include_member_predictions) {
  nlohmann::json doc = {{"classes", result.classes},
                        {"hard", result.hard},
                        {"soft", result.soft.predictions},
                        {"hybrid", result.hybrid.predictions},
                        {"disagreements", result.hybrid.disagreements},
                        {"weights_mode", std::string(to_string(mode))},
                        {"weights", weights}};
  if (include_member_predictions) doc["per_member_predictions"] = result.member_predictions;
  return doc;
}

}  // namespace canguard
