#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "canguard/features.hpp"

namespace canguard {

using ConfusionMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Entry (i, j) counts samples of true class i predicted as class j.
ConfusionMatrix confusion_matrix(const ClassVector& y_true, const ClassVector& y_pred, const ClassVector& classes);

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct AverageMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  ClassVector classes;
  ConfusionMatrix confusion;
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  AverageMetrics macro;
  AverageMetrics weighted;
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
};

/// Any 0/0 ratio is reported as 0; classes in the list with no support still
/// count towards the macro average.
EvalReport classification_report(const ClassVector& y_true, const ClassVector& y_pred, const ClassVector& classes);

double f1_macro(const ClassVector& y_true, const ClassVector& y_pred, const ClassVector& classes);

nlohmann::json to_json(const EvalReport& report, bool include_timing = true);

/// Aligned text table with four decimals, one row per class, then the
/// macro/weighted averages and overall accuracy.
std::string format_report(const EvalReport& report, const std::string& title);

struct ComparisonRow {
  std::string feature_set;
  std::string model;
  double accuracy = 0.0;
  double f1_macro = 0.0;
};

/// feature_set,model,accuracy,f1_macro,seed
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows, std::uint64_t seed);

}  // namespace canguard
