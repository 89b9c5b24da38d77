#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "canguard/record.hpp"

namespace canguard {

enum class LabelLevel { kCategory, kSpecificClass };

struct DistributionRow {
  std::string name;
  std::size_t count = 0;
  double percentage = 0.0;
};

struct DistributionTable {
  LabelLevel level = LabelLevel::kCategory;
  std::size_t total = 0;
  std::vector<DistributionRow> rows;  // descending count, ties by taxonomy order
};

DistributionTable class_distribution(const RecordTable& table, LabelLevel level);

struct IdFrequency {
  std::uint16_t id = 0;
  std::size_t count = 0;
  std::array<std::size_t, kNumCategories> per_category{};
};

/// The k most frequent arbitration ids; ties go to the smaller id.
std::vector<IdFrequency> top_ids(const RecordTable& table, std::size_t k);

RecordTable filter_category(const RecordTable& table, Category category);

struct ByteMeans {
  std::vector<Category> categories;  // present categories, enum order
  Eigen::MatrixXd means;             // categories x 8
};

ByteMeans byte_means_by_category(const RecordTable& table);

/// Mean of ID and each payload byte over the whole table (9 values).
Eigen::VectorXd column_means(const RecordTable& table);

inline constexpr int kPayloadSumMax = 8 * 255;

struct PayloadHistogram {
  std::size_t bins = 0;
  double bin_width = 0.0;  // over [0, 2040]
  std::vector<Category> categories;
  std::vector<std::vector<std::size_t>> counts;  // categories x bins

  std::size_t bin_of(int payload_sum) const;
};

PayloadHistogram payload_sum_histogram(const RecordTable& table, std::size_t bins);

inline constexpr std::size_t kCorrelationDim = 10;
inline constexpr std::array<const char*, kCorrelationDim> kCorrelationNames = {
    "ID", "DATA_0", "DATA_1", "DATA_2", "DATA_3", "DATA_4", "DATA_5", "DATA_6", "DATA_7", "is_attack"};

struct CorrelationMatrix {
  Eigen::Matrix<double, kCorrelationDim, kCorrelationDim> values;
  /// Zero-variance columns; their off-diagonal correlations are reported as 0.
  std::vector<std::size_t> constant_columns;

  double at(std::size_t i, std::size_t j) const { return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
};

/// Pearson correlation over ID, DATA_0..7 and is_attack (label == ATTACK).
CorrelationMatrix correlation_matrix(const RecordTable& table);

/// Pearson correlation of two equally sized columns; 0 when either is constant.
double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Plot-ready exports.
nlohmann::json to_json(const DistributionTable& t);
nlohmann::json to_json(const std::vector<IdFrequency>& ids);
nlohmann::json to_json(const ByteMeans& m);
nlohmann::json to_json(const PayloadHistogram& h);
nlohmann::json to_json(const CorrelationMatrix& m);

void write_csv(std::ostream& out, const DistributionTable& t);
void write_csv(std::ostream& out, const std::vector<IdFrequency>& ids);
void write_csv(std::ostream& out, const ByteMeans& m);
void write_csv(std::ostream& out, const PayloadHistogram& h);
void write_csv(std::ostream& out, const CorrelationMatrix& m);

}  // namespace canguard
