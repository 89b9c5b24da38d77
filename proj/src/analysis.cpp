#include "canguard/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "canguard/error.hpp"

namespace canguard {
namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

double round_to(double v, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(v * scale) / scale;
}

std::string category_header() {
  std::string s;
  for (Category c : kAllCategories) s += "," + std::string(to_string(c));
  return s;
}

}  // namespace

DistributionTable class_distribution(const RecordTable& table, LabelLevel level) {
  if (table.empty()) throw StatisticsError("class distribution of an empty table");
  DistributionTable out;
  out.level = level;
  out.total = table.size();
  const std::size_t n_classes = level == LabelLevel::kCategory ? kNumCategories : kNumSpecificClasses;
  std::vector<std::size_t> counts(n_classes, 0);
  for (const auto& r : table.records())
    ++counts[level == LabelLevel::kCategory ? static_cast<std::size_t>(r.category)
                                            : static_cast<std::size_t>(r.specific_class)];
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) continue;
    DistributionRow row;
    row.name = level == LabelLevel::kCategory ? std::string(to_string(kAllCategories[c]))
                                              : std::string(to_string(kAllSpecificClasses[c]));
    row.count = counts[c];
    row.percentage = 100.0 * static_cast<double>(counts[c]) / static_cast<double>(table.size());
    out.rows.push_back(row);
  }
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const DistributionRow& a, const DistributionRow& b) { return a.count > b.count; });
  return out;
}

std::vector<IdFrequency> top_ids(const RecordTable& table, std::size_t k) {
  if (k == 0) throw ArgumentError("top_ids: k must be >= 1");
  std::map<std::uint16_t, IdFrequency> by_id;
  for (const auto& r : table.records()) {
    auto& f = by_id[r.id];
    f.id = r.id;
    ++f.count;
    ++f.per_category[static_cast<std::size_t>(r.category)];
  }
  std::vector<IdFrequency> all;
  all.reserve(by_id.size());
  for (const auto& [id, f] : by_id) all.push_back(f);
  std::stable_sort(all.begin(), all.end(),
                   [](const IdFrequency& a, const IdFrequency& b) { return a.count > b.count; });
  if (all.size() > k) all.resize(k);
  return all;
}

RecordTable filter_category(const RecordTable& table, Category category) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < table.size(); ++i)
    if (table[i].category == category) keep.push_back(i);
  return table.subset(keep);
}

ByteMeans byte_means_by_category(const RecordTable& table) {
  std::array<std::size_t, kNumCategories> counts{};
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kNumCategories, kPayloadBytes);
  for (const auto& r : table.records()) {
    const auto c = static_cast<Eigen::Index>(r.category);
    ++counts[static_cast<std::size_t>(c)];
    for (std::size_t b = 0; b < kPayloadBytes; ++b) sums(c, static_cast<Eigen::Index>(b)) += r.data[b];
  }
  ByteMeans out;
  std::vector<Eigen::Index> rows;
  for (Category c : kAllCategories) {
    if (counts[static_cast<std::size_t>(c)] == 0) continue;
    out.categories.push_back(c);
    rows.push_back(static_cast<Eigen::Index>(c));
  }
  out.means.resize(static_cast<Eigen::Index>(rows.size()), kPayloadBytes);
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.means.row(static_cast<Eigen::Index>(i)) =
        sums.row(rows[i]) / static_cast<double>(counts[static_cast<std::size_t>(rows[i])]);
  return out;
}

Eigen::VectorXd column_means(const RecordTable& table) {
  if (table.empty()) throw StatisticsError("column means of an empty table");
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(1 + kPayloadBytes);
  for (const auto& r : table.records()) {
    sums(0) += r.id;
    for (std::size_t b = 0; b < kPayloadBytes; ++b) sums(static_cast<Eigen::Index>(b + 1)) += r.data[b];
  }
  return sums / static_cast<double>(table.size());
}

std::size_t PayloadHistogram::bin_of(int payload_sum) const {
  const auto b = static_cast<std::size_t>(std::floor(static_cast<double>(payload_sum) / bin_width));
  return std::min(b, bins - 1);
}

PayloadHistogram payload_sum_histogram(const RecordTable& table, std::size_t bins) {
  if (bins == 0) throw ArgumentError("payload_sum_histogram: bins must be >= 1");
  PayloadHistogram h;
  h.bins = bins;
  h.bin_width = static_cast<double>(kPayloadSumMax) / static_cast<double>(bins);
  std::array<std::vector<std::size_t>, kNumCategories> counts;
  for (auto& c : counts) c.assign(bins, 0);
  std::array<bool, kNumCategories> present{};
  for (const auto& r : table.records()) {
    const auto c = static_cast<std::size_t>(r.category);
    present[c] = true;
    ++counts[c][h.bin_of(r.payload_sum())];
  }
  for (Category c : kAllCategories) {
    if (!present[static_cast<std::size_t>(c)]) continue;
    h.categories.push_back(c);
    h.counts.push_back(counts[static_cast<std::size_t>(c)]);
  }
  return h;
}

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw ShapeError("pearson: length mismatch");
  const double mx = x.mean();
  const double my = y.mean();
  const Eigen::ArrayXd dx = x.array() - mx;
  const Eigen::ArrayXd dy = y.array() - my;
  const double sxx = (dx * dx).sum();
  const double syy = (dy * dy).sum();
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp((dx * dy).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const RecordTable& table) {
  if (table.size() < 2) throw StatisticsError("correlation needs at least 2 records");
  const auto n = static_cast<Eigen::Index>(table.size());
  Eigen::MatrixXd cols(n, static_cast<Eigen::Index>(kCorrelationDim));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = table[static_cast<std::size_t>(i)];
    cols(i, 0) = r.id;
    for (std::size_t b = 0; b < kPayloadBytes; ++b) cols(i, static_cast<Eigen::Index>(b + 1)) = r.data[b];
    cols(i, 9) = r.label == Label::kAttack ? 1.0 : 0.0;
  }
  CorrelationMatrix out;
  const Eigen::RowVectorXd mean = cols.colwise().mean();
  const Eigen::MatrixXd centered = cols.rowwise() - mean;
  const Eigen::MatrixXd cross = centered.transpose() * centered;
  for (std::size_t j = 0; j < kCorrelationDim; ++j)
    if (cross(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) <= 0.0) out.constant_columns.push_back(j);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(kCorrelationDim); ++i) {
    out.values(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double denom = std::sqrt(cross(i, i) * cross(j, j));
      const double r = denom > 0.0 ? std::clamp(cross(i, j) / denom, -1.0, 1.0) : 0.0;
      out.values(i, j) = r;
      out.values(j, i) = r;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

nlohmann::json to_json(const DistributionTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"class", r.name}, {"count", r.count}, {"percentage", round_to(r.percentage, 2)}});
  return {{"level", t.level == LabelLevel::kCategory ? "category" : "specific_class"},
          {"total", t.total},
          {"rows", rows}};
}

nlohmann::json to_json(const std::vector<IdFrequency>& ids) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& f : ids) {
    nlohmann::json per = nlohmann::json::object();
    for (Category c : kAllCategories) per[std::string(to_string(c))] = f.per_category[static_cast<std::size_t>(c)];
    rows.push_back({{"id", f.id}, {"count", f.count}, {"per_category", per}});
  }
  return {{"top_ids", rows}};
}

nlohmann::json to_json(const ByteMeans& m) {
  nlohmann::json rows = nlohmann::json::object();
  for (std::size_t i = 0; i < m.categories.size(); ++i) {
    std::vector<double> v(kPayloadBytes);
    for (std::size_t b = 0; b < kPayloadBytes; ++b)
      v[b] = m.means(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b));
    rows[std::string(to_string(m.categories[i]))] = v;
  }
  return {{"columns", {"DATA_0", "DATA_1", "DATA_2", "DATA_3", "DATA_4", "DATA_5", "DATA_6", "DATA_7"}},
          {"byte_means", rows}};
}

nlohmann::json to_json(const PayloadHistogram& h) {
  nlohmann::json counts = nlohmann::json::object();
  for (std::size_t i = 0; i < h.categories.size(); ++i) counts[std::string(to_string(h.categories[i]))] = h.counts[i];
  std::vector<double> edges(h.bins + 1);
  for (std::size_t b = 0; b <= h.bins; ++b) edges[b] = static_cast<double>(b) * h.bin_width;
  return {{"range", {0, kPayloadSumMax}}, {"bins", h.bins}, {"edges", edges}, {"counts", counts}};
}

nlohmann::json to_json(const CorrelationMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < kCorrelationDim; ++i) {
    std::vector<double> v(kCorrelationDim);
    for (std::size_t j = 0; j < kCorrelationDim; ++j) v[j] = m.at(i, j);
    rows.push_back(v);
  }
  std::vector<std::string> names(kCorrelationNames.begin(), kCorrelationNames.end());
  std::vector<std::string> constant;
  for (auto c : m.constant_columns) constant.emplace_back(kCorrelationNames[c]);
  return {{"features", names}, {"matrix", rows}, {"constant_features", constant}};
}

void write_csv(std::ostream& out, const DistributionTable& t) {
  out << (t.level == LabelLevel::kCategory ? "category" : "specific_class") << ",count,percentage\n";
  for (const auto& r : t.rows) out << r.name << ',' << r.count << ',' << fixed(r.percentage, 2) << '\n';
}

void write_csv(std::ostream& out, const std::vector<IdFrequency>& ids) {
  out << "id,count" << category_header() << '\n';
  for (const auto& f : ids) {
    out << f.id << ',' << f.count;
    for (auto c : f.per_category) out << ',' << c;
    out << '\n';
  }
}

void write_csv(std::ostream& out, const ByteMeans& m) {
  out << "category,DATA_0,DATA_1,DATA_2,DATA_3,DATA_4,DATA_5,DATA_6,DATA_7\n";
  for (std::size_t i = 0; i < m.categories.size(); ++i) {
    out << to_string(m.categories[i]);
    for (std::size_t b = 0; b < kPayloadBytes; ++b)
      out << ',' << fixed(m.means(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)), 4);
    out << '\n';
  }
}

void write_csv(std::ostream& out, const PayloadHistogram& h) {
  out << "bin,lower,upper";
  for (auto c : h.categories) out << ',' << to_string(c);
  out << '\n';
  for (std::size_t b = 0; b < h.bins; ++b) {
    out << b << ',' << fixed(static_cast<double>(b) * h.bin_width, 4) << ','
        << fixed(static_cast<double>(b + 1) * h.bin_width, 4);
    for (const auto& counts : h.counts) out << ',' << counts[b];
    out << '\n';
  }
}

void write_csv(std::ostream& out, const CorrelationMatrix& m) {
  out << "feature";
  for (auto name : kCorrelationNames) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < kCorrelationDim; ++i) {
    out << kCorrelationNames[i];
    for (std::size_t j = 0; j < kCorrelationDim; ++j) out << ',' << fixed(m.at(i, j), 6);
    out << '\n';
  }
}

}  // namespace canguard
