#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "canguard/analysis.hpp"
#include "canguard/error.hpp"
#include "canguard/synth.hpp"
#include "oracles.hpp"

using namespace canguard;

namespace {

CanFrameRecord rec(std::uint16_t id, std::array<std::uint8_t, 8> data, SpecificClass c) {
  return make_record(id, data, c);
}

double two_pass_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST(Distribution, SortedAndSummingToHundred) {
  const auto t = generate_synthetic(SynthConfig::defaults(), 1);
  for (auto level : {LabelLevel::kCategory, LabelLevel::kSpecificClass}) {
    const auto d = class_distribution(t, level);
    double pct = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
      pct += d.rows[i].percentage;
      count += d.rows[i].count;
      if (i > 0) EXPECT_GE(d.rows[i - 1].count, d.rows[i].count);
    }
    EXPECT_NEAR(pct, 100.0, 0.05);
    EXPECT_EQ(count, t.size());
  }
  const auto cat = class_distribution(t, LabelLevel::kCategory);
  EXPECT_EQ(cat.rows[0].name, "BENIGN");
  EXPECT_NEAR(cat.rows[0].percentage, 86.9, 0.05);
}

TEST(Distribution, SingleClassAndEmpty) {
  const RecordTable t({rec(1, {}, SpecificClass::kDos)}, "T");
  const auto d = class_distribution(t, LabelLevel::kSpecificClass);
  ASSERT_EQ(d.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(d.rows[0].percentage, 100.0);
  EXPECT_THROW(class_distribution(RecordTable(), LabelLevel::kCategory), StatisticsError);
}

TEST(TopIds, DosOnlyInputIs291) {
  auto cfg = SynthConfig::defaults();
  for (auto& c : cfg.classes) c.count = 0;
  cfg[SpecificClass::kDos].count = 50;
  const auto top = top_ids(generate_synthetic(cfg, 2), 20);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].id, 291);
  EXPECT_EQ(top[0].count, 50u);
}

TEST(TopIds, TiesBySmallerIdAndCountsSum) {
  const RecordTable t({rec(9, {}, SpecificClass::kBenign), rec(4, {}, SpecificClass::kBenign),
                       rec(9, {}, SpecificClass::kBenign), rec(4, {}, SpecificClass::kBenign),
                       rec(2, {}, SpecificClass::kBenign)},
                      "T");
  const auto top = top_ids(t, 100);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].id, 4);
  EXPECT_EQ(top[1].id, 9);
  std::size_t sum = 0;
  for (const auto& f : top) sum += f.count;
  EXPECT_EQ(sum, t.size());
  EXPECT_THROW(top_ids(t, 0), ArgumentError);
}

TEST(TopIds, BenignHeavyHitters) {
  const auto top = top_ids(generate_synthetic(SynthConfig::defaults(), 3), 5);
  std::vector<int> ids;
  for (const auto& f : top) ids.push_back(f.id);
  for (int id : {535, 516, 359}) EXPECT_NE(std::find(ids.begin(), ids.end(), id), ids.end());
}

TEST(ByteMeans, Arithmetic) {
  const RecordTable t({rec(1, {0, 0, 0, 0, 0, 0, 0, 0}, SpecificClass::kBenign),
                       rec(1, {2, 0, 0, 0, 0, 0, 0, 4}, SpecificClass::kBenign),
                       rec(291, {}, SpecificClass::kDos)},
                      "T");
  const auto m = byte_means_by_category(t);
  ASSERT_EQ(m.categories.size(), 2u);
  EXPECT_DOUBLE_EQ(m.means(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.means(0, 7), 2.0);
  EXPECT_DOUBLE_EQ(m.means.row(1).cwiseAbs().sum(), 0.0);
}

TEST(Histogram, Boundaries) {
  const RecordTable t({rec(1, {255, 255, 255, 255, 255, 255, 255, 255}, SpecificClass::kBenign),
                       rec(1, {}, SpecificClass::kBenign), rec(1, {}, SpecificClass::kBenign)},
                      "T");
  const auto h = payload_sum_histogram(t, 10);
  ASSERT_EQ(h.categories.size(), 1u);
  EXPECT_EQ(h.counts[0].back(), 1u);
  EXPECT_EQ(h.counts[0].front(), 2u);
  EXPECT_EQ(h.bin_of(2040), 9u);
  EXPECT_EQ(h.bin_of(0), 0u);
}

TEST(Histogram, CountsSumToCategorySizes) {
  const auto t = generate_synthetic(SynthConfig::defaults(), 4);
  const auto h = payload_sum_histogram(t, 17);
  const auto d = class_distribution(t, LabelLevel::kCategory);
  for (std::size_t c = 0; c < h.categories.size(); ++c) {
    std::size_t sum = 0;
    for (auto v : h.counts[c]) sum += v;
    for (const auto& row : d.rows)
      if (row.name == to_string(h.categories[c])) EXPECT_EQ(sum, row.count);
  }
}

TEST(Correlation, SymmetricUnitDiagonalAndOracle) {
  std::mt19937_64 gen(6);
  std::uniform_int_distribution<int> byte(0, 255), id(0, 2047), cls(0, 5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CanFrameRecord> rows;
    for (int i = 0; i < 100; ++i) {
      std::array<std::uint8_t, 8> d{};
      for (auto& b : d) b = static_cast<std::uint8_t>(byte(gen));
      rows.push_back(rec(static_cast<std::uint16_t>(id(gen)), d, static_cast<SpecificClass>(cls(gen))));
    }
    const RecordTable t(rows, "T");
    const auto m = correlation_matrix(t);
    for (std::size_t i = 0; i < kCorrelationDim; ++i) {
      EXPECT_NEAR(m.at(i, i), 1.0, 1e-12);
      for (std::size_t j = 0; j < kCorrelationDim; ++j) {
        EXPECT_NEAR(m.at(i, j), m.at(j, i), 1e-12);
        EXPECT_LE(std::abs(m.at(i, j)), 1.0 + 1e-12);
      }
    }
    auto column = [&](std::size_t c) {
      std::vector<double> v;
      for (const auto& r : rows)
        v.push_back(c == 0 ? r.id : c <= 8 ? r.data[c - 1] : (r.label == Label::kAttack ? 1.0 : 0.0));
      return v;
    };
    for (std::size_t i = 0; i < kCorrelationDim; ++i)
      for (std::size_t j = i + 1; j < kCorrelationDim; ++j)
        EXPECT_NEAR(m.at(i, j), two_pass_pearson(column(i), column(j)), 1e-10);
  }
}

TEST(Correlation, ConstantColumnFlagged) {
  const RecordTable t({rec(1, {1, 0, 0, 0, 0, 0, 0, 0}, SpecificClass::kBenign),
                       rec(2, {3, 0, 0, 0, 0, 0, 0, 0}, SpecificClass::kDos)},
                      "T");
  const auto m = correlation_matrix(t);
  EXPECT_FALSE(m.constant_columns.empty());
  EXPECT_DOUBLE_EQ(m.at(2, 0), 0.0);
  EXPECT_DOUBLE_EQ(m.at(2, 2), 1.0);
  EXPECT_NEAR(m.at(0, 1), 1.0, 1e-12);
  EXPECT_THROW(correlation_matrix(RecordTable({rec(1, {}, SpecificClass::kBenign)}, "T")), StatisticsError);
}

TEST(Export, CsvAndJson) {
  const auto t = generate_synthetic(SynthConfig::defaults(), 5);
  const auto d = class_distribution(t, LabelLevel::kCategory);
  std::ostringstream os;
  write_csv(os, d);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "category,count,percentage");
  EXPECT_NE(os.str().find("BENIGN,12237,86.89"), std::string::npos);
  EXPECT_EQ(to_json(d)["rows"].size(), 3u);
}
