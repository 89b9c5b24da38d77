#include <random>

#include <gtest/gtest.h>

#include "canguard/ensemble.hpp"
#include "canguard/error.hpp"
#include "oracles.hpp"

using namespace canguard;

namespace {

const ClassVector kSix = {"c0", "c1", "c2", "c3", "c4", "c5"};

ProbabilityMatrix row(std::initializer_list<double> values) {
  ProbabilityMatrix m(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index j = 0;
  for (double v : values) m(0, j++) = v;
  return m;
}

}  // namespace

TEST(HardVote, Majority) {
  EXPECT_EQ(hard_vote({{"A"}, {"A"}, {"B"}}, {"A", "B"}), ClassVector{"A"});
}

TEST(HardVote, TieGoesToClassOrder) {
  EXPECT_EQ(hard_vote({{"A"}, {"B"}}, {"A", "B"}), ClassVector{"A"});
  EXPECT_EQ(hard_vote({{"A"}, {"B"}}, {"B", "A"}), ClassVector{"B"});
}

TEST(HardVote, IdenticalMembersPassThrough) {
  const ClassVector v = {"B", "A", "C"};
  EXPECT_EQ(hard_vote({v, v, v}, {"A", "B", "C"}), v);
}

TEST(HardVote, Errors) {
  EXPECT_THROW(hard_vote({{"A"}, {"A", "B"}}, {"A", "B"}), ShapeError);
  EXPECT_THROW(hard_vote({{"A"}}, {"A", "B"}), ArgumentError);
  EXPECT_THROW(hard_vote({{"A"}, {"Z"}}, {"A", "B"}), LabelError);
}

TEST(HardVote, ExhaustiveFiveMemberSixClass) {
  // Every one of the 6^5 = 7,776 vote patterns, one pattern per sample.
  std::vector<ClassVector> members(5);
  std::vector<std::string> expected;
  for (int code = 0; code < 7776; ++code) {
    std::vector<int> votes;
    int rest = code;
    for (int m = 0; m < 5; ++m) {
      votes.push_back(rest % 6);
      rest /= 6;
      members[static_cast<std::size_t>(m)].push_back(kSix[static_cast<std::size_t>(votes.back())]);
    }
    expected.push_back(kSix[static_cast<std::size_t>(oracle::majority(votes, 6))]);
  }
  EXPECT_EQ(hard_vote(members, kSix), expected);
}

TEST(SoftVote, WeightedArithmetic) {
  const auto r = weighted_soft_vote({row({1, 0}), row({0, 1})}, {2, 1}, {"A", "B"});
  EXPECT_NEAR(r.combined(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.combined(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(r.predictions, ClassVector{"A"});
}

TEST(SoftVote, IdenticalMembersUnchanged) {
  const auto p = row({0.2, 0.5, 0.3});
  const auto r = weighted_soft_vote({p, p, p}, {1, 1, 1}, {"A", "B", "C"});
  EXPECT_NEAR((r.combined - p).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_EQ(r.predictions, ClassVector{"B"});
}

TEST(SoftVote, DegenerateWeightSelectsFirstMember) {
  const auto r = weighted_soft_vote({row({0.1, 0.9}), row({0.8, 0.2})}, {1, 0}, {"A", "B"});
  EXPECT_EQ(r.predictions, ClassVector{"B"});
}

TEST(SoftVote, TieGoesToClassOrder) {
  const auto r = weighted_soft_vote({row({0.5, 0.5}), row({0.5, 0.5})}, {1, 1}, {"A", "B"});
  EXPECT_EQ(r.predictions, ClassVector{"A"});
}

TEST(SoftVote, Errors) {
  EXPECT_THROW(weighted_soft_vote({row({1, 0}), row({0, 1})}, {0, 0}, {"A", "B"}), ArgumentError);
  EXPECT_THROW(weighted_soft_vote({row({1, 0}), row({0, 1})}, {-1, 2}, {"A", "B"}), ArgumentError);
  EXPECT_THROW(weighted_soft_vote({row({1, 0}), row({0, 1, 0})}, {1, 1}, {"A", "B"}), ShapeError);
}

TEST(SoftVote, ScaleInvariantAndRowsSumToOne) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ProbabilityMatrix> probas;
    std::vector<double> w;
    for (int m = 0; m < 4; ++m) {
      ProbabilityMatrix p(10, 6);
      for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(gen);
      p = p.array().colwise() / p.rowwise().sum().array();
      probas.push_back(p);
      w.push_back(u(gen));
    }
    const auto a = weighted_soft_vote(probas, w, kSix);
    const double c = 1.0 + 1000.0 * u(gen);
    for (auto& x : w) x *= c;
    const auto b = weighted_soft_vote(probas, w, kSix);
    EXPECT_LE((a.combined - b.combined).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((a.combined.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
  }
}

TEST(HybridConsensus, StatedRule) {
  const auto r = hybrid_consensus({"A", "B"}, {"A", "C"});
  EXPECT_EQ(r.predictions, (ClassVector{"A", "C"}));
  EXPECT_EQ(r.disagreements, 1u);
  const auto same = hybrid_consensus({"A", "B"}, {"A", "B"});
  EXPECT_EQ(same.predictions, (ClassVector{"A", "B"}));
  EXPECT_EQ(same.disagreements, 0u);
  EXPECT_THROW(hybrid_consensus({"A"}, {"A", "B"}), ShapeError);
}

TEST(HybridConsensus, AlwaysEqualsSoft) {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> pick(0, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    ClassVector hard, soft;
    std::size_t differ = 0;
    for (int i = 0; i < 20; ++i) {
      hard.push_back(kSix[static_cast<std::size_t>(pick(gen))]);
      soft.push_back(kSix[static_cast<std::size_t>(pick(gen))]);
      differ += hard.back() != soft.back();
    }
    const auto r = hybrid_consensus(hard, soft);
    ASSERT_EQ(r.predictions, soft);
    ASSERT_EQ(r.disagreements, differ);
  }
}

TEST(Ensemble, IdenticalMembersAgree) {
  Eigen::MatrixXd x(8, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1, 5, 5, 5, 6, 6, 5, 6, 6;
  const ClassVector y = {"A", "A", "A", "A", "B", "B", "B", "B"};
  const auto spec = ClassifierSpec::make(Family::kTree, 1);
  std::vector<FittedModel> members;
  for (int m = 0; m < 5; ++m) members.push_back(fit(spec, x, y));
  const auto result = run_ensemble(EnsembleConfig(std::move(members)), x);
  EXPECT_EQ(result.hard, y);
  EXPECT_EQ(result.soft.predictions, y);
  EXPECT_EQ(result.hybrid.disagreements, 0u);
  for (const auto& m : result.member_predictions) EXPECT_EQ(m, y);
}

TEST(Ensemble, ConfigValidation) {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 5, 6;
  const auto spec = ClassifierSpec::make(Family::kTree, 1);
  const auto ab = fit(spec, x, {"A", "A", "B", "B"});
  const auto ac = fit(spec, x, {"A", "A", "C", "C"});
  EXPECT_THROW(EnsembleConfig({ab}), ArgumentError);
  EXPECT_THROW(EnsembleConfig({ab, ac}), ArgumentError);
  EXPECT_THROW(EnsembleConfig({ab, ab}, {0.0, 0.0}), ArgumentError);
  EXPECT_THROW(EnsembleConfig({ab, ab}, {1.0}), ArgumentError);
  EXPECT_EQ(EnsembleConfig({ab, ab}).weights(), (std::vector<double>{1.0, 1.0}));
}

TEST(Ensemble, DefaultMembers) {
  const auto members = default_ensemble_members(9);
  ASSERT_EQ(members.size(), 5u);
  std::vector<std::string> names;
  for (const auto& m : members) names.push_back(m.describe());
  EXPECT_EQ(names, (std::vector<std::string>{"KNN", "TREE(gini)", "TREE(entropy)", "SVM_RBF", "MLP"}));
}

TEST(Ensemble, JsonShape) {
  EnsembleResult r;
  r.classes = {"A", "B"};
  r.hard = {"A"};
  r.soft.predictions = {"B"};
  r.hybrid = hybrid_consensus(r.hard, r.soft.predictions);
  r.member_predictions = {{"A"}, {"B"}};
  const auto doc = to_json(r, WeightsMode::kValidationF1, {0.5, 0.7}, false);
  EXPECT_EQ(doc["weights_mode"], "validation-f1");
  EXPECT_EQ(doc["disagreements"], 1);
  EXPECT_FALSE(doc.contains("per_member_predictions"));
  EXPECT_TRUE(to_json(r, WeightsMode::kUniform, {1, 1}, true).contains("per_member_predictions"));
}
