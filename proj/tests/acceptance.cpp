// Acceptance run: one PASS/FAIL/SKIP line per criterion. Criteria 9-14 need the
// CICIoV2024 decimal CSVs in CANGUARD_DATA_DIR (or the first argument).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "canguard/analysis.hpp"
#include "canguard/dataset.hpp"
#include "canguard/ensemble.hpp"
#include "canguard/error.hpp"
#include "canguard/features.hpp"
#include "canguard/metrics.hpp"
#include "canguard/models.hpp"
#include "canguard/pipeline.hpp"
#include "canguard/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace canguard;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kPass;
  std::string detail;
};

Outcome pass(std::string detail) { return {Status::kPass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Status::kFail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Status::kSkip, std::move(detail)}; }
Outcome check(bool ok, std::string detail) { return ok ? pass(std::move(detail)) : fail(std::move(detail)); }

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

const ClassVector kSix = {"BENIGN", "DOS", "GAS", "RPM", "SPEED", "STEERING_WHEEL"};

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("canguard-acceptance-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Drops the trailing time_s column of benchmark.csv.
std::string without_last_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

// --- property suite

Outcome voting_oracle() {
  std::vector<ClassVector> members(5);
  std::vector<std::vector<int>> votes;
  for (int code = 0; code < 7776; ++code) {
    std::vector<int> v;
    for (int m = 0, rest = code; m < 5; ++m, rest /= 6) {
      v.push_back(rest % 6);
      members[static_cast<std::size_t>(m)].push_back(kSix[static_cast<std::size_t>(rest % 6)]);
    }
    votes.push_back(v);
  }
  const auto hard = hard_vote(members, kSix);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < votes.size(); ++i)
    mismatches += hard[i] != kSix[static_cast<std::size_t>(oracle::majority(votes[i], 6))];

  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> pick(0, 5);
  std::size_t hybrid_mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    ClassVector h, s;
    for (int i = 0; i < 20; ++i) {
      h.push_back(kSix[static_cast<std::size_t>(pick(gen))]);
      s.push_back(kSix[static_cast<std::size_t>(pick(gen))]);
    }
    hybrid_mismatches += hybrid_consensus(h, s).predictions != s;
  }
  return check(mismatches == 0 && hybrid_mismatches == 0,
               "hard-vote mismatches " + std::to_string(mismatches) + "/7776, hybrid != soft in " +
                   std::to_string(hybrid_mismatches) + "/1000");
}

Outcome anova_oracle() {
  std::mt19937_64 gen(23);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int classes = std::uniform_int_distribution<int>(2, 6)(gen);
    const int n = std::uniform_int_distribution<int>(classes + 2, 50)(gen);
    const int d = std::uniform_int_distribution<int>(1, 9)(gen);
    const Eigen::MatrixXd x = random_matrix(gen, n, d);
    ClassVector y;
    std::vector<int> groups;
    for (int i = 0; i < n; ++i) {
      const int g = i < classes ? i : std::uniform_int_distribution<int>(0, classes - 1)(gen);
      groups.push_back(g);
      y.push_back(std::string(1, static_cast<char>('a' + g)));
    }
    const auto scores = anova_f_scores(x, y);
    for (int j = 0; j < d; ++j) {
      std::vector<double> column(x.col(j).data(), x.col(j).data() + n);
      const double expected = oracle::anova_f(column, groups);
      worst = std::max(worst, std::abs(scores[static_cast<std::size_t>(j)] - expected) / std::abs(expected));
    }
  }
  return check(worst <= 1e-10, "max relative error " + sci(worst));
}

Outcome pca_properties() {
  std::mt19937_64 gen(31);
  double ortho = 0.0, recon = 0.0, ratio = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd x = random_matrix(gen, 100, 9);
    const auto t = fit_pca(x, 1.0);
    const auto& p = t.as<PcaParams>();
    const Eigen::MatrixXd gram = p.components * p.components.transpose();
    ortho = std::max(ortho, (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff());
    recon = std::max(recon, (t.inverse(t.apply(x)) - x).cwiseAbs().maxCoeff());
    ratio = std::max(ratio, std::abs(p.explained_variance_ratio.sum() - 1.0));
  }
  return check(ortho <= 1e-9 && recon <= 1e-8 && ratio <= 1e-9,
               "orthonormality " + sci(ortho) + ", reconstruction " + sci(recon) +
                   ", ratio sum " + sci(ratio));
}

Outcome lda_fisher() {
  int beaten = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd x(80, 2);
    ClassVector y;
    for (Eigen::Index i = 0; i < 80; ++i) {
      const bool second = i >= 40;
      x(i, 0) = n(gen) + (second ? 4.0 : 0.0);
      x(i, 1) = 0.5 * n(gen) + (second ? 1.0 : 0.0);
      y.push_back(second ? "B" : "A");
    }
    const auto t = fit_lda(x, y);
    const Eigen::VectorXd axis = t.as<LdaParams>().components.row(0).transpose();
    const double learned = fisher_ratio(x, y, axis);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    for (int d = 0; d < 100; ++d) {
      const double a = angle(gen);
      if (fisher_ratio(x, y, Eigen::Vector2d(std::cos(a), std::sin(a))) > learned * (1.0 + 1e-9)) ++beaten;
    }
  }
  return check(beaten == 0, std::to_string(beaten) + " of 2000 random directions beat the learned axis");
}

Outcome gradient_checks() {
  std::mt19937_64 gen(12);
  double worst = 0.0;
  for (Family f : {Family::kMlp, Family::kCnn1d, Family::kLogReg})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Eigen::MatrixXd x = random_matrix(gen, 8, 9);
      const ClassVector y = {"a", "b", "c", "a", "b", "c", "a", "b"};
      worst = std::max(worst, gradient_check(ClassifierSpec::make(f, seed), x, y));
    }
  return check(worst < 1e-4, "max relative error " + sci(worst));
}

Outcome accuracy_trap() {
  // 990 BENIGN and two of each attack class.
  ClassVector truth(990, "BENIGN");
  for (std::size_t c = 1; c < kSix.size(); ++c) truth.insert(truth.end(), 2, kSix[c]);
  const auto constant = classification_report(truth, ClassVector(truth.size(), "BENIGN"), kSix);

  RunConfig config;
  config.seed = 6;
  config.feature_sets = {FeatureSet::kOriginal};
  config.models = {Family::kForest};
  config.workers = 0;
  auto cfg = SynthConfig::defaults();
  cfg[SpecificClass::kBenign].ids = {{535, 1.0}, {516, 1.0}, {359, 1.0}};
  for (auto& cls : cfg.classes) cls.noise = 0.3;
  const auto forest = run_benchmark(generate_synthetic(cfg, 2), config).cells.at(0).report;

  return check(constant.accuracy >= 0.99 && constant.macro.f1 <= 0.17 && forest.macro.f1 >= 0.90,
               "constant majority acc " + fmt(constant.accuracy) + " F1-macro " + fmt(constant.macro.f1) +
                   "; FOREST on separable synth F1-macro " + fmt(forest.macro.f1));
}

Outcome split_dedup_invariants() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  std::size_t checked = 0, violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto t = oracle::random_table(gen, 120);
    const auto d = deduplicate(t);
    if (!(deduplicate(d) == d)) ++violations;
    const double f = frac(gen);
    SplitResult s;
    try {
      s = stratified_split(t, f, static_cast<std::uint64_t>(trial));
    } catch (const SplitError&) {
      if (t.size() >= 20) ++violations;
      continue;
    }
    ++checked;
    std::set<std::size_t> train(s.train_indices.begin(), s.train_indices.end());
    for (auto i : s.test_indices) violations += train.count(i);
    if (s.train_indices.size() + s.test_indices.size() != t.size()) ++violations;
    std::map<SpecificClass, std::size_t> total, test;
    for (const auto& r : t.records()) ++total[r.specific_class];
    for (const auto& r : s.test.records()) ++test[r.specific_class];
    for (const auto& [c, n] : total)
      if (std::abs(static_cast<double>(test[c]) - static_cast<double>(n) * f) > 1.0 + 1e-9) ++violations;
  }
  return check(violations == 0 && checked > 900,
               std::to_string(violations) + " violations over " + std::to_string(checked) + " split tables");
}

Outcome determinism() {
  TempDir a("det-a"), b("det-b");
  RunConfig config;
  config.synth_config = std::string(kDefaultSynthConfig);
  config.seed = 8;
  config.models = {Family::kLogReg, Family::kTree, Family::kForest, Family::kKnn};
  auto forest = ClassifierSpec::make(Family::kForest);
  std::get<ForestParams>(forest.params).n_trees = 20;
  config.overrides = {forest};
  config.out_dir = a.path;
  config.workers = 4;
  cmd_benchmark(config);
  config.out_dir = b.path;
  config.workers = 1;
  cmd_benchmark(config);
  bool same = without_last_column(slurp(a.path / "benchmark.csv")) == without_last_column(slurp(b.path / "benchmark.csv"));
  for (const char* name : {"comparison.csv", "reports.json", "reports.txt"})
    same = same && slurp(a.path / name) == slurp(b.path / name);

  std::mt19937_64 gen(5);
  const Eigen::MatrixXd x = random_matrix(gen, 200, 9);
  ClassVector y;
  for (Eigen::Index i = 0; i < x.rows(); ++i) y.push_back(x(i, 0) + x(i, 3) > 0.0 ? "A" : x(i, 5) > 0.5 ? "B" : "C");
  auto one = ClassifierSpec::make(Family::kForest, 5);
  std::get<ForestParams>(one.params).workers = 1;
  auto eight = one;
  std::get<ForestParams>(eight.params).workers = 8;
  auto a_doc = serialize_model(fit(one, x, y));
  auto b_doc = serialize_model(fit(eight, x, y));
  a_doc.erase("train_seconds");
  b_doc.erase("train_seconds");
  return check(same && a_doc == b_doc, std::string("benchmark outputs ") + (same ? "identical" : "differ") +
                                           ", forest 1 vs 8 workers " + (a_doc == b_doc ? "identical" : "differ"));
}

// --- dataset suite

struct Corpus {
  RecordTable table;
  RecordTable unique;
};

const std::array<std::pair<const char*, std::size_t>, 6> kFileCounts = {{{"decimal_benign", 1223737},
                                                                       {"decimal_DoS", 74663},
                                                                       {"decimal_spoofing-GAS", 9991},
                                                                       {"decimal_spoofing-RPM", 54900},
                                                                       {"decimal_spoofing-SPEED", 24951},
                                                                       {"decimal_spoofing-STEERING_WHEEL", 19977}}};

Outcome table_counts(const Corpus& c) {
  std::map<std::string, std::size_t> per_file;
  for (const auto& tag : c.table.source_tags()) ++per_file[tag];
  bool ok = c.table.size() == 1408219;
  std::string detail = "combined " + std::to_string(c.table.size());
  for (const auto& [file, expected] : kFileCounts) {
    ok = ok && per_file[file] == expected;
    if (per_file[file] != expected)
      detail += "; " + std::string(file) + " " + std::to_string(per_file[file]) + " != " + std::to_string(expected);
  }
  const std::map<std::string, double> category_share = {{"BENIGN", 86.90}, {"SPOOFING", 7.80}, {"DOS", 5.30}};
  for (const auto& row : class_distribution(c.table, LabelLevel::kCategory).rows) {
    const double diff = std::abs(row.percentage - category_share.at(row.name));
    ok = ok && diff <= 0.05;
    detail += "; " + row.name + " " + fmt(row.percentage, 2) + "%";
  }
  return check(ok, detail);
}

Outcome unique_messages(const Corpus& c) {
  const auto report = duplicate_report(c.table);
  const std::map<Category, std::size_t> expected = {
      {Category::kBenign, 3547}, {Category::kDos, 21}, {Category::kSpoofing, 20}};
  bool ok = report.rows.size() == expected.size();
  std::string detail;
  for (const auto& row : report.rows) {
    ok = ok && row.unique_messages == expected.at(row.category);
    detail += std::string(to_string(row.category)) + " " + std::to_string(row.unique_messages) + "; ";
  }
  detail += "combined " + std::to_string(report.unique_total) + " (reference 3,568)";
  return check(ok, detail);
}

Outcome dos_id(const Corpus& c) {
  std::size_t dos = 0, on_291 = 0;
  for (const auto& r : c.table.records())
    if (r.category == Category::kDos) {
      ++dos;
      on_291 += r.id == 291;
    }
  return check(dos > 0 && dos == on_291, std::to_string(on_291) + " of " + std::to_string(dos) + " DoS rows on id 291");
}

Outcome anova_top5(const Corpus& c) {
  const auto data = to_feature_matrix(c.unique);
  const auto best = select_k_best(anova_f_scores(data.x, data.y), 5).as<KBestParams>().indices;
  std::set<std::string> got;
  for (auto i : best) got.insert(std::string(kFeatureNames[i]));
  const std::set<std::string> expected = {"ID", "DATA_0", "DATA_1", "DATA_2", "DATA_6"};
  std::string detail;
  for (const auto& n : got) detail += n + " ";
  return check(got == expected, "top-5 " + detail);
}

RunConfig dataset_config() {
  RunConfig config;
  config.seed = 42;
  return config;
}

Outcome benchmark_bands(const Corpus& c) {
  RunConfig config = dataset_config();
  config.models = {Family::kLogReg, Family::kTree, Family::kForest};
  const auto result = run_benchmark(c.table, config);
  auto find = [&](FeatureSet fs, Family f) -> const EvalReport& {
    for (const auto& x : result.cells)
      if (x.feature_set == fs && x.model.rfind(std::string(to_string(f)), 0) == 0) return x.report;
    throw std::runtime_error("missing benchmark cell");
  };
  bool ok = true;
  std::string detail;
  for (FeatureSet fs : {FeatureSet::kOriginal, FeatureSet::kAnova})
    for (Family f : {Family::kTree, Family::kForest}) {
      const double acc = find(fs, f).accuracy;
      ok = ok && acc >= 0.995;
      detail += std::string(to_string(fs)) + "/" + std::string(to_string(f)) + " acc " + fmt(acc) + "; ";
    }
  for (FeatureSet fs : kAllFeatureSets) {
    const double f1 = find(fs, Family::kLogReg).macro.f1;
    ok = ok && f1 < 0.25;
    detail += std::string(to_string(fs)) + "/LOGREG F1 " + fmt(f1) + "; ";
  }
  const double rf_anova = find(FeatureSet::kAnova, Family::kForest).macro.f1;
  const double rf_pca = find(FeatureSet::kPca, Family::kForest).macro.f1;
  ok = ok && std::abs(rf_anova - 0.8266) <= 0.10 && rf_pca < rf_anova;
  detail += "FOREST F1 ANOVA " + fmt(rf_anova) + " PCA " + fmt(rf_pca);
  return check(ok, detail);
}

Outcome ensemble_band(const Corpus& c) {
  const auto run = run_ensemble_experiment(c.table, dataset_config());
  const auto& r = run.hybrid;
  std::string zero;
  for (const auto& m : r.per_class)
    if (m.support > 0 && m.recall == 0.0) zero += m.name + " ";
  const bool ok = r.accuracy >= 0.995 && std::abs(r.macro.f1 - 0.7598) <= 0.12 && !zero.empty();
  return check(ok, "accuracy " + fmt(r.accuracy) + ", F1-macro " + fmt(r.macro.f1) + ", zero-recall classes: " +
                       (zero.empty() ? std::string("none") : zero));
}

struct Item {
  int number;
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::optional<fs::path> data_dir;
  if (argc > 1) data_dir = fs::path(argv[1]);
  data_dir = resolve_data_dir(data_dir);

  std::optional<Corpus> corpus;
  std::string corpus_error;
  auto dataset = [&](std::function<Outcome(const Corpus&)> body) {
    return [&, body]() -> Outcome {
      if (!data_dir) return skip(std::string(kDataDirEnv) + " not set; CICIoV2024 decimal CSVs unavailable");
      if (!corpus && corpus_error.empty()) {
        try {
          Corpus c;
          c.table = load_dataset(*data_dir);
          c.unique = deduplicate(c.table);
          corpus = std::move(c);
        } catch (const std::exception& e) {
          corpus_error = e.what();
        }
      }
      if (!corpus) return fail("cannot load dataset: " + corpus_error);
      return body(*corpus);
    };
  };

  const std::vector<Item> criteria = {
      {1, "voting oracle", voting_oracle},
      {2, "ANOVA oracle", anova_oracle},
      {3, "PCA properties", pca_properties},
      {4, "LDA Fisher optimality", lda_fisher},
      {5, "gradient checks", gradient_checks},
      {6, "accuracy trap", accuracy_trap},
      {7, "split/dedup invariants", split_dedup_invariants},
      {8, "determinism", determinism},
      {9, "dataset counts", dataset(table_counts)},
      {10, "unique messages", dataset(unique_messages)},
      {11, "DoS id concentration", dataset(dos_id)},
      {12, "ANOVA top-5", dataset(anova_top5)},
      {13, "benchmark bands", dataset(benchmark_bands)},
      {14, "ensemble band", dataset(ensemble_band)},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    failures += o.status == Status::kFail;
    std::cout << tag << " " << c.number << " " << c.name << ": " << o.detail << " (" << fmt(secs, 2) << " s)"
              << std::endl;
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
