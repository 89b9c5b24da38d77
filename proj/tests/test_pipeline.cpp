#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "canguard/error.hpp"
#include "canguard/pipeline.hpp"
#include "canguard/synth.hpp"

using namespace canguard;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("canguard_pipe_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Drops the trailing time_s column.
std::string without_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

RunConfig quick_config(const fs::path& out) {
  RunConfig c;
  c.synth_config = std::string(kDefaultSynthConfig);
  c.seed = 11;
  c.out_dir = out;
  c.workers = 2;
  auto mlp = ClassifierSpec::make(Family::kMlp);
  std::get<MlpParams>(mlp.params).adam.epochs = 20;
  auto cnn = ClassifierSpec::make(Family::kCnn1d);
  std::get<CnnParams>(cnn.params).adam.epochs = 20;
  auto forest = ClassifierSpec::make(Family::kForest);
  std::get<ForestParams>(forest.params).n_trees = 10;
  c.overrides = {mlp, cnn, forest};
  return c;
}

}  // namespace

TEST(Config, Validation) {
  RunConfig c;
  c.test_fraction = 1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c.test_fraction = 0.3;
  c.models.clear();
  EXPECT_THROW(validate(c), ConfigError);
  c.models = {Family::kTree};
  c.feature_sets.clear();
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_EQ(parse_feature_set("ANOVA"), FeatureSet::kAnova);
  EXPECT_FALSE(parse_feature_set("TSNE").has_value());
}

TEST(Config, NoInputIsConfigError) {
  ::unsetenv(kDataDirEnv);
  RunConfig c;
  EXPECT_THROW(load_input(c), ConfigError);
}

TEST(Stats, EmptyDirectoryNamesAllSixFiles) {
  TempDir dir;
  RunConfig c;
  c.data_dir = dir.path / "data";
  fs::create_directories(*c.data_dir);
  c.out_dir = dir.path / "out";
  try {
    cmd_stats(c);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    for (auto name : kCanonicalFiles) EXPECT_NE(std::string(e.what()).find(name), std::string::npos);
  }
}

TEST(Stats, WritesArtifactsWithSeed) {
  TempDir dir;
  RunConfig c;
  c.synth_config = std::string(kDefaultSynthConfig);
  c.seed = 5;
  c.out_dir = dir.path;
  const auto s = cmd_stats(c);
  EXPECT_EQ(s.categories.rows.front().name, "BENIGN");
  for (auto stem : {"category_distribution", "class_distribution", "top_ids", "byte_means", "payload_histogram",
                    "correlation", "duplicates"}) {
    const auto csv = slurp(dir.path / (std::string(stem) + ".csv"));
    EXPECT_NE(csv.find(",seed\n"), std::string::npos) << stem;
    const auto doc = nlohmann::json::parse(slurp(dir.path / (std::string(stem) + ".json")));
    EXPECT_EQ(doc["seed"], 5) << stem;
  }
}

TEST(Synth, SixFilesRoundTrip) {
  TempDir dir;
  RunConfig c;
  c.seed = 3;
  c.out_dir = dir.path;
  const auto table = cmd_synth(c);
  EXPECT_EQ(table.size(), SynthConfig::defaults().total());
  const auto back = load_dataset(dir.path);
  EXPECT_EQ(back.records(), table.records());

  TempDir again;
  c.out_dir = again.path;
  cmd_synth(c);
  for (auto name : kCanonicalFiles)
    EXPECT_EQ(slurp(dir.path / std::string(name)), slurp(again.path / std::string(name)));
}

TEST(Synth, ZeroCountClassIsHeaderOnly) {
  TempDir dir;
  auto cfg = SynthConfig::defaults().to_json();
  cfg["classes"]["GAS"]["count"] = 0;
  std::ofstream(dir.path / "cfg.json") << cfg.dump();
  RunConfig c;
  c.synth_config = (dir.path / "cfg.json").string();
  c.out_dir = dir.path / "data";
  cmd_synth(c);
  const auto gas = slurp(c.out_dir / "decimal_spoofing-GAS.csv");
  EXPECT_EQ(std::count(gas.begin(), gas.end(), '\n'), 1);
}

TEST(Benchmark, RowLayoutAndTrainOnlyFitting) {
  TempDir dir;
  RunConfig c = quick_config(dir.path);
  c.models = {Family::kLogReg, Family::kTree, Family::kKnn};
  const RecordTable table = load_input(c);
  const auto result = run_benchmark(table, c);
  ASSERT_EQ(result.cells.size(), c.feature_sets.size() * c.models.size());
  for (std::size_t i = 0; i < result.cells.size(); ++i)
    EXPECT_EQ(result.cells[i].feature_set, c.feature_sets[i / c.models.size()]);

  const auto split = prepare_split(table, c);
  const auto train = to_feature_matrix(split.train);
  const Eigen::VectorXd mean = train.x.colwise().mean().transpose();
  for (const auto& p : result.features) {
    ASSERT_FALSE(p.transforms.empty());
    EXPECT_LE((p.transforms.front().as<ScalerParams>().mean - mean).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(static_cast<std::size_t>(p.test.rows()), split.test.size());
  }
  const auto& pca = result.features[1];
  EXPECT_EQ(pca.transforms.back().kind(), TransformKind::kPca);
  EXPECT_EQ(result.features[3].train.cols(), static_cast<Eigen::Index>(kAnovaK));
}

TEST(Benchmark, NeuralOnlyOnOriginal) {
  EXPECT_TRUE(runs_on(Family::kMlp, FeatureSet::kOriginal));
  EXPECT_FALSE(runs_on(Family::kCnn1d, FeatureSet::kPca));
  EXPECT_TRUE(runs_on(Family::kForest, FeatureSet::kLda));
}

TEST(Benchmark, SeparableSyntheticTree) {
  TempDir dir;
  RunConfig c = quick_config(dir.path);
  c.feature_sets = {FeatureSet::kOriginal};
  c.models = {Family::kTree};
  // Few benign ids so every id is seen in training; payload noise keeps
  // enough unique attack rows after dedup.
  auto cfg = SynthConfig::defaults();
  cfg[SpecificClass::kBenign].ids = {{535, 1.0}, {516, 1.0}, {359, 1.0}};
  for (auto& cls : cfg.classes) cls.noise = 0.3;
  const auto result = run_benchmark(generate_synthetic(cfg, 2), c);
  EXPECT_GE(result.cells[0].report.accuracy, 0.99);
}

TEST(Benchmark, DeterministicOutputs) {
  TempDir a, b;
  RunConfig ca = quick_config(a.path);
  RunConfig cb = quick_config(b.path);
  cb.workers = 1;
  cmd_benchmark(ca);
  cmd_benchmark(cb);
  EXPECT_EQ(slurp(a.path / "comparison.csv"), slurp(b.path / "comparison.csv"));
  EXPECT_EQ(slurp(a.path / "reports.json"), slurp(b.path / "reports.json"));
  EXPECT_EQ(without_timing(slurp(a.path / "benchmark.csv")), without_timing(slurp(b.path / "benchmark.csv")));
  EXPECT_NE(slurp(a.path / "comparison.csv").find(",11\n"), std::string::npos);
}

TEST(Ensemble, IdenticalMembersNeverDisagree) {
  TempDir dir;
  RunConfig c = quick_config(dir.path);
  const auto table = load_input(c);
  const auto spec = ClassifierSpec::make(Family::kTree, 4);
  const auto run = run_ensemble_experiment(table, c, {spec, spec, spec, spec, spec});
  EXPECT_EQ(run.result.hybrid.disagreements, 0u);
  EXPECT_EQ(run.result.hard, run.result.soft.predictions);
}

TEST(Ensemble, AbsentClassRowIsZero) {
  TempDir dir;
  RunConfig c = quick_config(dir.path);
  auto cfg = SynthConfig::defaults().to_json();
  cfg["classes"]["SPEED"]["count"] = 0;
  std::ofstream(dir.path / "cfg.json") << cfg.dump();
  c.synth_config = (dir.path / "cfg.json").string();
  const auto run = run_ensemble_experiment(load_input(c), c);
  const auto& row = run.hybrid.per_class[static_cast<std::size_t>(SpecificClass::kSpeed)];
  EXPECT_EQ(row.name, "SPEED");
  EXPECT_EQ(row.support, 0u);
  EXPECT_EQ(row.precision, 0.0);
  EXPECT_EQ(row.recall, 0.0);
  EXPECT_EQ(row.f1, 0.0);
}

TEST(Ensemble, CommandWritesReport) {
  TempDir dir;
  RunConfig c = quick_config(dir.path);
  c.weights = WeightsMode::kValidationF1;
  c.member_predictions = true;
  const auto run = cmd_ensemble(c);
  ASSERT_EQ(run.weights.size(), 5u);
  const auto doc = nlohmann::json::parse(slurp(dir.path / "ensemble.json"));
  EXPECT_EQ(doc["weights_mode"], "validation-f1");
  EXPECT_EQ(doc["seed"], 11);
  EXPECT_EQ(doc["per_member_predictions"].size(), 5u);
  EXPECT_EQ(doc["hybrid"], doc["soft"]);
  EXPECT_TRUE(fs::exists(dir.path / "ensemble_comparison.csv"));
  EXPECT_GE(run.hybrid.accuracy, 0.8);
}
