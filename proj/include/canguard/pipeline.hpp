#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "canguard/analysis.hpp"
#include "canguard/dataset.hpp"
#include "canguard/ensemble.hpp"
#include "canguard/features.hpp"
#include "canguard/metrics.hpp"
#include "canguard/models.hpp"

namespace canguard {

enum class FeatureSet { kOriginal, kPca, kLda, kAnova };

std::string_view to_string(FeatureSet fs);
std::optional<FeatureSet> parse_feature_set(std::string_view s);

inline constexpr std::array<FeatureSet, 4> kAllFeatureSets = {FeatureSet::kOriginal, FeatureSet::kPca,
                                                              FeatureSet::kLda, FeatureSet::kAnova};
inline constexpr std::array<Family, 7> kAllFamilies = {Family::kLogReg, Family::kTree,  Family::kForest,
                                                       Family::kKnn,    Family::kSvmRbf, Family::kMlp,
                                                       Family::kCnn1d};

inline constexpr double kPcaVarianceTarget = 0.95;
inline constexpr std::size_t kAnovaK = 5;

/// Selects the built-in synthetic configuration when passed as --synth-config.
inline constexpr std::string_view kDefaultSynthConfig = "default";

struct RunConfig {
  std::optional<std::filesystem::path> data_dir;  // falls back to CANGUARD_DATA_DIR
  std::optional<std::string> synth_config;        // a JSON file, or "default"
  std::uint64_t seed = 0;
  double test_fraction = 0.30;
  std::vector<FeatureSet> feature_sets{kAllFeatureSets.begin(), kAllFeatureSets.end()};
  std::vector<Family> models{kAllFamilies.begin(), kAllFamilies.end()};
  std::filesystem::path out_dir = "canguard-out";
  WeightsMode weights = WeightsMode::kUniform;
  int workers = 0;  // 0: hardware concurrency
  bool member_predictions = false;
  /// Replaces the default hyperparameters of the listed families.
  std::vector<ClassifierSpec> overrides;
};

void validate(const RunConfig& config);

/// The synthetic corpus when a synth config is given, else the dataset
/// directory from the flag or the environment.
RecordTable load_input(const RunConfig& config);

/// Spec for one family in a run: the override if present, else defaults,
/// seeded from the run seed.
ClassifierSpec spec_for(const RunConfig& config, Family family, std::uint64_t stream);

// ---------------------------------------------------------------------------

struct StatsSummary {
  DistributionTable categories;
  DistributionTable classes;
  std::vector<IdFrequency> top;
  ByteMeans byte_means;
  PayloadHistogram histogram;
  CorrelationMatrix correlation;
  DuplicateReport duplicates;
};

StatsSummary compute_stats(const RecordTable& table);
StatsSummary cmd_stats(const RunConfig& config);

/// Train/test features after the train-only fitted scaler and reducer.
struct PreparedFeatures {
  FeatureSet feature_set = FeatureSet::kOriginal;
  FeatureMatrix train;
  FeatureMatrix test;
  std::vector<FittedTransform> transforms;  // scaler first
};

/// All six specific classes in taxonomy order; reports keep a row for every
/// class even when it is absent from the test partition.
ClassVector report_classes();

/// Dedup, then stratified split.
SplitResult prepare_split(const RecordTable& table, const RunConfig& config);
PreparedFeatures prepare_features(const SplitResult& split, FeatureSet fs);

struct BenchmarkCell {
  FeatureSet feature_set = FeatureSet::kOriginal;
  std::string model;
  EvalReport report;
};

struct BenchmarkResult {
  std::vector<BenchmarkCell> cells;  // feature set order, then model order
  std::vector<PreparedFeatures> features;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

/// Neural families are evaluated on ORIGINAL only.
bool runs_on(Family family, FeatureSet fs);

BenchmarkResult run_benchmark(const RecordTable& table, const RunConfig& config);
BenchmarkResult cmd_benchmark(const RunConfig& config);

struct EnsembleRun {
  ClassVector y_test;
  std::vector<std::string> member_names;
  std::vector<double> weights;
  EnsembleResult result;
  EvalReport hard;
  EvalReport soft;
  EvalReport hybrid;
  std::vector<EvalReport> members;
};

/// `members` defaults to the five-member line-up when empty.
EnsembleRun run_ensemble_experiment(const RecordTable& table, const RunConfig& config,
                                    std::vector<ClassifierSpec> members = {});
EnsembleRun cmd_ensemble(const RunConfig& config);

/// Writes the six canonical files; a class with no rows gets a header-only file.
void write_dataset(const std::filesystem::path& dir, const RecordTable& table);
RecordTable cmd_synth(const RunConfig& config);

}  // namespace canguard
