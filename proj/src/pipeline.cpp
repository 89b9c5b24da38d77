#include "canguard/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include "canguard/error.hpp"
#include "canguard/rng.hpp"
#include "canguard/synth.hpp"

namespace canguard {
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kTopIds = 10;
constexpr std::size_t kHistogramBins = 51;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

/// Appends a seed column to every line of a CSV document.
std::string with_seed_column(const std::string& csv, std::uint64_t seed) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    out << line << ',' << (header ? std::string("seed") : std::to_string(seed)) << '\n';
    header = false;
  }
  return out.str();
}

template <typename T>
void write_artifact(const fs::path& dir, const std::string& stem, const T& value, std::uint64_t seed) {
  std::ostringstream csv;
  write_csv(csv, value);
  write_text(dir / (stem + ".csv"), with_seed_column(csv.str(), seed));
  write_json(dir / (stem + ".json"), {{"seed", seed}, {"data", to_json(value)}});
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

/// Runs jobs on at most `workers` threads. The first failure (in job order)
/// is rethrown after all threads finish.
void run_jobs(std::vector<std::function<void()>>& jobs, int workers) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers) : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(jobs.size(), 1));
  std::vector<std::exception_ptr> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        jobs[i]();
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

template <typename Fn>
auto tagged(const std::string& tag, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.category(), "[" + tag + "] " + e.what());
  }
}

nlohmann::json duplicates_json(const DuplicateReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"category", std::string(to_string(r.category))},
                    {"total_records", r.total_records},
                    {"duplicate_count", r.duplicate_count},
                    {"duplicate_fraction", r.duplicate_fraction},
                    {"unique_messages", r.unique_messages}});
  return {{"rows", rows}, {"total_records", report.total_records}, {"unique_total", report.unique_total}};
}

std::string duplicates_csv(const DuplicateReport& report) {
  std::ostringstream os;
  os << "category,total_records,duplicate_count,duplicate_percent,unique_messages\n";
  for (const auto& r : report.rows)
    os << to_string(r.category) << ',' << r.total_records << ',' << r.duplicate_count << ','
       << fixed(100.0 * r.duplicate_fraction, 2) << ',' << r.unique_messages << '\n';
  os << "TOTAL," << report.total_records << ',' << report.total_records - report.unique_total << ','
     << fixed(report.total_records ? 100.0 * static_cast<double>(report.total_records - report.unique_total) /
                                         static_cast<double>(report.total_records)
                                   : 0.0,
              2)
     << ',' << report.unique_total << '\n';
  return os.str();
}

}  // namespace

std::string_view to_string(FeatureSet f) {
  switch (f) {
    case FeatureSet::kOriginal: return "ORIGINAL";
    case FeatureSet::kPca: return "PCA";
    case FeatureSet::kLda: return "LDA";
    case FeatureSet::kAnova: return "ANOVA";
  }
  return "?";
}

std::optional<FeatureSet> parse_feature_set(std::string_view s) {
  for (FeatureSet f : kAllFeatureSets)
    if (to_string(f) == s) return f;
  return std::nullopt;
}

void validate(const RunConfig& config) {
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0))
    throw ConfigError("test fraction must lie in (0, 1), got " + std::to_string(config.test_fraction));
  if (config.feature_sets.empty()) throw ConfigError("at least one feature set is required");
  if (config.models.empty()) throw ConfigError("at least one model family is required");
  if (config.workers < 0) throw ConfigError("workers must be >= 0");
  for (const auto& spec : config.overrides) validate(spec);
}

RecordTable load_input(const RunConfig& config) {
  if (config.synth_config) {
    const SynthConfig synth = *config.synth_config == kDefaultSynthConfig ? SynthConfig::defaults()
                                                                           : SynthConfig::load(*config.synth_config);
    return generate_synthetic(synth, config.seed);
  }
  const auto dir = resolve_data_dir(config.data_dir);
  if (!dir)
    throw ConfigError(std::string("no input: pass --data <dir>, --synth-config <file|default>, or set ") +
                      kDataDirEnv);
  return load_dataset(*dir);
}

ClassifierSpec spec_for(const RunConfig& config, Family family, std::uint64_t stream) {
  ClassifierSpec spec = ClassifierSpec::make(family, derive_seed(config.seed, stream));
  for (const auto& o : config.overrides)
    if (o.family() == family) spec.params = o.params;
  return spec;
}

// ---------------------------------------------------------------------------
// stats

StatsSummary compute_stats(const RecordTable& table) {
  StatsSummary s;
  s.categories = class_distribution(table, LabelLevel::kCategory);
  s.classes = class_distribution(table, LabelLevel::kSpecificClass);
  s.top = top_ids(table, kTopIds);
  s.byte_means = byte_means_by_category(table);
  s.histogram = payload_sum_histogram(table, kHistogramBins);
  s.correlation = correlation_matrix(table);
  s.duplicates = duplicate_report(table);
  return s;
}

StatsSummary cmd_stats(const RunConfig& config) {
  validate(config);
  const RecordTable table = load_input(config);
  StatsSummary s = compute_stats(table);
  ensure_dir(config.out_dir);
  const auto& dir = config.out_dir;
  write_artifact(dir, "category_distribution", s.categories, config.seed);
  write_artifact(dir, "class_distribution", s.classes, config.seed);
  write_artifact(dir, "top_ids", s.top, config.seed);
  write_artifact(dir, "byte_means", s.byte_means, config.seed);
  write_artifact(dir, "payload_histogram", s.histogram, config.seed);
  write_artifact(dir, "correlation", s.correlation, config.seed);
  write_text(dir / "duplicates.csv", with_seed_column(duplicates_csv(s.duplicates), config.seed));
  write_json(dir / "duplicates.json", {{"seed", config.seed}, {"data", duplicates_json(s.duplicates)}});
  return s;
}

// ---------------------------------------------------------------------------
// benchmark

SplitResult prepare_split(const RecordTable& table, const RunConfig& config) {
  return stratified_split(deduplicate(table), config.test_fraction, config.seed);
}

PreparedFeatures prepare_features(const SplitResult& split, FeatureSet fs) {
  return tagged(std::string(to_string(fs)), [&] {
    PreparedFeatures out;
    out.feature_set = fs;
    const FeatureMatrix train = to_feature_matrix(split.train);
    const FeatureMatrix test = to_feature_matrix(split.test);
    out.transforms.push_back(fit_scaler(train.x));
    out.train = transform(out.transforms.back(), train);
    out.test = transform(out.transforms.back(), test);
    switch (fs) {
      case FeatureSet::kOriginal: return out;
      case FeatureSet::kPca: out.transforms.push_back(fit_pca(out.train.x, kPcaVarianceTarget)); break;
      case FeatureSet::kLda: out.transforms.push_back(fit_lda(out.train.x, out.train.y)); break;
      case FeatureSet::kAnova:
        out.transforms.push_back(
            select_k_best(anova_f_scores(out.train.x, out.train.y), std::min<std::size_t>(kAnovaK, kNumFeatures)));
        break;
    }
    out.train = transform(out.transforms.back(), out.train);
    out.test = transform(out.transforms.back(), out.test);
    return out;
  });
}

bool runs_on(Family family, FeatureSet fs) {
  if (family == Family::kMlp || family == Family::kCnn1d) return fs == FeatureSet::kOriginal;
  return true;
}

ClassVector report_classes() {
  ClassVector out;
  for (SpecificClass c : kAllSpecificClasses) out.emplace_back(to_string(c));
  return out;
}

namespace {

EvalReport evaluate(const FittedModel& model, const FeatureMatrix& test) {
  const auto start = std::chrono::steady_clock::now();
  const ClassVector pred = predict(model, test.x);
  const double predict_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EvalReport report = classification_report(test.y, pred, report_classes());
  report.train_seconds = model.train_seconds;
  report.predict_seconds = predict_seconds;
  return report;
}

std::uint64_t model_stream(Family f) { return 0x100 + static_cast<std::uint64_t>(f); }

}  // namespace

BenchmarkResult run_benchmark(const RecordTable& table, const RunConfig& config) {
  validate(config);
  const SplitResult split = prepare_split(table, config);
  BenchmarkResult result;
  result.train_rows = split.train.size();
  result.test_rows = split.test.size();
  for (FeatureSet fs : config.feature_sets) result.features.push_back(prepare_features(split, fs));

  struct Job {
    std::size_t features;
    ClassifierSpec spec;
  };
  std::vector<Job> plan;
  for (std::size_t f = 0; f < config.feature_sets.size(); ++f)
    for (Family family : config.models)
      if (runs_on(family, config.feature_sets[f]))
        plan.push_back({f, spec_for(config, family, model_stream(family))});

  result.cells.resize(plan.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t j = 0; j < plan.size(); ++j) {
    jobs.emplace_back([&, j] {
      const auto& prepared = result.features[plan[j].features];
      const auto& spec = plan[j].spec;
      const std::string tag = std::string(to_string(prepared.feature_set)) + " x " + spec.describe();
      auto& cell = result.cells[j];
      cell.feature_set = prepared.feature_set;
      cell.model = spec.describe();
      cell.report = tagged(tag, [&] { return evaluate(fit(spec, prepared.train), prepared.test); });
    });
  }
  run_jobs(jobs, config.workers);
  return result;
}

BenchmarkResult cmd_benchmark(const RunConfig& config) {
  validate(config);
  const BenchmarkResult result = run_benchmark(load_input(config), config);
  ensure_dir(config.out_dir);

  std::ostringstream bench;
  bench << "feature_set,model,accuracy,f1_macro,seed,time_s\n";
  std::vector<ComparisonRow> rows;
  std::string text;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) {
    const std::string fs_name(to_string(c.feature_set));
    bench << fs_name << ',' << c.model << ',' << fixed(c.report.accuracy, 4) << ',' << fixed(c.report.macro.f1, 4)
          << ',' << config.seed << ',' << fixed(c.report.train_seconds + c.report.predict_seconds, 4) << '\n';
    rows.push_back({fs_name, c.model, c.report.accuracy, c.report.macro.f1});
    text += format_report(c.report, fs_name + " / " + c.model) + "\n";
    cells.push_back({{"feature_set", fs_name}, {"model", c.model}, {"report", to_json(c.report, false)}});
  }
  nlohmann::json transforms = nlohmann::json::object();
  for (const auto& p : result.features) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& t : p.transforms) list.push_back(t.to_json());
    transforms[std::string(to_string(p.feature_set))] = list;
  }
  std::ostringstream comparison;
  write_comparison_csv(comparison, rows, config.seed);

  write_text(config.out_dir / "benchmark.csv", bench.str());
  write_text(config.out_dir / "comparison.csv", comparison.str());
  write_text(config.out_dir / "reports.txt", text);
  write_json(config.out_dir / "reports.json", {{"seed", config.seed},
                                               {"test_fraction", config.test_fraction},
                                               {"train_rows", result.train_rows},
                                               {"test_rows", result.test_rows},
                                               {"cells", cells},
                                               {"transforms", transforms}});
  return result;
}

// ---------------------------------------------------------------------------
// ensemble

EnsembleRun run_ensemble_experiment(const RecordTable& table, const RunConfig& config,
                                    std::vector<ClassifierSpec> members) {
  validate(config);
  if (members.empty()) {
    members = default_ensemble_members(derive_seed(config.seed, 0xe5));
    for (auto& m : members)
      for (const auto& o : config.overrides) {
        if (o.family() != m.family()) continue;
        if (const auto* tree = std::get_if<TreeParams>(&m.params)) {
          TreeParams p = std::get<TreeParams>(o.params);
          p.criterion = tree->criterion;
          m.params = p;
        } else {
          m.params = o.params;
        }
      }
  }
  const SplitResult split = prepare_split(table, config);
  const PreparedFeatures data = prepare_features(split, FeatureSet::kOriginal);

  EnsembleRun run;
  run.y_test = data.test.y;
  for (const auto& m : members) run.member_names.push_back(m.describe());
  run.weights = config.weights == WeightsMode::kUniform
                    ? std::vector<double>(members.size(), 1.0)
                    : tagged("validation weights", [&] {
                        return validation_f1_weights(members, data.train.x, data.train.y,
                                                     derive_seed(config.seed, 0x5e1));
                      });

  std::vector<std::optional<FittedModel>> fitted(members.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t m = 0; m < members.size(); ++m)
    jobs.emplace_back([&, m] { fitted[m] = tagged(members[m].describe(), [&] { return fit(members[m], data.train); }); });
  run_jobs(jobs, config.workers);

  std::vector<FittedModel> models;
  for (auto& f : fitted) models.push_back(std::move(*f));
  for (const auto& model : models) run.members.push_back(evaluate(model, data.test));
  const EnsembleConfig ensemble(std::move(models), run.weights);
  run.result = run_ensemble(ensemble, data.test.x);

  const ClassVector classes = report_classes();
  run.hard = classification_report(run.y_test, run.result.hard, classes);
  run.soft = classification_report(run.y_test, run.result.soft.predictions, classes);
  run.hybrid = classification_report(run.y_test, run.result.hybrid.predictions, classes);
  return run;
}

EnsembleRun cmd_ensemble(const RunConfig& config) {
  validate(config);
  EnsembleRun run = run_ensemble_experiment(load_input(config), config);
  ensure_dir(config.out_dir);

  nlohmann::json doc = to_json(run.result, config.weights, run.weights, config.member_predictions);
  doc["seed"] = config.seed;
  doc["members"] = run.member_names;
  nlohmann::json member_reports = nlohmann::json::array();
  for (std::size_t m = 0; m < run.members.size(); ++m)
    member_reports.push_back({{"model", run.member_names[m]}, {"report", to_json(run.members[m], false)}});
  doc["reports"] = {{"hard", to_json(run.hard, false)},
                    {"soft", to_json(run.soft, false)},
                    {"hybrid", to_json(run.hybrid, false)},
                    {"members", member_reports}};
  write_json(config.out_dir / "ensemble.json", doc);

  std::vector<ComparisonRow> rows;
  for (std::size_t m = 0; m < run.members.size(); ++m)
    rows.push_back({"ORIGINAL", run.member_names[m], run.members[m].accuracy, run.members[m].macro.f1});
  rows.push_back({"ORIGINAL", "HARD_VOTE", run.hard.accuracy, run.hard.macro.f1});
  rows.push_back({"ORIGINAL", "SOFT_VOTE", run.soft.accuracy, run.soft.macro.f1});
  rows.push_back({"ORIGINAL", "HYBRID", run.hybrid.accuracy, run.hybrid.macro.f1});
  std::ostringstream comparison;
  write_comparison_csv(comparison, rows, config.seed);
  write_text(config.out_dir / "ensemble_comparison.csv", comparison.str());

  std::ostringstream text;
  text << format_report(run.hybrid, "Hybrid ensemble (seed " + std::to_string(config.seed) + ")");
  text << "Disagreements (hard vs soft): " << run.result.hybrid.disagreements << '\n';
  text << "Weights (" << to_string(config.weights) << "):";
  for (std::size_t m = 0; m < run.weights.size(); ++m)
    text << ' ' << run.member_names[m] << '=' << fixed(run.weights[m], 4);
  text << '\n';
  write_text(config.out_dir / "ensemble_report.txt", text.str());
  return run;
}

// ---------------------------------------------------------------------------
// synth

void write_dataset(const fs::path& dir, const RecordTable& table) {
  ensure_dir(dir);
  for (std::size_t f = 0; f < kCanonicalFiles.size(); ++f) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < table.size(); ++i)
      if (table[i].specific_class == kCanonicalFileClasses[f]) rows.push_back(i);
    write_decimal_csv(dir / std::string(kCanonicalFiles[f]), table.subset(rows));
  }
}

RecordTable cmd_synth(const RunConfig& config) {
  RunConfig c = config;
  if (!c.synth_config) c.synth_config = std::string(kDefaultSynthConfig);
  validate(c);
  RecordTable table = load_input(c);
  write_dataset(c.out_dir, table);
  const SynthConfig synth =
      *c.synth_config == kDefaultSynthConfig ? SynthConfig::defaults() : SynthConfig::load(*c.synth_config);
  write_json(c.out_dir / "synth_config.json", {{"seed", c.seed}, {"config", synth.to_json()}});
  return table;
}

}  // namespace canguard
