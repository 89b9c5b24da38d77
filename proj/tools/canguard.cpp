#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "canguard/error.hpp"
#include "canguard/pipeline.hpp"

namespace {

using namespace canguard;

struct Options {
  std::string data;
  std::string synth_config;
  std::uint64_t seed = 0;
  double test_fraction = 0.30;
  std::string out = "canguard-out";
  std::vector<std::string> feature_sets;
  std::vector<std::string> models;
  std::string weights = "uniform";
  int workers = 0;
  bool member_predictions = false;
};

RunConfig to_run_config(const Options& o) {
  RunConfig c;
  if (!o.data.empty()) c.data_dir = o.data;
  if (!o.synth_config.empty()) c.synth_config = o.synth_config;
  c.seed = o.seed;
  c.test_fraction = o.test_fraction;
  c.out_dir = o.out;
  c.workers = o.workers;
  c.member_predictions = o.member_predictions;
  if (!o.feature_sets.empty()) {
    c.feature_sets.clear();
    for (const auto& name : o.feature_sets) {
      auto fs = parse_feature_set(name);
      if (!fs) throw ConfigError("unknown feature set '" + name + "' (expected ORIGINAL, PCA, LDA or ANOVA)");
      c.feature_sets.push_back(*fs);
    }
  }
  if (!o.models.empty()) {
    c.models.clear();
    for (const auto& name : o.models) {
      auto f = parse_family(name);
      if (!f) throw ConfigError("unknown model '" + name + "' (expected LOGREG, TREE, FOREST, KNN, SVM_RBF, MLP or CNN1D)");
      c.models.push_back(*f);
    }
  }
  auto mode = parse_weights_mode(o.weights);
  if (!mode) throw ConfigError("unknown weights mode '" + o.weights + "' (expected uniform or validation-f1)");
  c.weights = *mode;
  return c;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, std::string("Directory with the six decimal_*.csv files (default: $") +
                                        kDataDirEnv + ")");
  cmd->add_option("--synth-config", o.synth_config, "Synthetic corpus config JSON, or 'default'");
  cmd->add_option("--seed", o.seed, "Run seed");
  cmd->add_option("--test-fraction", o.test_fraction, "Held-out fraction");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--workers", o.workers, "Worker threads (0: all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"canguard: CAN-bus intrusion detection experiments"};
  app.require_subcommand(1);
  Options o;

  auto* stats = app.add_subcommand("stats", "Class distributions, ID and payload statistics, duplicates");
  auto* bench = app.add_subcommand("benchmark", "Feature set x model comparison");
  auto* ens = app.add_subcommand("ensemble", "Hard, soft and hybrid voting ensemble");
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus in the canonical file layout");
  for (auto* cmd : {stats, bench, ens, synth}) add_common(cmd, o);
  for (auto* cmd : {bench, ens}) {
    cmd->add_option("--feature-sets", o.feature_sets, "Subset of ORIGINAL PCA LDA ANOVA")->delimiter(',');
    cmd->add_option("--models", o.models, "Subset of LOGREG TREE FOREST KNN SVM_RBF MLP CNN1D")->delimiter(',');
  }
  ens->add_option("--weights", o.weights, "Soft-vote weights: uniform or validation-f1");
  ens->add_flag("--member-predictions", o.member_predictions, "Include each member's predictions in ensemble.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorCategory::kArgument);
  }

  try {
    const RunConfig config = to_run_config(o);
    if (stats->parsed()) {
      const auto s = cmd_stats(config);
      std::cout << "records: " << s.duplicates.total_records << ", unique: " << s.duplicates.unique_total << '\n';
    } else if (bench->parsed()) {
      const auto r = cmd_benchmark(config);
      std::cout << "feature_set,model,accuracy,f1_macro\n";
      for (const auto& c : r.cells)
        std::cout << to_string(c.feature_set) << ',' << c.model << ',' << c.report.accuracy << ','
                  << c.report.macro.f1 << '\n';
    } else if (ens->parsed()) {
      const auto r = cmd_ensemble(config);
      std::cout << format_report(r.hybrid, "Hybrid ensemble");
      std::cout << "Disagreements: " << r.result.hybrid.disagreements << '\n';
    } else if (synth->parsed()) {
      const auto table = cmd_synth(config);
      std::cout << "wrote " << table.size() << " records to " << config.out_dir.string() << '\n';
    }
    return EXIT_SUCCESS;
  } catch (const Error& e) {
    std::cerr << "error [" << category_name(e.category()) << "]: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
}
