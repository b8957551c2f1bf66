// Command-line front end: run experiments, summarize runs.csv, write datasets.
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "stg/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

void print_summary(const std::vector<stg::SummaryRow>& rows, std::ostream& out) {
  static const std::vector<std::string> shown{"n_selected", "accuracy", "rmse", "c_index", "f1",
                                              "median_rank", "recovery", "mi_bits", "precision_relevant"};
  out << std::left << std::setw(8) << "method" << std::setw(12) << "grid" << std::setw(14)
      << "metric" << std::setw(8) << "count" << std::setw(12) << "mean" << std::setw(12)
      << "median" << "std\n";
  for (const auto& r : rows) {
    if (std::find(shown.begin(), shown.end(), r.metric) == shown.end()) continue;
    out << std::left << std::setw(8) << r.method << std::setw(12) << std::setprecision(4) << r.grid_value
        << std::setw(20) << r.metric << std::setw(8) << r.count << std::setw(12)
        << std::setprecision(5) << r.mean << std::setw(12) << r.median << r.std << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature selection with stochastic gates: experiment runner"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t jobs = 1;
  std::string preset;

  auto* run = app.add_subcommand("run", "Run an experiment from a config file or a preset");
  std::string config_path;
  run->add_option("config", config_path, "Config file");
  run->add_option("--preset", preset, "Run a named preset instead of a config file");
  run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--out", out, "Output directory (overrides the config)");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* sum = app.add_subcommand("summarize", "Summarize a runs.csv file");
  std::string runs_path;
  std::string sum_out;
  sum->add_option("runs", runs_path, "runs.csv path")->required();
  sum->add_option("--out", sum_out, "Where to write summary.csv (default: next to runs.csv)");

  auto* gen = app.add_subcommand("datagen", "Write the dataset of a preset as CSV");
  std::string gen_preset;
  std::string gen_out;
  std::size_t gen_rep = 0;
  gen->add_option("name", gen_preset, "Experiment preset name");
  gen->add_option("--preset", preset, "Same as the positional preset");
  gen->add_option("--out", gen_out, "Output CSV path")->required();
  gen->add_option("--seed", seed, "Master seed");
  gen->add_option("--rep", gen_rep, "Repetition index whose dataset is written");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      stg::ExperimentConfig cfg;
      if (!config_path.empty() && !preset.empty()) {
        throw stg::ConfigError("give either a config file or --preset, not both");
      }
      if (!config_path.empty()) {
        cfg = stg::load_config(config_path);
      } else if (!preset.empty()) {
        cfg = stg::preset_config(preset);
      } else {
        throw stg::ConfigError("run needs a config file or --preset");
      }
      if (seed) cfg.seed = *seed;
      if (!out.empty()) {
        cfg.out_dir = out;
      } else if (const char* env = std::getenv("STG_OUT_DIR"); env && *env) {
        cfg.out_dir = env;
      }
      cfg.validate();
      const auto result = stg::run_experiment(cfg, jobs);
      stg::emit(cfg, result);
      std::size_t failed = 0;
      for (const auto& r : result.reports) failed += r.ok ? 0 : 1;
      print_summary(stg::summarize(result.reports), std::cout);
      std::cout << result.reports.size() << " runs, " << failed << " failed, written to "
                << cfg.out_dir << '\n';
      if (failed == result.reports.size()) {
        std::cerr << "error: every run failed; first error: " << result.reports.front().error << '\n';
        return kRuntimeError;
      }
      return kOk;
    }
    if (*sum) {
      std::ifstream in(runs_path);
      if (!in) throw std::runtime_error("cannot open " + runs_path);
      const auto reports = stg::read_runs_csv(in);
      const auto rows = stg::summarize(reports);
      std::ostringstream csv;
      stg::write_summary_csv(rows, csv);
      std::string target = sum_out;
      if (target.empty()) {
        const auto parent = std::filesystem::path(runs_path).parent_path();
        target = (parent / "summary.csv").string();
      }
      stg::write_file_atomic(target, csv.str());
      print_summary(rows, std::cout);
      return kOk;
    }
    if (*gen) {
      if (gen_preset.empty()) gen_preset = preset;
      if (gen_preset.empty()) throw stg::ConfigError("datagen needs a preset name");
      stg::ExperimentConfig cfg = stg::preset_config(gen_preset);
      if (seed) cfg.seed = *seed;
      const double grid_value = cfg.sweep.over == stg::SweepOver::n ? cfg.sweep.values.front() : 0.0;
      const stg::Dataset data = stg::make_dataset(cfg, grid_value, stg::data_seed(cfg.seed, gen_rep));
      std::ostringstream csv;
      stg::write_csv(data, csv);
      stg::write_file_atomic(gen_out, csv.str());
      std::cout << data.n_samples() << " rows, " << data.n_features() << " features";
      if (!data.informative.empty()) {
        std::cout << ", informative:";
        for (auto i : data.informative) std::cout << ' ' << (i + 1);
      }
      std::cout << '\n';
      return kOk;
    }
  } catch (const stg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}
