// Experiment configuration, repetition sweeps and CSV reports.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stg/datagen.hpp"
#include "stg/metrics.hpp"
#include "stg/net.hpp"
#include "stg/optim.hpp"

namespace stg {

/// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment names accepted in [experiment] name.
const std::vector<std::string>& experiment_names();

struct DataParams {
  std::size_t n = 1500;
  std::size_t d = 10;
  /// Linear-benchmark noise variance, or the two-moons noise variance.
  double noise_var = 0.25;
  /// Nonzeros of β*; 0 means ⌈0.4·D^0.75⌉.
  std::size_t sparsity = 0;
  std::size_t n_informative = 5;
  std::size_t n_combined = 15;
  std::size_t n_nuisance = 480;
  double flip_frac = 0.01;
  double class_sep = 1.0;
  std::size_t clusters_per_class = 2;
  double feature_noise_std = 1.0;
  double censor_frac = 0.3;
  double effect = 1.0;
  double test_frac = 0.2;
  double valid_frac = 0.1;
  std::string csv_path;
  std::string csv_task = "regression";
  std::string csv_target;
  std::string csv_event;
};

struct ModelParams {
  std::vector<std::size_t> hidden;
  Activation activation = Activation::tanh;
  double sigma = 0.5;
  HardConcreteParams hc;
  double weight_std = 0.1;
  std::optional<double> gate_init;
  bool use_bias = true;
};

struct LassoParams {
  /// In N sweeps α = c·α_N; otherwise α is the grid value (or `alpha`).
  double c = 1.0;
  double alpha = 0.0;
  double tol = 1e-8;
  std::size_t max_iter = 100000;
};

enum class SweepOver { none, lambda, n };

struct SweepParams {
  SweepOver over = SweepOver::none;
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string name = "xor";
  std::vector<std::string> methods{"stg"};
  std::size_t repetitions = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool write_traces = true;
  /// Subset size searched by the "mi" method.
  std::size_t mi_subset_size = 2;
  DataParams data;
  ModelParams model;
  TrainConfig train;
  /// Raw [train.<method>] keys applied on top of [train] for that method.
  std::map<std::string, std::map<std::string, std::string>> train_overrides;
  SweepParams sweep;
  LassoParams lasso;

  /// Grid points; a single point carrying train.lambda when there is no sweep.
  std::vector<double> grid() const;
  /// Training configuration for one method, overrides applied.
  TrainConfig train_for(const std::string& method) const;
  /// Throws ConfigError.
  void validate() const;
};

/// The defaults of a named experiment.
ExperimentConfig preset_config(const std::string& name);

/// INI-style text: [section] headers, key = value lines, '#' or ';'
/// comments. Starts from the preset named in [experiment] name and applies
/// every key on top. Throws ConfigError with the offending line.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
/// The fully resolved configuration in the same grammar; parse_config of the
/// result reproduces it.
std::string echo_config(const ExperimentConfig& cfg);

/// Metric columns of runs.csv, in order.
const std::vector<std::string>& metric_columns();

struct RunReport {
  std::string experiment;
  std::string method;
  std::size_t grid_index = 0;
  double grid_value = 0.0;
  /// λ for gated networks, α for LASSO.
  double lambda = 0.0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  IndexSet selected;  // zero-based
  /// Metrics that apply to the experiment; absent ones are written empty.
  std::map<std::string, double> metrics;
  double runtime_sec = 0.0;
};

/// Seed for one sweep cell: mix of the master seed, the method name hash,
/// the grid index and the repetition.
std::uint64_t run_seed(std::uint64_t master, const std::string& method, std::size_t grid_index,
                       std::size_t rep);
/// Seed of the dataset for one repetition; shared by every method and grid
/// point so methods are compared on the same draws.
std::uint64_t data_seed(std::uint64_t master, std::size_t rep);

/// The dataset of one repetition (grid_value is N in N sweeps).
Dataset make_dataset(const ExperimentConfig& cfg, double grid_value, std::uint64_t seed);

/// One (method, grid point, repetition) cell. Errors are caught and reported
/// in the row.
RunReport run_cell(const ExperimentConfig& cfg, const std::string& method,
                   std::size_t grid_index, std::size_t rep, TrainTrace* trace_out = nullptr);

struct ExperimentResult {
  std::vector<RunReport> reports;
  std::vector<TrainTrace> traces;  // parallel to reports, empty for LASSO/MI
};

/// Every cell in method, grid, repetition order, on up to `jobs` threads.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1);

struct SummaryRow {
  std::string experiment;
  std::string method;
  std::size_t grid_index = 0;
  double grid_value = 0.0;
  std::string metric;
  std::size_t count = 0;
  std::size_t excluded = 0;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
};

/// Per (method, grid point, metric) statistics over successful runs; failed
/// runs are counted in `excluded`. Throws std::invalid_argument when empty.
std::vector<SummaryRow> summarize(const std::vector<RunReport>& reports);

struct StabilityRow {
  std::string method;
  std::size_t grid_index = 0;
  double grid_value = 0.0;
  std::size_t runs = 0;
  Stability stats;
  double mean_size = 0.0;
};
std::vector<StabilityRow> stability_table(const std::vector<RunReport>& reports);

void write_runs_csv(const std::vector<RunReport>& reports, std::ostream& out);
std::vector<RunReport> read_runs_csv(std::istream& in);
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);
void write_stability_csv(const std::vector<StabilityRow>& rows, std::ostream& out);
void write_timing_csv(const std::vector<RunReport>& reports, std::ostream& out);

/// Writes runs.csv, summary.csv, stability.csv, timing.csv, config.echo and
/// traces/ under cfg.out_dir. Each file is written to a temporary name and
/// renamed into place.
void emit(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

/// Shortest text that parses back to the same double; empty for NaN.
std::string format_number(double v);

}  // namespace stg
