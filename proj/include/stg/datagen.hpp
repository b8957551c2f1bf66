// Datasets and the seeded synthetic benchmark generators.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stg/losses.hpp"
#include "stg/ndcore.hpp"

namespace stg {

enum class TaskKind { regression, classification, survival };
enum class Split : std::uint8_t { train, valid, test };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

struct Dataset {
  Matrix x;
  TaskKind task = TaskKind::regression;
  Vector y;                              // regression targets
  std::vector<int> labels;               // classification labels in [0, n_classes)
  int n_classes = 0;
  std::vector<SurvivalTarget> survival;  // survival targets
  /// Ground-truth informative features, zero-based, ascending. Empty for
  /// user-supplied data.
  std::vector<std::size_t> informative;
  /// Features carrying signal only through the informative ones (e.g. the
  /// linear combinations of the MADELON-like generator).
  std::vector<std::size_t> weakly_relevant;
  /// One tag per row; every row is train when no split was assigned.
  std::vector<Split> split;
  /// Generator constants (normalization shifts, class separation, ...).
  std::map<std::string, double> meta;

  std::size_t n_samples() const noexcept { return x.rows(); }
  std::size_t n_features() const noexcept { return x.cols(); }

  /// Row indices carrying the given tag, ascending.
  std::vector<std::size_t> rows_of(Split s) const;
  /// The selected rows (targets and tags follow; feature metadata is kept).
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset part(Split s) const { return subset(rows_of(s)); }
  /// Drops feature columns; informative indices are remapped and features
  /// not kept are removed from them.
  Dataset select_features(std::span<const std::size_t> cols) const;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Tags rows with a random permutation: the first round(test_frac·N) rows of
/// the permutation become test, then round(valid_frac·remaining) valid, the
/// rest train.
void assign_split(Dataset& data, double test_frac, double valid_frac_of_rest, Rng& rng);
/// Exact split sizes instead of fractions.
void assign_split_counts(Dataset& data, std::size_t n_train, std::size_t n_valid,
                         std::size_t n_test, Rng& rng);

/// k = ⌈0.4·D^0.75⌉, the sparsity level of the linear benchmark.
std::size_t default_sparsity(std::size_t n_features);

/// y = x₁ XOR x₂ on fair Bernoulli bits. Split: 70% test, 10% of the rest
/// validation.
Dataset gen_xor(std::size_t n, std::size_t d, Rng& rng);

/// Two interleaved half circles in coordinates 1-2 with N(0, noise_var)
/// noise, nuisance N(0,1) elsewhere. Same split as gen_xor.
Dataset gen_two_moons(std::size_t n, std::size_t d, Rng& rng, double noise_var = 0.1);

/// Raw response 10·sin(x₁x₂)² + 20·x₃² + 10·sign(x₄x₅ − 0.2) for ξ = 0.
double friedman_mod_response(std::span<const double> x);
/// x ~ U[0,1]^D, y = friedman_mod_response + N(0,1), centered and divided by
/// max|y − ȳ|. meta: "y_shift", "y_scale". Split 450/50/100 scaled to N.
Dataset gen_friedman_mod(std::size_t n, std::size_t d, Rng& rng);

struct MadelonParams {
  std::size_t n_samples = 1500;
  std::size_t n_informative = 5;
  std::size_t n_combined = 15;
  std::size_t n_nuisance = 480;
  double flip_frac = 0.01;
  /// Cluster centers sit at ±class_sep on each informative axis.
  double class_sep = 1.0;
  std::size_t clusters_per_class = 2;
  /// Standard deviation of the noise added to every informative and combined
  /// feature.
  double feature_noise_std = 1.0;
  double test_frac = 0.0;
  double valid_frac = 0.1;
};

/// MADELON-style classification data. Columns: informative, then combined,
/// then nuisance. meta: "flipped" (label flips made).
Dataset gen_madelon_like(const MadelonParams& params, Rng& rng);

struct SparseLinear {
  Dataset data;
  Vector beta_star;
};

/// y = Xβ* + w, w ~ N(0, noise_var). Rows i.i.d. N(0, I), or N(0, Σ) with
/// Σ_ij = 0.3^|i−j| when `correlated`. β* has `k` nonzeros (default
/// default_sparsity(D)) of value ±1 at uniformly drawn positions. All rows are
/// train.
SparseLinear gen_sparse_linear(std::size_t n, std::size_t d, bool correlated, double noise_var,
                               Rng& rng, std::optional<std::size_t> k = std::nullopt);
/// Σ_ij = rho^|i−j|.
Matrix toeplitz_covariance(std::size_t d, double rho = 0.3);

struct SurvivalParams {
  std::size_t n_samples = 1000;
  std::size_t n_features = 20;
  std::size_t n_informative = 2;
  double censor_frac = 0.3;
  /// Magnitude of the nonzero log-hazard coefficients (random signs).
  double effect = 1.0;
  double test_frac = 0.2;
  double valid_frac = 0.2;
};

/// Proportional hazards with exponential baseline: T ~ Exp(exp(θᵀx)),
/// independent Exp(c) censoring with c tuned so the expected censored
/// fraction matches censor_frac. meta: "censor_rate", "censored_fraction".
Dataset gen_survival(const SurvivalParams& params, Rng& rng);
/// The log-hazard coefficients used by gen_survival for a given dataset are
/// stored in meta as "theta_<index>".
Vector survival_theta(const Dataset& data);

/// CSV layout: header row, one sample per line, targets in the final
/// column(s) unless named. Survival data has two target columns time,event.
struct CsvSchema {
  TaskKind task = TaskKind::regression;
  /// Target column name; empty means the last column (last two for survival).
  std::string target;
  /// Survival event column name; empty means the column after `target`.
  std::string event;
};

/// Parse errors carry the 1-based line number.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t line);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);
Dataset read_csv(std::istream& in, const CsvSchema& schema);
/// Writes features then targets; feature columns are named x1..xD.
void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::string& path);

}  // namespace stg
