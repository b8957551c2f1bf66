// Parameter updates and the gated-network training loop.
#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stg/datagen.hpp"
#include "stg/losses.hpp"
#include "stg/net.hpp"

namespace stg {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  LossKind loss = LossKind::mse;
  double lambda = 0.0;
  double learning_rate = 0.1;
  OptimizerKind optimizer = OptimizerKind::sgd;
  AdamParams adam;
  std::size_t epochs = 100;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  /// Selection rule ẑ_d > cutoff.
  double cutoff = 0.0;
  /// Epochs without validation improvement before stopping; 0 disables early
  /// stopping.
  std::size_t patience = 0;
  /// Gate samples averaged per minibatch.
  std::size_t mc_samples = 1;
  bool per_example_gates = false;
  /// ẑ snapshot cadence in epochs; 0 picks 1 for D ≤ 1024 and 10 otherwise.
  std::size_t snapshot_every = 0;

  /// Throws std::invalid_argument when a field is out of range for a
  /// training split of n_train rows.
  void validate(std::size_t n_train) const;
};

struct GateSnapshot {
  std::size_t epoch = 0;
  Vector zhat;
};

/// Per-epoch history; epochs are numbered from 1.
struct TrainTrace {
  std::vector<double> train_loss;
  std::vector<double> valid_loss;  // NaN when there is no validation split
  std::vector<double> reg_value;
  std::vector<std::size_t> open_gates;
  std::vector<GateSnapshot> snapshots;

  std::size_t epochs() const noexcept { return train_loss.size(); }
};

/// CSV columns epoch,train_loss,valid_loss,reg_value,open_gates.
void write_trace_csv(const TrainTrace& trace, std::ostream& out);

/// A non-finite training loss.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(std::size_t epoch);
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// p ← p − lr·g.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

struct AdamState {
  Vector m;
  Vector v;
  std::size_t t = 0;
};

/// One bias-corrected Adam update. A default-constructed state is sized on
/// first use.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr, const AdamParams& hp = {});

/// Applies SGD or Adam to every parameter block of a network.
class NetworkOptimizer {
 public:
  NetworkOptimizer(OptimizerKind kind, double lr, AdamParams hp = {});
  void step(Network& net, const GradientBundle& grads);

 private:
  void update(std::size_t slot, std::span<double> params, std::span<const double> grads);

  OptimizerKind kind_;
  double lr_;
  AdamParams hp_;
  std::vector<AdamState> states_;
};

/// Mean data loss of `output` against the targets of `data` (Cox: negative
/// log partial likelihood divided by the number of events).
LossValue data_loss(LossKind kind, const Matrix& output, const Dataset& data);

struct TrainResult {
  Network net;
  TrainTrace trace;
  /// Epoch whose parameters were returned.
  std::size_t best_epoch = 0;
};

/// Minibatch training of loss + λ·(1/D)·regularizer on the train rows of
/// `data`, with validation rows used for the trace and early stopping. With
/// early stopping the parameters of the best validation epoch are returned.
/// Throws DivergenceError on a non-finite training loss.
TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg);

struct SecondChanceEvent {
  std::size_t feature = 0;
  std::size_t close_epoch = 0;
  std::size_t reopen_epoch = 0;
};

/// Gates whose snapshot reached ẑ = 0 and later became positive again.
std::vector<SecondChanceEvent> second_chance_probe(const TrainTrace& trace);

}  // namespace stg
