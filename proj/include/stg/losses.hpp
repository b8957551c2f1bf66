// Training losses: squared error, softmax cross-entropy and the Cox negative
// log partial likelihood.
#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "stg/ndcore.hpp"

namespace stg {

enum class LossKind { mse, cross_entropy, cox };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct SurvivalTarget {
  double time = 1.0;
  bool event = true;  // false: censored
};

/// Loss value and gradient w.r.t. the predictions, shaped like them.
struct LossValue {
  double value = 0.0;
  Matrix grad;
};

/// mean((pred − target)²) over all entries; grad 2(pred − target)/N.
LossValue mse(const Matrix& pred, std::span<const double> target);
/// Mean softmax cross-entropy of `logits` (N × n_classes) against labels.
LossValue cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Risk-set ordering for the Cox partial likelihood: samples sorted by
/// decreasing time, with tied times grouped so they share one risk set
/// (Breslow).
class CoxRiskSets {
 public:
  explicit CoxRiskSets(std::span<const SurvivalTarget> targets);

  std::size_t size() const noexcept { return order_.size(); }
  std::size_t n_events() const noexcept { return n_events_; }
  /// Sample indices by decreasing time.
  const std::vector<std::size_t>& order() const noexcept { return order_; }
  /// For position p in order(), one past the last position with the same time.
  const std::vector<std::size_t>& group_end() const noexcept { return group_end_; }

 private:
  std::vector<std::size_t> order_;
  std::vector<std::size_t> group_end_;
  std::size_t n_events_ = 0;
};

/// −log Π_{i: event} exp(η_i) / Σ_{j: T_j ≥ T_i} exp(η_j), summed over events,
/// with its exact gradient. `scores` is an N×1 matrix of risk scores η.
/// Throws DegenerateInputError when no event is observed.
LossValue cox_nll(const Matrix& scores, std::span<const SurvivalTarget> targets);
LossValue cox_nll(const Matrix& scores, std::span<const SurvivalTarget> targets,
                  const CoxRiskSets& risk_sets);

}  // namespace stg
