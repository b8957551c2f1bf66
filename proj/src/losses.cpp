#include "stg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace stg {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::mse:
      return "mse";
    case LossKind::cross_entropy:
      return "cross_entropy";
    case LossKind::cox:
      return "cox";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "cross_entropy" || name == "ce") return LossKind::cross_entropy;
  if (name == "cox") return LossKind::cox;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

LossValue mse(const Matrix& pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw ShapeError("mse: " + std::to_string(pred.size()) + " predictions vs " +
                     std::to_string(target.size()) + " targets");
  }
  LossValue out{0.0, Matrix(pred.rows(), pred.cols())};
  if (target.empty()) return out;
  const double n = static_cast<double>(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double r = pred.data()[i] - target[i];
    out.value += r * r;
    out.grad.data()[i] = 2.0 * r / n;
  }
  out.value /= n;
  return out;
}

LossValue cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) throw ShapeError("cross_entropy: label count mismatch");
  const std::size_t k = logits.cols();
  LossValue out{0.0, Matrix(logits.rows(), k)};
  if (labels.empty()) return out;
  const double n = static_cast<double>(labels.size());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                              std::to_string(k) + ")");
    }
    const auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double log_z = mx + std::log(sum);
    out.value += log_z - row[static_cast<std::size_t>(y)];
    auto g = out.grad.row(r);
    for (std::size_t c = 0; c < k; ++c) {
      g[c] = (std::exp(row[c] - log_z) - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) / n;
    }
  }
  out.value /= n;
  return out;
}

CoxRiskSets::CoxRiskSets(std::span<const SurvivalTarget> targets) {
  order_.resize(targets.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return targets[a].time > targets[b].time;
  });
  group_end_.resize(order_.size());
  for (std::size_t p = 0; p < order_.size();) {
    std::size_t q = p;
    while (q < order_.size() && targets[order_[q]].time == targets[order_[p]].time) ++q;
    for (std::size_t i = p; i < q; ++i) group_end_[i] = q;
    p = q;
  }
  for (const auto& t : targets) n_events_ += t.event ? 1 : 0;
}

LossValue cox_nll(const Matrix& scores, std::span<const SurvivalTarget> targets) {
  return cox_nll(scores, targets, CoxRiskSets(targets));
}

LossValue cox_nll(const Matrix& scores, std::span<const SurvivalTarget> targets,
                  const CoxRiskSets& risk_sets) {
  const std::size_t n = targets.size();
  if (scores.size() != n || risk_sets.size() != n) {
    throw ShapeError("cox_nll: score/target length mismatch");
  }
  if (risk_sets.n_events() == 0) {
    throw DegenerateInputError("cox_nll: no uncensored samples");
  }
  const auto& order = risk_sets.order();
  const auto& group_end = risk_sets.group_end();
  const auto& eta = scores.data();
  const double shift = *std::max_element(eta.begin(), eta.end());

  // log Σ_{j in risk set} exp(η_j) for each sorted position; the risk set of
  // position p is every position < group_end[p].
  std::vector<double> log_risk(n);
  double acc = 0.0;
  for (std::size_t p = 0; p < n;) {
    const std::size_t q = group_end[p];
    for (std::size_t i = p; i < q; ++i) acc += std::exp(eta[order[i]] - shift);
    const double lr = shift + std::log(acc);
    for (std::size_t i = p; i < q; ++i) log_risk[i] = lr;
    p = q;
  }

  LossValue out{0.0, Matrix(scores.rows(), scores.cols())};
  // Gradient: −δ_k + Σ_{events i with T_i ≤ T_k} exp(η_k − log_risk_i).
  // Walking from the longest time down, the events with T_i ≤ T_k sit at
  // positions ≥ the start of k's tie group, so accumulate from the back.
  std::vector<double> inv_risk_suffix(n + 1, 0.0);
  for (std::size_t p = n; p-- > 0;) {
    const auto& t = targets[order[p]];
    inv_risk_suffix[p] = inv_risk_suffix[p + 1] + (t.event ? std::exp(shift - log_risk[p]) : 0.0);
  }
  for (std::size_t p = 0; p < n;) {
    const std::size_t q = group_end[p];
    for (std::size_t i = p; i < q; ++i) {
      const std::size_t k = order[i];
      if (targets[k].event) out.value += log_risk[i] - eta[k];
      out.grad.data()[k] = std::exp(eta[k] - shift) * inv_risk_suffix[p] - (targets[k].event ? 1.0 : 0.0);
    }
    p = q;
  }
  return out;
}

}  // namespace stg
