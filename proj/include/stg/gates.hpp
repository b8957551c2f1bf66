// Input-feature gates: the Gaussian stochastic gate (STG), the Hard-Concrete
// relaxation (HC) and the deterministic non-convex gate (DNC).
//
// All three keep one real parameter per feature in GateLayer::mu. For STG and
// DNC it is the gate mean μ_d; for HC it is log α_d.
#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "stg/ndcore.hpp"

namespace stg {

enum class GateKind { stg, hard_concrete, dnc };

std::string_view to_string(GateKind kind);
/// Accepts "stg", "hc"/"hard_concrete", "dnc".
GateKind parse_gate_kind(std::string_view name);

/// Stretch interval (tau, zeta) and temperature beta of the Hard-Concrete
/// distribution.
struct HardConcreteParams {
  double beta = 2.0 / 3.0;
  double zeta = 1.1;
  double tau = -0.1;
};

struct GateLayer {
  GateKind kind = GateKind::stg;
  Vector mu;
  double sigma = 0.5;
  HardConcreteParams hc;

  /// A layer of `dim` gates with every parameter set to `init`.
  static GateLayer make(GateKind kind, std::size_t dim, double init, double sigma = 0.5,
                        HardConcreteParams hc = {});

  std::size_t dim() const noexcept { return mu.size(); }
  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// One draw of the gate vector. `noise` is the exogenous draw (ε for STG, u
/// for HC, zero for DNC) and `pre` the value before clipping (μ+ε for STG,
/// the stretched s̄ for HC, μ for DNC); both are kept for gradient replay.
struct GateSample {
  Vector z;
  Vector noise;
  Vector pre;
};

/// Value and gradient (w.r.t. GateLayer::mu) of a regularization term.
struct RegTerm {
  double value = 0.0;
  Vector grad;
};

// --- STG -----------------------------------------------------------------

/// z_d = hard_sigmoid(μ_d + ε_d), ε_d ~ N(0, σ²).
GateSample stg_sample(const GateLayer& layer, Rng& rng);
/// Σ_d Φ(μ_d/σ), the expected number of open gates, and its gradient
/// φ_σ(μ_d). Valid for STG and DNC layers.
RegTerm stg_reg(const GateLayer& layer);
/// upstream_d · 1{0 < μ_d + ε_d < 1}.
Vector stg_grad_mu(const GateSample& sample, std::span<const double> upstream);
/// ẑ_d = hard_sigmoid(μ_d). Valid for STG and DNC layers.
Vector stg_test_gate(const GateLayer& layer);

/// Indices d with zhat_d > cutoff (strict), ascending, zero-based.
std::vector<std::size_t> select_features(std::span<const double> zhat, double cutoff);

// --- Hard-Concrete -------------------------------------------------------

GateSample hc_sample(const GateLayer& layer, Rng& rng);
/// The sampling chain with the uniforms supplied by the caller.
GateSample hc_sample_from_uniform(const GateLayer& layer, std::span<const double> u);
/// upstream_d · ∂z_d/∂log α_d for the given sample.
Vector hc_grad_log_alpha(const GateLayer& layer, const GateSample& sample,
                         std::span<const double> upstream);
/// P(z_d > 0) = sigmoid(log α_d − β·log(−τ/ζ)).
Vector hc_active_prob(const GateLayer& layer);
/// Σ_d hc_active_prob and its gradient w.r.t. log α.
RegTerm hc_reg(const GateLayer& layer);
/// The gate at u = 1/2: clip(sigmoid(log α/β)(ζ−τ)+τ, 0, 1).
Vector hc_test_gate(const GateLayer& layer);

// --- DNC -----------------------------------------------------------------

/// z̃_d = hard_sigmoid(μ_d), no noise.
Vector dnc_gate(const GateLayer& layer);
GateSample dnc_sample(const GateLayer& layer);

// --- Kind dispatch -------------------------------------------------------

GateSample sample_gate(const GateLayer& layer, Rng& rng);
/// Rebuilds a sample from a recorded noise vector and the layer's current
/// parameters (finite-difference checks hold the noise fixed this way).
GateSample gate_from_noise(const GateLayer& layer, std::span<const double> noise);
/// Chain rule through the gate: upstream_d · ∂z_d/∂mu_d for the sample.
Vector gate_param_grad(const GateLayer& layer, const GateSample& sample,
                       std::span<const double> upstream);
/// The ℓ0 surrogate for the layer's kind (unscaled).
RegTerm regularizer(const GateLayer& layer);
/// Deterministic gate used at evaluation time.
Vector eval_gate(const GateLayer& layer);
/// P(z_d > 0) under the layer's gate distribution (1{μ_d > 0} for DNC).
Vector activation_probability(const GateLayer& layer);
/// ∂P(z_d > 0)/∂mu_d (zero for DNC).
Vector activation_probability_grad(const GateLayer& layer);

/// Per-coordinate sample variance (n−1 denominator) of the reparameterized
/// gradient ∂L/∂mu_d over `n_samples` independent gate draws, where
/// loss_grad_at(z) returns ∂L/∂z.
Vector grad_variance_estimate(
    const GateLayer& layer,
    const std::function<Vector(std::span<const double>)>& loss_grad_at, Rng& rng,
    std::size_t n_samples);

}  // namespace stg
