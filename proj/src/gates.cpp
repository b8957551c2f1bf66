#include "stg/gates.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stg {

namespace {

void require_kind(const GateLayer& layer, GateKind expected, const char* op) {
  if (layer.kind != expected) {
    throw UsageError(std::string(op) + ": gate kind is " + std::string(to_string(layer.kind)) +
                     ", expected " + std::string(to_string(expected)));
  }
}

void require_mean_gate(const GateLayer& layer, const char* op) {
  if (layer.kind == GateKind::hard_concrete) {
    throw UsageError(std::string(op) + ": not defined for hard_concrete gates");
  }
}

bool interior(double v) { return v > 0.0 && v < 1.0; }

// β·log(−τ/ζ), the shift between log α and the logit of P(z > 0).
double hc_shift(const HardConcreteParams& p) { return p.beta * std::log(-p.tau / p.zeta); }

}  // namespace

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::stg:
      return "stg";
    case GateKind::hard_concrete:
      return "hc";
    case GateKind::dnc:
      return "dnc";
  }
  return "?";
}

GateKind parse_gate_kind(std::string_view name) {
  if (name == "stg") return GateKind::stg;
  if (name == "hc" || name == "hard_concrete") return GateKind::hard_concrete;
  if (name == "dnc") return GateKind::dnc;
  throw std::invalid_argument("unknown gate kind '" + std::string(name) + "'");
}

GateLayer GateLayer::make(GateKind kind, std::size_t dim, double init, double sigma,
                          HardConcreteParams hc) {
  GateLayer layer{kind, Vector(dim, init), sigma, hc};
  layer.validate();
  return layer;
}

void GateLayer::validate() const {
  if (mu.empty()) throw std::invalid_argument("GateLayer: dimension must be >= 1");
  if (kind != GateKind::hard_concrete && !(sigma > 0.0)) {
    throw std::invalid_argument("GateLayer: sigma must be positive");
  }
  if (kind == GateKind::hard_concrete) {
    if (!(hc.tau < 0.0 && hc.zeta > 1.0)) {
      throw std::invalid_argument("GateLayer: hard-concrete needs tau < 0 < 1 < zeta");
    }
    if (!(hc.beta > 0.0 && hc.beta < 1.0)) {
      throw std::invalid_argument("GateLayer: hard-concrete needs 0 < beta < 1");
    }
  }
}

GateSample stg_sample(const GateLayer& layer, Rng& rng) {
  require_kind(layer, GateKind::stg, "stg_sample");
  const std::size_t d = layer.dim();
  GateSample s{Vector(d), Vector(d), Vector(d)};
  for (std::size_t i = 0; i < d; ++i) {
    s.noise[i] = sample_gaussian(rng, 0.0, layer.sigma);
    s.pre[i] = layer.mu[i] + s.noise[i];
    s.z[i] = hard_sigmoid(s.pre[i]);
  }
  return s;
}

RegTerm stg_reg(const GateLayer& layer) {
  require_mean_gate(layer, "stg_reg");
  RegTerm r{0.0, Vector(layer.dim())};
  for (std::size_t i = 0; i < layer.dim(); ++i) {
    r.value += gauss_cdf(layer.mu[i] / layer.sigma);
    r.grad[i] = gauss_pdf(layer.mu[i], layer.sigma);
  }
  return r;
}

Vector stg_grad_mu(const GateSample& sample, std::span<const double> upstream) {
  if (upstream.size() != sample.pre.size()) throw ShapeError("stg_grad_mu: length mismatch");
  Vector g(upstream.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = interior(sample.pre[i]) ? upstream[i] : 0.0;
  return g;
}

Vector stg_test_gate(const GateLayer& layer) {
  require_mean_gate(layer, "stg_test_gate");
  Vector z(layer.dim());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = hard_sigmoid(layer.mu[i]);
  return z;
}

std::vector<std::size_t> select_features(std::span<const double> zhat, double cutoff) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < zhat.size(); ++i)
    if (zhat[i] > cutoff) out.push_back(i);
  return out;
}

GateSample hc_sample_from_uniform(const GateLayer& layer, std::span<const double> u) {
  require_kind(layer, GateKind::hard_concrete, "hc_sample");
  if (u.size() != layer.dim()) throw ShapeError("hc_sample: uniform draw length mismatch");
  const auto& p = layer.hc;
  const std::size_t d = layer.dim();
  GateSample s{Vector(d), Vector(u.begin(), u.end()), Vector(d)};
  for (std::size_t i = 0; i < d; ++i) {
    const double logistic = std::log(u[i]) - std::log1p(-u[i]);
    const double sv = sigmoid((layer.mu[i] + logistic) / p.beta);
    s.pre[i] = sv * (p.zeta - p.tau) + p.tau;
    s.z[i] = std::clamp(s.pre[i], 0.0, 1.0);
  }
  return s;
}

GateSample hc_sample(const GateLayer& layer, Rng& rng) {
  require_kind(layer, GateKind::hard_concrete, "hc_sample");
  Vector u(layer.dim());
  for (double& v : u) v = rng.uniform_open();
  return hc_sample_from_uniform(layer, u);
}

Vector hc_grad_log_alpha(const GateLayer& layer, const GateSample& sample,
                         std::span<const double> upstream) {
  require_kind(layer, GateKind::hard_concrete, "hc_grad_log_alpha");
  if (upstream.size() != layer.dim() || sample.pre.size() != layer.dim()) {
    throw ShapeError("hc_grad_log_alpha: length mismatch");
  }
  const auto& p = layer.hc;
  Vector g(layer.dim(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!interior(sample.pre[i])) continue;
    // s recovered from the stretched value.
    const double s = (sample.pre[i] - p.tau) / (p.zeta - p.tau);
    g[i] = upstream[i] * (p.zeta - p.tau) * s * (1.0 - s) / p.beta;
  }
  return g;
}

Vector hc_active_prob(const GateLayer& layer) {
  require_kind(layer, GateKind::hard_concrete, "hc_active_prob");
  const double shift = hc_shift(layer.hc);
  Vector p(layer.dim());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(layer.mu[i] - shift);
  return p;
}

RegTerm hc_reg(const GateLayer& layer) {
  const Vector p = hc_active_prob(layer);
  RegTerm r{0.0, Vector(p.size())};
  for (std::size_t i = 0; i < p.size(); ++i) {
    r.value += p[i];
    r.grad[i] = p[i] * (1.0 - p[i]);
  }
  return r;
}

Vector hc_test_gate(const GateLayer& layer) {
  require_kind(layer, GateKind::hard_concrete, "hc_test_gate");
  return hc_sample_from_uniform(layer, Vector(layer.dim(), 0.5)).z;
}

Vector dnc_gate(const GateLayer& layer) {
  require_kind(layer, GateKind::dnc, "dnc_gate");
  return stg_test_gate(layer);
}

GateSample dnc_sample(const GateLayer& layer) {
  require_kind(layer, GateKind::dnc, "dnc_sample");
  return GateSample{dnc_gate(layer), Vector(layer.dim(), 0.0), layer.mu};
}

GateSample sample_gate(const GateLayer& layer, Rng& rng) {
  switch (layer.kind) {
    case GateKind::stg:
      return stg_sample(layer, rng);
    case GateKind::hard_concrete:
      return hc_sample(layer, rng);
    case GateKind::dnc:
      return dnc_sample(layer);
  }
  throw UsageError("sample_gate: unknown kind");
}

GateSample gate_from_noise(const GateLayer& layer, std::span<const double> noise) {
  if (noise.size() != layer.dim()) throw ShapeError("gate_from_noise: length mismatch");
  switch (layer.kind) {
    case GateKind::stg: {
      GateSample s{Vector(layer.dim()), Vector(noise.begin(), noise.end()), Vector(layer.dim())};
      for (std::size_t i = 0; i < s.z.size(); ++i) {
        s.pre[i] = layer.mu[i] + noise[i];
        s.z[i] = hard_sigmoid(s.pre[i]);
      }
      return s;
    }
    case GateKind::hard_concrete:
      return hc_sample_from_uniform(layer, noise);
    case GateKind::dnc:
      return dnc_sample(layer);
  }
  throw UsageError("gate_from_noise: unknown kind");
}

Vector gate_param_grad(const GateLayer& layer, const GateSample& sample,
                       std::span<const double> upstream) {
  if (layer.kind == GateKind::hard_concrete) return hc_grad_log_alpha(layer, sample, upstream);
  return stg_grad_mu(sample, upstream);
}

RegTerm regularizer(const GateLayer& layer) {
  return layer.kind == GateKind::hard_concrete ? hc_reg(layer) : stg_reg(layer);
}

Vector eval_gate(const GateLayer& layer) {
  return layer.kind == GateKind::hard_concrete ? hc_test_gate(layer) : stg_test_gate(layer);
}

Vector activation_probability(const GateLayer& layer) {
  switch (layer.kind) {
    case GateKind::hard_concrete:
      return hc_active_prob(layer);
    case GateKind::stg: {
      Vector p(layer.dim());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = gauss_cdf(layer.mu[i] / layer.sigma);
      return p;
    }
    case GateKind::dnc: {
      Vector p(layer.dim());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = layer.mu[i] > 0.0 ? 1.0 : 0.0;
      return p;
    }
  }
  return {};
}

Vector activation_probability_grad(const GateLayer& layer) {
  switch (layer.kind) {
    case GateKind::hard_concrete:
      return hc_reg(layer).grad;
    case GateKind::stg:
      return stg_reg(layer).grad;
    case GateKind::dnc:
      return Vector(layer.dim(), 0.0);
  }
  return {};
}

Vector grad_variance_estimate(
    const GateLayer& layer,
    const std::function<Vector(std::span<const double>)>& loss_grad_at, Rng& rng,
    std::size_t n_samples) {
  if (n_samples < 2) throw std::invalid_argument("grad_variance_estimate: need n_samples >= 2");
  const std::size_t d = layer.dim();
  // Welford accumulation per coordinate.
  Vector mean(d, 0.0), m2(d, 0.0);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const GateSample s = sample_gate(layer, rng);
    const Vector upstream = loss_grad_at(s.z);
    const Vector g = gate_param_grad(layer, s, upstream);
    for (std::size_t i = 0; i < d; ++i) {
      const double delta = g[i] - mean[i];
      mean[i] += delta / static_cast<double>(k + 1);
      m2[i] += delta * (g[i] - mean[i]);
    }
  }
  for (double& v : m2) v /= static_cast<double>(n_samples - 1);
  return m2;
}

}  // namespace stg
