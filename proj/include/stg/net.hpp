// Feedforward network with a gated input layer.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stg/gates.hpp"
#include "stg/ndcore.hpp"

namespace stg {

enum class Activation { identity, tanh, relu, sigmoid, selu };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view name);

struct DenseLayer {
  Matrix weight;  // in × out
  Vector bias;    // out
  Activation activation = Activation::identity;
};

/// Architecture and initialization of a gated network.
struct NetSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 1;
  Activation hidden_activation = Activation::tanh;
  Activation output_activation = Activation::identity;
  bool use_bias = true;
  GateKind gate = GateKind::stg;
  double sigma = 0.5;
  HardConcreteParams hc;
  /// Standard deviation of the N(0, weight_std²) weight initialization.
  double weight_std = 0.1;
  /// Initial gate parameter. Unset means μ = 0.5 for STG/DNC and log α = 0
  /// for HC.
  std::optional<double> gate_init;
};

struct Network {
  std::vector<DenseLayer> layers;
  GateLayer gate;
  bool use_bias = true;

  std::size_t input_dim() const { return gate.dim(); }
  std::size_t output_dim() const { return layers.back().weight.cols(); }
  /// Throws ShapeError when consecutive layers do not chain or the first
  /// layer's width differs from the gate dimension.
  void validate() const;
};

/// Weights ~ N(0, weight_std²), biases 0, every gate parameter at its initial
/// value.
Network init_network(const NetSpec& spec, Rng& rng);

enum class Mode { train, eval };

/// Everything backward() needs from a forward evaluation.
struct ForwardPass {
  Matrix input;
  /// One shared sample, or one per input row when `per_example` is set. Eval
  /// mode stores the deterministic gate here.
  std::vector<GateSample> gates;
  bool per_example = false;
  Matrix gated;
  std::vector<Matrix> pre;   // pre-activations per layer
  std::vector<Matrix> post;  // activations per layer

  const Matrix& output() const { return post.back(); }
};

/// Train mode draws a fresh gate sample from `rng` (one per batch, or one per
/// row when `per_example`); eval mode uses eval_gate() and ignores `rng`.
ForwardPass forward(const Network& net, const Matrix& x, Mode mode, Rng* rng = nullptr,
                    bool per_example = false);
/// Forward pass with explicit gate samples (one shared, or one per row).
ForwardPass forward_with_gates(const Network& net, const Matrix& x,
                               std::vector<GateSample> gates);
/// Eval-mode output.
Matrix predict(const Network& net, const Matrix& x);

struct GradientBundle {
  std::vector<Matrix> d_weight;
  std::vector<Vector> d_bias;
  Vector d_mu;
};

/// Reverse-mode gradient of loss + lambda·(1/D)·regularizer(gate), given the
/// loss gradient w.r.t. the network output. The gate gradient flows through
/// the recorded samples.
GradientBundle backward(const Network& net, const ForwardPass& pass, const Matrix& d_output,
                        double lambda);

/// Plain-text checkpoint, layout documented in docs/FORMATS.md.
void save_checkpoint(const Network& net, std::ostream& out);
Network load_checkpoint(std::istream& in);
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

}  // namespace stg
