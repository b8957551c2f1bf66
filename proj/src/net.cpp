#include "stg/net.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace stg {

namespace {

constexpr double kSeluScale = 1.0507009873554805;
constexpr double kSeluAlpha = 1.6732632423543772;

double activate(Activation act, double x) {
  switch (act) {
    case Activation::identity:
      return x;
    case Activation::tanh:
      return std::tanh(x);
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::sigmoid:
      return sigmoid(x);
    case Activation::selu:
      return x > 0.0 ? kSeluScale * x : kSeluScale * kSeluAlpha * std::expm1(x);
  }
  return x;
}

// Derivative expressed through the pre-activation and the activation value.
double activate_grad(Activation act, double pre, double post) {
  switch (act) {
    case Activation::identity:
      return 1.0;
    case Activation::tanh:
      return 1.0 - post * post;
    case Activation::relu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid:
      return post * (1.0 - post);
    case Activation::selu:
      return pre > 0.0 ? kSeluScale : post + kSeluScale * kSeluAlpha;
  }
  return 1.0;
}

Matrix gate_inputs(const Matrix& x, const std::vector<GateSample>& gates, bool per_example) {
  if (!per_example) return scale_columns(x, gates.front().z);
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    const auto& z = gates[r].z;
    auto o = out.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) o[c] = xr[c] * z[c];
  }
  return out;
}

}  // namespace

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::identity:
      return "identity";
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::selu:
      return "selu";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "selu") return Activation::selu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

void Network::validate() const {
  if (layers.empty()) throw ShapeError("Network: no layers");
  gate.validate();
  std::size_t width = gate.dim();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weight.rows() != width) {
      throw ShapeError("Network: layer " + std::to_string(l) + " expects " +
                       std::to_string(layer.weight.rows()) + " inputs, got " +
                       std::to_string(width));
    }
    if (layer.bias.size() != layer.weight.cols()) {
      throw ShapeError("Network: layer " + std::to_string(l) + " bias length mismatch");
    }
    width = layer.weight.cols();
  }
}

Network init_network(const NetSpec& spec, Rng& rng) {
  if (spec.input_dim == 0 || spec.output_dim == 0) {
    throw std::invalid_argument("init_network: input and output widths must be positive");
  }
  const double gate_init =
      spec.gate_init.value_or(spec.gate == GateKind::hard_concrete ? 0.0 : 0.5);
  Network net;
  net.gate = GateLayer::make(spec.gate, spec.input_dim, gate_init, spec.sigma, spec.hc);
  net.use_bias = spec.use_bias;
  std::vector<std::size_t> widths{spec.input_dim};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(spec.output_dim);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.weight = Matrix(widths[l], widths[l + 1]);
    for (double& w : layer.weight.data()) w = sample_gaussian(rng, 0.0, spec.weight_std);
    layer.bias = Vector(widths[l + 1], 0.0);
    layer.activation = l + 2 == widths.size() ? spec.output_activation : spec.hidden_activation;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

ForwardPass forward_with_gates(const Network& net, const Matrix& x,
                               std::vector<GateSample> gates) {
  if (x.cols() != net.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(x.cols()) + " columns, network expects " +
                     std::to_string(net.input_dim()));
  }
  const bool per_example = gates.size() != 1;
  if (per_example && gates.size() != x.rows()) {
    throw ShapeError("forward: need one gate sample or one per row");
  }
  for (const auto& g : gates) {
    if (g.z.size() != net.input_dim()) throw ShapeError("forward: gate length mismatch");
  }
  ForwardPass pass;
  pass.input = x;
  pass.per_example = per_example;
  pass.gated = gate_inputs(x, gates, per_example);
  pass.gates = std::move(gates);
  const Matrix* current = &pass.gated;
  for (const auto& layer : net.layers) {
    Matrix pre = matmul(*current, layer.weight);
    if (net.use_bias) {
      for (std::size_t r = 0; r < pre.rows(); ++r) {
        auto row = pre.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
      }
    }
    Matrix post(pre.rows(), pre.cols());
    for (std::size_t i = 0; i < pre.size(); ++i) {
      post.data()[i] = activate(layer.activation, pre.data()[i]);
    }
    pass.pre.push_back(std::move(pre));
    pass.post.push_back(std::move(post));
    current = &pass.post.back();
  }
  return pass;
}

ForwardPass forward(const Network& net, const Matrix& x, Mode mode, Rng* rng, bool per_example) {
  std::vector<GateSample> gates;
  if (mode == Mode::eval) {
    const Vector z = eval_gate(net.gate);
    gates.push_back(GateSample{z, Vector(z.size(), 0.0), z});
  } else {
    if (rng == nullptr) throw UsageError("forward: train mode needs a random stream");
    const std::size_t n = per_example ? x.rows() : 1;
    gates.reserve(n);
    for (std::size_t i = 0; i < n; ++i) gates.push_back(sample_gate(net.gate, *rng));
    // A batch of one row with per-example sampling is the shared case.
  }
  return forward_with_gates(net, x, std::move(gates));
}

Matrix predict(const Network& net, const Matrix& x) {
  return forward(net, x, Mode::eval).post.back();
}

GradientBundle backward(const Network& net, const ForwardPass& pass, const Matrix& d_output,
                        double lambda) {
  if (pass.post.size() != net.layers.size() || pass.gates.empty() ||
      pass.input.cols() != net.input_dim()) {
    throw UsageError("backward: forward pass does not match this network");
  }
  if (d_output.rows() != pass.output().rows() || d_output.cols() != pass.output().cols()) {
    throw ShapeError("backward: output gradient shape mismatch");
  }
  const std::size_t n_layers = net.layers.size();
  GradientBundle g;
  g.d_weight.resize(n_layers);
  g.d_bias.resize(n_layers);

  Matrix delta = d_output;
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = net.layers[l];
    const Matrix& pre = pass.pre[l];
    const Matrix& post = pass.post[l];
    for (std::size_t i = 0; i < delta.size(); ++i) {
      delta.data()[i] *= activate_grad(layer.activation, pre.data()[i], post.data()[i]);
    }
    const Matrix& input = l == 0 ? pass.gated : pass.post[l - 1];
    g.d_weight[l] = matmul_tn(input, delta);
    g.d_bias[l] = Vector(delta.cols(), 0.0);
    if (net.use_bias) {
      for (std::size_t r = 0; r < delta.rows(); ++r) {
        const auto row = delta.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) g.d_bias[l][c] += row[c];
      }
    }
    if (l > 0) delta = matmul_nt(delta, layer.weight);
  }

  // delta now holds ∂L/∂(first-layer pre-activation); the gate gradient only
  // needs ∂L/∂gated_input on coordinates whose gate is not clipped.
  const std::size_t dim = net.input_dim();
  const Matrix& w0 = net.layers.front().weight;
  std::vector<char> needed(dim, 0);
  for (const auto& s : pass.gates)
    for (std::size_t d = 0; d < dim; ++d)
      if (s.pre[d] > 0.0 && s.pre[d] < 1.0) needed[d] = 1;

  auto d_gated = [&](std::size_t r, std::size_t d) {
    const auto dr = delta.row(r);
    const auto wd = w0.row(d);
    double s = 0.0;
    for (std::size_t j = 0; j < dr.size(); ++j) s += dr[j] * wd[j];
    return s;
  };

  g.d_mu = Vector(dim, 0.0);
  if (!pass.per_example) {
    Vector upstream(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
      if (!needed[d]) continue;
      for (std::size_t r = 0; r < pass.input.rows(); ++r) {
        upstream[d] += d_gated(r, d) * pass.input(r, d);
      }
    }
    g.d_mu = gate_param_grad(net.gate, pass.gates.front(), upstream);
  } else {
    Vector upstream(dim);
    for (std::size_t r = 0; r < pass.input.rows(); ++r) {
      for (std::size_t d = 0; d < dim; ++d) {
        upstream[d] = needed[d] ? d_gated(r, d) * pass.input(r, d) : 0.0;
      }
      const Vector gr = gate_param_grad(net.gate, pass.gates[r], upstream);
      for (std::size_t d = 0; d < dim; ++d) g.d_mu[d] += gr[d];
    }
  }

  if (lambda != 0.0) {
    const RegTerm reg = regularizer(net.gate);
    const double scale = lambda / static_cast<double>(dim);
    for (std::size_t d = 0; d < dim; ++d) g.d_mu[d] += scale * reg.grad[d];
  }
  return g;
}

// Checkpoint layout (one token stream, whitespace separated):
//   stg-checkpoint 1
//   gate <kind> <dim> <sigma> <beta> <zeta> <tau>
//   <dim gate parameters>
//   layers <count> <use_bias 0|1>
//   per layer: <in> <out> <activation> <in*out weights, row-major> <out biases>
void save_checkpoint(const Network& net, std::ostream& out) {
  net.validate();
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "stg-checkpoint 1\n";
  out << "gate " << to_string(net.gate.kind) << ' ' << net.gate.dim() << ' ' << net.gate.sigma
      << ' ' << net.gate.hc.beta << ' ' << net.gate.hc.zeta << ' ' << net.gate.hc.tau << '\n';
  for (std::size_t d = 0; d < net.gate.dim(); ++d) out << (d ? " " : "") << net.gate.mu[d];
  out << '\n';
  out << "layers " << net.layers.size() << ' ' << (net.use_bias ? 1 : 0) << '\n';
  for (const auto& layer : net.layers) {
    out << layer.weight.rows() << ' ' << layer.weight.cols() << ' ' << to_string(layer.activation)
        << '\n';
    for (std::size_t i = 0; i < layer.weight.size(); ++i) {
      out << (i ? " " : "") << layer.weight.data()[i];
    }
    out << '\n';
    for (std::size_t i = 0; i < layer.bias.size(); ++i) out << (i ? " " : "") << layer.bias[i];
    out << '\n';
  }
  out.precision(old_precision);
}

Network load_checkpoint(std::istream& in) {
  auto fail = [](const std::string& what) -> void {
    throw std::runtime_error("load_checkpoint: " + what);
  };
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "stg-checkpoint") fail("not a checkpoint");
  if (version != 1) fail("unsupported version " + std::to_string(version));
  Network net;
  std::string kind;
  std::size_t dim = 0;
  in >> tag >> kind >> dim >> net.gate.sigma >> net.gate.hc.beta >> net.gate.hc.zeta >>
      net.gate.hc.tau;
  if (!in || tag != "gate") fail("bad gate header");
  net.gate.kind = parse_gate_kind(kind);
  net.gate.mu.resize(dim);
  for (double& m : net.gate.mu) in >> m;
  std::size_t n_layers = 0;
  int use_bias = 1;
  in >> tag >> n_layers >> use_bias;
  if (!in || tag != "layers") fail("bad layers header");
  net.use_bias = use_bias != 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    std::size_t rows = 0, cols = 0;
    std::string act;
    in >> rows >> cols >> act;
    if (!in) fail("bad layer header at layer " + std::to_string(l));
    DenseLayer layer;
    layer.activation = parse_activation(act);
    layer.weight = Matrix(rows, cols);
    for (double& w : layer.weight.data()) in >> w;
    layer.bias.resize(cols);
    for (double& b : layer.bias) in >> b;
    net.layers.push_back(std::move(layer));
  }
  if (!in) fail("truncated file");
  net.validate();
  return net;
}

void save_checkpoint(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  save_checkpoint(net, out);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Network load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace stg
