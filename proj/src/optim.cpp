#include "stg/optim.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

namespace stg {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate(std::size_t n_train) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (n_train == 0) throw std::invalid_argument("training split is empty");
  if (batch_size > n_train) throw std::invalid_argument("batch_size exceeds the training rows");
  if (mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 &&
        adam.eps > 0.0)) {
    throw std::invalid_argument("bad Adam hyperparameters");
  }
}

void write_trace_csv(const TrainTrace& trace, std::ostream& out) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "epoch,train_loss,valid_loss,reg_value,open_gates\n";
  for (std::size_t e = 0; e < trace.epochs(); ++e) {
    out << (e + 1) << ',' << trace.train_loss[e] << ',';
    if (std::isfinite(trace.valid_loss[e])) out << trace.valid_loss[e];
    out << ',' << trace.reg_value[e] << ',' << trace.open_gates[e] << '\n';
  }
  out.precision(old_precision);
}

DivergenceError::DivergenceError(std::size_t epoch)
    : std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch)),
      epoch_(epoch) {}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size()) throw ShapeError("sgd_step: parameter/gradient size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr, const AdamParams& hp) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient size mismatch");
  if (state.m.empty() && state.t == 0) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state size mismatch");
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(hp.beta1, t);
  const double c2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + hp.eps);
  }
}

NetworkOptimizer::NetworkOptimizer(OptimizerKind kind, double lr, AdamParams hp)
    : kind_(kind), lr_(lr), hp_(hp) {}

void NetworkOptimizer::update(std::size_t slot, std::span<double> params,
                              std::span<const double> grads) {
  if (kind_ == OptimizerKind::sgd) {
    sgd_step(params, grads, lr_);
    return;
  }
  if (states_.size() <= slot) states_.resize(slot + 1);
  adam_step(states_[slot], params, grads, lr_, hp_);
}

void NetworkOptimizer::step(Network& net, const GradientBundle& grads) {
  std::size_t slot = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    update(slot++, net.layers[l].weight.data(), grads.d_weight[l].data());
    if (net.use_bias) update(slot, net.layers[l].bias, grads.d_bias[l]);
    ++slot;
  }
  update(slot, net.gate.mu, grads.d_mu);
}

LossValue data_loss(LossKind kind, const Matrix& output, const Dataset& data) {
  switch (kind) {
    case LossKind::mse:
      if (data.task != TaskKind::regression) throw std::invalid_argument("mse needs regression data");
      return mse(output, data.y);
    case LossKind::cross_entropy:
      if (data.task != TaskKind::classification) {
        throw std::invalid_argument("cross_entropy needs classification data");
      }
      return cross_entropy(output, data.labels);
    case LossKind::cox: {
      if (data.task != TaskKind::survival) throw std::invalid_argument("cox needs survival data");
      const CoxRiskSets risk(data.survival);
      LossValue lv = cox_nll(output, data.survival, risk);
      const double n_events = static_cast<double>(risk.n_events());
      lv.value /= n_events;
      for (double& g : lv.grad.data()) g /= n_events;
      return lv;
    }
  }
  throw std::invalid_argument("unknown loss");
}

namespace {

bool has_events(LossKind kind, const Dataset& d) {
  if (kind != LossKind::cox) return true;
  for (const auto& t : d.survival)
    if (t.event) return true;
  return false;
}

double eval_loss(const Network& net, LossKind kind, const Dataset& d) {
  if (d.n_samples() == 0 || !has_events(kind, d)) return std::numeric_limits<double>::quiet_NaN();
  return data_loss(kind, predict(net, d.x), d).value;
}

void add_into(GradientBundle& acc, const GradientBundle& g) {
  for (std::size_t l = 0; l < acc.d_weight.size(); ++l) {
    auto& w = acc.d_weight[l].data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += g.d_weight[l].data()[i];
    for (std::size_t i = 0; i < acc.d_bias[l].size(); ++i) acc.d_bias[l][i] += g.d_bias[l][i];
  }
  for (std::size_t i = 0; i < acc.d_mu.size(); ++i) acc.d_mu[i] += g.d_mu[i];
}

void scale_bundle(GradientBundle& g, double s) {
  for (auto& m : g.d_weight)
    for (double& v : m.data()) v *= s;
  for (auto& b : g.d_bias)
    for (double& v : b) v *= s;
  for (double& v : g.d_mu) v *= s;
}

}  // namespace

TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg) {
  net.validate();
  const Dataset train_part = data.part(Split::train);
  const Dataset valid_part = data.part(Split::valid);
  cfg.validate(train_part.n_samples());
  if (train_part.n_features() != net.input_dim()) {
    throw ShapeError("train: dataset has " + std::to_string(train_part.n_features()) +
                     " features, network expects " + std::to_string(net.input_dim()));
  }

  const std::size_t n = train_part.n_samples();
  const std::size_t batch = cfg.batch_size == 0 ? n : cfg.batch_size;
  const std::size_t snapshot_every =
      cfg.snapshot_every != 0 ? cfg.snapshot_every : (net.input_dim() <= 1024 ? 1 : 10);
  const bool early_stop = cfg.patience > 0 && valid_part.n_samples() > 0;

  Rng rng(cfg.seed);
  NetworkOptimizer opt(cfg.optimizer, cfg.learning_rate, cfg.adam);
  TrainResult result{net, {}, 0};
  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool full_batch = batch == n;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (!full_batch) rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      const Dataset mb =
          full_batch ? Dataset{}
                     : train_part.subset(std::span<const std::size_t>(order).subspan(start, stop - start));
      const Dataset& b = full_batch ? train_part : mb;
      if (!has_events(cfg.loss, b)) continue;

      GradientBundle acc;
      for (std::size_t k = 0; k < cfg.mc_samples; ++k) {
        const ForwardPass pass = forward(net, b.x, Mode::train, &rng, cfg.per_example_gates);
        const LossValue lv = data_loss(cfg.loss, pass.output(), b);
        if (!std::isfinite(lv.value)) throw DivergenceError(epoch);
        loss_sum += lv.value;
        ++loss_count;
        GradientBundle g = backward(net, pass, lv.grad, cfg.lambda);
        if (k == 0) {
          acc = std::move(g);
        } else {
          add_into(acc, g);
        }
      }
      if (cfg.mc_samples > 1) scale_bundle(acc, 1.0 / static_cast<double>(cfg.mc_samples));
      opt.step(net, acc);
    }

    const double train_loss =
        loss_count ? loss_sum / static_cast<double>(loss_count) : std::numeric_limits<double>::quiet_NaN();
    if (loss_count && !std::isfinite(train_loss)) throw DivergenceError(epoch);
    const Vector zhat = eval_gate(net.gate);
    auto& tr = result.trace;
    tr.train_loss.push_back(train_loss);
    tr.valid_loss.push_back(eval_loss(net, cfg.loss, valid_part));
    tr.reg_value.push_back(regularizer(net.gate).value);
    tr.open_gates.push_back(select_features(zhat, cfg.cutoff).size());
    if (epoch % snapshot_every == 0 || epoch == 1) tr.snapshots.push_back({epoch, zhat});

    if (early_stop) {
      const double v = tr.valid_loss.back();
      if (std::isfinite(v) && v < best_valid) {
        best_valid = v;
        result.net = net;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  }
  if (!early_stop || result.best_epoch == 0) {
    result.net = std::move(net);
    result.best_epoch = result.trace.epochs();
  }
  return result;
}

std::vector<SecondChanceEvent> second_chance_probe(const TrainTrace& trace) {
  std::vector<SecondChanceEvent> events;
  if (trace.snapshots.empty()) return events;
  const std::size_t dim = trace.snapshots.front().zhat.size();
  for (std::size_t d = 0; d < dim; ++d) {
    std::size_t closed_at = 0;
    bool closed = false;
    for (const auto& snap : trace.snapshots) {
      const double v = snap.zhat.at(d);
      if (!closed && v <= 0.0) {
        closed = true;
        closed_at = snap.epoch;
      } else if (closed && v > 0.0) {
        events.push_back({d, closed_at, snap.epoch});
        closed = false;
      }
    }
  }
  return events;
}

}  // namespace stg
