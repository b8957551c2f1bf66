// Acceptance suite: one PASS/FAIL line per criterion. Criterion numbers given
// on the command line restrict the run to those criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "stg/baselines.hpp"
#include "stg/experiment.hpp"

using namespace stg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double metric(const RunReport& r, const std::string& name) {
  const auto it = r.metrics.find(name);
  return it == r.metrics.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

std::vector<const RunReport*> select(const std::vector<RunReport>& reports, const std::string& method,
                                     std::size_t grid_index) {
  std::vector<const RunReport*> out;
  for (const auto& r : reports)
    if (r.method == method && r.grid_index == grid_index) out.push_back(&r);
  return out;
}

std::size_t count_failed(const std::vector<RunReport>& reports) {
  std::size_t n = 0;
  for (const auto& r : reports) n += r.ok ? 0 : 1;
  return n;
}

double mean_metric(const std::vector<const RunReport*>& runs, const std::string& name) {
  double s = 0;
  for (const auto* r : runs) s += metric(*r, name);
  return s / static_cast<double>(runs.size());
}

// Relative error with a floor so that vanishing gradients compare absolutely.
bool grad_close(double analytic, double numeric, double tol) {
  return std::abs(analytic - numeric) <= tol * std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

// Composite Simpson rule.
double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  if (n % 2) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// ---------------------------------------------------------------- criterion 1

Outcome numerical_core() {
  std::size_t bad = 0, checks = 0;
  double worst_cdf = 0.0;
  const auto std_pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
  for (double x = -6.0; x <= 6.0 + 1e-12; x += 0.25) {
    const double oracle = simpson(std_pdf, -14.0, x, 40000);
    worst_cdf = std::max(worst_cdf, std::abs(gauss_cdf(x) - oracle));
  }
  double worst_pdf = 0.0;
  for (double sigma : {0.25, 0.5, 1.0, 2.0}) {
    const auto pdf = [sigma](double t) { return gauss_pdf(t, sigma); };
    const auto second = [sigma](double t) { return t * t * gauss_pdf(t, sigma); };
    worst_pdf = std::max(worst_pdf, std::abs(simpson(pdf, -14 * sigma, 14 * sigma, 40000) - 1.0));
    worst_pdf = std::max(worst_pdf,
                         std::abs(simpson(second, -14 * sigma, 14 * sigma, 40000) - sigma * sigma));
    // The CDF of N(0, σ²) integrates the density.
    for (double x : {-1.0, -0.3, 0.2, 0.9}) {
      worst_pdf = std::max(worst_pdf, std::abs(simpson(pdf, -14 * sigma, x, 40000) - gauss_cdf(x / sigma)));
    }
  }

  Rng rng(2024);
  const double h = 1e-6;
  auto check = [&](double analytic, double numeric) {
    ++checks;
    if (!grad_close(analytic, numeric, 1e-4)) ++bad;
  };

  // Gate pathwise gradients with frozen noise, through f(z) = Σ c_d z_d².
  for (GateKind kind : {GateKind::stg, GateKind::hard_concrete}) {
    for (int c = 0; c < 100; ++c) {
      const std::size_t d = 6;
      GateLayer layer = GateLayer::make(kind, d, 0.0);
      for (double& m : layer.mu) m = rng.uniform(-1.0, 1.5);
      Vector coef(d);
      for (double& v : coef) v = rng.uniform(-2, 2);
      const GateSample s = sample_gate(layer, rng);
      Vector upstream(d);
      for (std::size_t i = 0; i < d; ++i) upstream[i] = 2 * coef[i] * s.z[i];
      const Vector g = gate_param_grad(layer, s, upstream);
      for (std::size_t i = 0; i < d; ++i) {
        const double keep = layer.mu[i];
        auto f = [&](double m) {
          layer.mu[i] = m;
          const GateSample t = gate_from_noise(layer, s.noise);
          double v = 0;
          for (std::size_t j = 0; j < d; ++j) v += coef[j] * t.z[j] * t.z[j];
          return v;
        };
        const double up = f(keep + h), dn = f(keep - h);
        layer.mu[i] = keep;
        const GateSample t0 = gate_from_noise(layer, s.noise);
        const double pre = t0.pre[i];
        if (std::abs(pre) < 1e-3 || std::abs(pre - 1) < 1e-3) continue;
        check(g[i], (up - dn) / (2 * h));
      }
    }
  }

  // Regularizer gradients.
  for (GateKind kind : {GateKind::stg, GateKind::hard_concrete}) {
    for (int c = 0; c < 100; ++c) {
      GateLayer layer = GateLayer::make(kind, 5, 0.0, rng.uniform(0.2, 1.0));
      for (double& m : layer.mu) m = rng.uniform(-3, 3);
      const RegTerm r = regularizer(layer);
      for (std::size_t i = 0; i < 5; ++i) {
        const double keep = layer.mu[i];
        layer.mu[i] = keep + h;
        const double up = regularizer(layer).value;
        layer.mu[i] = keep - h;
        const double dn = regularizer(layer).value;
        layer.mu[i] = keep;
        check(r.grad[i], (up - dn) / (2 * h));
      }
    }
  }

  // Network gradients for every parameter.
  for (int c = 0; c < 100; ++c) {
    NetSpec spec;
    spec.input_dim = 4;
    spec.hidden = {3};
    spec.weight_std = 0.7;
    spec.hidden_activation = c % 2 ? Activation::tanh : Activation::selu;
    spec.gate = c % 3 == 0 ? GateKind::hard_concrete : GateKind::stg;
    Network net = init_network(spec, rng);
    for (auto& l : net.layers)
      for (double& b : l.bias) b = rng.uniform(-0.5, 0.5);
    for (double& m : net.gate.mu) m = rng.uniform(-0.5, 1.5);
    Matrix x(5, 4);
    for (double& v : x.data()) v = rng.gaussian();
    Vector y(5);
    for (double& v : y) v = rng.gaussian();
    const double lambda = rng.uniform(0.0, 2.0);
    const GateSample s = sample_gate(net.gate, rng);
    const ForwardPass pass = forward_with_gates(net, x, {s});
    const GradientBundle g = backward(net, pass, mse(pass.output(), y).grad, lambda);
    auto objective = [&] {
      const ForwardPass p = forward_with_gates(net, x, {gate_from_noise(net.gate, s.noise)});
      return mse(p.output(), y).value + lambda / 4.0 * regularizer(net.gate).value;
    };
    auto fd = [&](double& param, double analytic) {
      const double keep = param;
      param = keep + h;
      const double up = objective();
      param = keep - h;
      const double dn = objective();
      param = keep;
      check(analytic, (up - dn) / (2 * h));
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      for (std::size_t i = 0; i < net.layers[l].weight.size(); ++i)
        fd(net.layers[l].weight.data()[i], g.d_weight[l].data()[i]);
      for (std::size_t i = 0; i < net.layers[l].bias.size(); ++i) fd(net.layers[l].bias[i], g.d_bias[l][i]);
    }
    for (std::size_t d = 0; d < 4; ++d) {
      const double pre = gate_from_noise(net.gate, s.noise).pre[d];
      if (std::abs(pre) < 1e-3 || std::abs(pre - 1) < 1e-3) continue;
      fd(net.gate.mu[d], g.d_mu[d]);
    }
  }

  // Loss gradients with respect to the network output.
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = 6;
    Matrix pred(n, 1), logits(n, 3), scores(n, 1);
    for (double& v : pred.data()) v = rng.gaussian();
    for (double& v : logits.data()) v = 2 * rng.gaussian();
    for (double& v : scores.data()) v = rng.gaussian();
    Vector y(n);
    for (double& v : y) v = rng.gaussian();
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.index(3));
    std::vector<SurvivalTarget> surv(n);
    for (auto& t : surv) t = {static_cast<double>(1 + rng.index(4)), rng.bernoulli(0.7)};
    surv[0].event = true;
    const LossValue lm = mse(pred, y), lc = cross_entropy(logits, labels), lx = cox_nll(scores, surv);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      double& p = pred.data()[i];
      const double keep = p;
      p = keep + h;
      const double up = mse(pred, y).value;
      p = keep - h;
      const double dn = mse(pred, y).value;
      p = keep;
      check(lm.grad.data()[i], (up - dn) / (2 * h));
    }
    for (std::size_t i = 0; i < logits.size(); ++i) {
      double& p = logits.data()[i];
      const double keep = p;
      p = keep + h;
      const double up = cross_entropy(logits, labels).value;
      p = keep - h;
      const double dn = cross_entropy(logits, labels).value;
      p = keep;
      check(lc.grad.data()[i], (up - dn) / (2 * h));
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
      double& p = scores.data()[i];
      const double keep = p;
      p = keep + h;
      const double up = cox_nll(scores, surv).value;
      p = keep - h;
      const double dn = cox_nll(scores, surv).value;
      p = keep;
      check(lx.grad.data()[i], (up - dn) / (2 * h));
    }
  }

  const bool pass = worst_cdf <= 1e-7 && worst_pdf <= 1e-7 && bad == 0;
  return {pass, "max |cdf-oracle|=" + fmt(worst_cdf, 3) + ", max pdf integral error=" + fmt(worst_pdf, 3) +
                    ", gradient mismatches " + std::to_string(bad) + "/" + std::to_string(checks)};
}

// ---------------------------------------------------------------- criterion 2

Outcome regularizer_identity() {
  Rng rng(77);
  const std::size_t draws = 1000000, d = 6;
  std::size_t stg_ok = 0, hc_ok = 0;
  double worst_z = 0.0;
  for (GateKind kind : {GateKind::stg, GateKind::hard_concrete}) {
    for (int v = 0; v < 20; ++v) {
      GateLayer layer = GateLayer::make(kind, d, 0.0);
      for (double& m : layer.mu) m = kind == GateKind::stg ? rng.uniform(-1.0, 1.0) : rng.uniform(-3.0, 3.0);
      const double expected =
          kind == GateKind::stg ? stg_reg(layer).value : [&] {
            double s = 0;
            for (double p : hc_active_prob(layer)) s += p;
            return s;
          }();
      double sum = 0, sum_sq = 0;
      for (std::size_t k = 0; k < draws; ++k) {
        const GateSample s = sample_gate(layer, rng);
        double count = 0;
        for (double z : s.z) count += z > 0 ? 1.0 : 0.0;
        sum += count;
        sum_sq += count * count;
      }
      const double mean = sum / draws;
      const double var = (sum_sq - draws * mean * mean) / (draws - 1);
      const double z = std::abs(mean - expected) / std::sqrt(var / draws);
      worst_z = std::max(worst_z, z);
      if (z <= 3.0) ++(kind == GateKind::stg ? stg_ok : hc_ok);
    }
  }
  return {stg_ok == 20 && hc_ok == 20, "STG within 3 SE " + std::to_string(stg_ok) + "/20, HC " +
                                           std::to_string(hc_ok) + "/20, worst " + fmt(worst_z, 3) + " SE"};
}

// ---------------------------------------------------------------- criterion 3

Outcome xor_benchmark() {
  const ExperimentConfig cfg = preset_config("xor");
  const auto res = run_experiment(cfg, jobs());
  std::size_t acc_ok = 0, set_ok = 0;
  std::vector<double> ranks;
  for (const auto* r : select(res.reports, "stg", 0)) {
    if (!r->ok) continue;
    acc_ok += metric(*r, "accuracy") >= 0.95 ? 1 : 0;
    set_ok += r->selected == IndexSet{0, 1} ? 1 : 0;
    ranks.push_back(metric(*r, "median_rank"));
  }
  const double mr = median(ranks);
  return {acc_ok >= 18 && set_ok >= 18 && mr == 1.5,
          "accuracy>=0.95 in " + std::to_string(acc_ok) + "/20, selected {1,2} in " + std::to_string(set_ok) +
              "/20, median rank " + fmt(mr) + ", failed runs " + std::to_string(count_failed(res.reports))};
}

// ---------------------------------------------------------------- criterion 4

Outcome friedman_benchmark() {
  const ExperimentConfig cfg = preset_config("friedman");
  const auto res = run_experiment(cfg, jobs());
  std::vector<double> f1, ranks, rm, rm_closed;
  for (const auto* r : select(res.reports, "stg", 0)) {
    if (!r->ok) continue;
    f1.push_back(metric(*r, "f1"));
    ranks.push_back(metric(*r, "median_rank"));
    rm.push_back(metric(*r, "rmse"));
    // With every gate closed the best predictor is the training-target mean.
    const Dataset data = make_dataset(cfg, 0.0, data_seed(cfg.seed, r->rep));
    const Dataset tr = data.part(Split::train), te = data.part(Split::test);
    double mean = 0;
    for (double v : tr.y) mean += v;
    mean /= static_cast<double>(tr.y.size());
    rm_closed.push_back(rmse(Vector(te.y.size(), mean), te.y));
  }
  const double mf1 = median(f1), mrank = median(ranks), mrm = median(rm), mclosed = median(rm_closed);
  return {mf1 >= 0.8 && mrank <= 10 && mrm < mclosed,
          "median F1 " + fmt(mf1) + ", median rank " + fmt(mrank) + ", median RMSE " + fmt(mrm) +
              " vs all-closed " + fmt(mclosed) + ", failed runs " + std::to_string(count_failed(res.reports))};
}

// ------------------------------------------------------------ criteria 5 and 6

struct RecoveryCurve {
  std::vector<double> stg, lasso;
  std::size_t failed = 0;
};

RecoveryCurve recovery_curve(const std::string& preset) {
  ExperimentConfig cfg = preset_config(preset);
  cfg.sweep.values = {50, 100, 150, 200, 250};
  cfg.repetitions = 100;
  const auto res = run_experiment(cfg, jobs());
  RecoveryCurve c;
  c.failed = count_failed(res.reports);
  for (std::size_t g = 0; g < cfg.sweep.values.size(); ++g) {
    c.stg.push_back(mean_metric(select(res.reports, "stg", g), "recovery"));
    c.lasso.push_back(mean_metric(select(res.reports, "lasso", g), "recovery"));
  }
  return c;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i], 3);
  return s;
}

Outcome linear_recovery() {
  const RecoveryCurve c = recovery_curve("linreg_recovery");
  bool monotone = true;
  for (std::size_t i = 1; i < c.stg.size(); ++i) monotone = monotone && c.stg[i] >= c.stg[i - 1] - 0.05;
  const bool pass = c.failed == 0 && monotone && c.stg.back() >= 0.9 && c.stg[2] >= c.lasso[2];
  return {pass, "STG P(recovery) at N=50..250: " + join(c.stg) + "; LASSO: " + join(c.lasso)};
}

Outcome correlated_recovery() {
  const RecoveryCurve c = recovery_curve("linreg_correlated");
  return {c.failed == 0 && c.stg[2] >= c.lasso[2],
          "STG P(recovery) at N=50..250: " + join(c.stg) + "; LASSO: " + join(c.lasso)};
}

// ---------------------------------------------------------------- criterion 7

Outcome stability() {
  const ExperimentConfig cfg = preset_config("stability");
  const auto res = run_experiment(cfg, jobs());
  const auto table = stability_table(res.reports);
  // Per method, the grid point whose mean selected-set size lies in [2, 4]
  // and is closest to 3.
  std::map<std::string, const StabilityRow*> chosen;
  for (const auto& row : table) {
    if (row.runs != cfg.repetitions || row.mean_size < 2.0 || row.mean_size > 4.0) continue;
    const auto it = chosen.find(row.method);
    if (it == chosen.end() || std::abs(row.mean_size - 3.0) < std::abs(it->second->mean_size - 3.0)) {
      chosen[row.method] = &row;
    }
  }
  if (!chosen.count("stg") || !chosen.count("hc")) {
    return {false, "no grid point with mean selected size in [2, 4] for both methods"};
  }
  const auto& s = *chosen["stg"];
  const auto& hc = *chosen["hc"];
  const bool pass = s.stats.size_variance <= hc.stats.size_variance && s.stats.mean_jaccard >= hc.stats.mean_jaccard;
  return {pass, "STG lambda " + fmt(s.grid_value) + " (mean size " + fmt(s.mean_size) + "): size variance " +
                    fmt(s.stats.size_variance) + ", Jaccard " + fmt(s.stats.mean_jaccard) + "; HC lambda " +
                    fmt(hc.grid_value) + " (mean size " + fmt(hc.mean_size) + "): size variance " +
                    fmt(hc.stats.size_variance) + ", Jaccard " + fmt(hc.stats.mean_jaccard)};
}

// ---------------------------------------------------------------- criterion 8

Outcome second_chance() {
  ExperimentConfig cfg = preset_config("linreg_recovery");
  cfg.methods = {"stg", "dnc"};
  cfg.sweep.values = {60};
  cfg.repetitions = 20;
  const auto res = run_experiment(cfg, jobs());
  std::size_t stg_events = 0, dnc_events = 0, stg_runs = 0, dnc_clean = 0;
  for (const auto& r : res.reports) {
    if (!r.ok) continue;
    const double ev = metric(r, "second_chance");
    if (r.method == "stg") {
      ++stg_runs;
      stg_events += static_cast<std::size_t>(ev);
    } else {
      dnc_events += static_cast<std::size_t>(ev);
      dnc_clean += ev == 0 ? 1 : 0;
    }
  }
  return {stg_runs == 20 && dnc_clean == 20,
          "STG reopen events " + std::to_string(stg_events) + " over " + std::to_string(stg_runs) +
              " runs; DNC runs without reopen " + std::to_string(dnc_clean) + "/20 (events " +
              std::to_string(dnc_events) + ")"};
}

// ---------------------------------------------------------------- criterion 9

Outcome mi_oracle() {
  const ExperimentConfig cfg = preset_config("mi_oracle");
  std::size_t ok = 0;
  double worst_single = 0.0, pair_bits = 0.0;
  const std::size_t seeds = 3;
  for (std::size_t rep = 0; rep < seeds; ++rep) {
    const Dataset data = make_dataset(cfg, 0.0, data_seed(cfg.seed, rep));
    const MiSubset best = mi_bruteforce(data.x, data.labels, 2);
    pair_bits = best.mi_bits;
    double single = 0.0;
    for (std::size_t j = 0; j < data.n_features(); ++j) {
      single = std::max(single, mutual_information(data.x, data.labels, {j}));
    }
    worst_single = std::max(worst_single, single);
    if (best.subset == IndexSet{0, 1} && std::abs(best.mi_bits - 1.0) <= 0.01 && single <= 0.01) ++ok;
  }
  return {ok == seeds, "best pair {1,2} with 1±0.01 bits in " + std::to_string(ok) + "/" + std::to_string(seeds) +
                           " seeds (last " + fmt(pair_bits, 6) + " bits), max single-feature MI " +
                           fmt(worst_single, 3) + " bits"};
}

// --------------------------------------------------------------- criterion 10

Outcome cox_benchmark() {
  const ExperimentConfig cfg = preset_config("cox_synthetic");
  const auto res = run_experiment(cfg, jobs());
  std::vector<double> ci, good;
  for (const auto* r : select(res.reports, "stg", 0)) {
    if (!r->ok) continue;
    ci.push_back(metric(*r, "c_index"));
    const Dataset data = make_dataset(cfg, 0.0, data_seed(cfg.seed, r->rep));
    const bool superset = std::includes(r->selected.begin(), r->selected.end(), data.informative.begin(),
                                        data.informative.end());
    const std::size_t fp = r->selected.size() - (superset ? data.informative.size() : 0);
    good.push_back(superset && fp <= 2 ? 1.0 : 0.0);
  }

  // Translation invariance and finite differences of the partial likelihood.
  Rng rng(9);
  std::size_t inv_bad = 0, fd_bad = 0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = 8;
    Matrix s(n, 1);
    for (double& v : s.data()) v = rng.gaussian();
    std::vector<SurvivalTarget> t(n);
    for (auto& x : t) x = {static_cast<double>(1 + rng.index(5)), rng.bernoulli(0.6)};
    t[0].event = true;
    const LossValue base = cox_nll(s, t);
    Matrix shifted = s;
    for (double& v : shifted.data()) v += 3.7;
    if (std::abs(cox_nll(shifted, t).value - base.value) > 1e-10 * std::max(1.0, std::abs(base.value))) ++inv_bad;
    for (std::size_t i = 0; i < n; ++i) {
      const double keep = s(i, 0), h = 1e-6;
      s(i, 0) = keep + h;
      const double up = cox_nll(s, t).value;
      s(i, 0) = keep - h;
      const double dn = cox_nll(s, t).value;
      s(i, 0) = keep;
      if (!grad_close(base.grad(i, 0), (up - dn) / (2 * h), 1e-4)) ++fd_bad;
    }
  }
  const double mci = median(ci), mgood = median(good);
  return {ci.size() == cfg.repetitions && mci >= 0.7 && mgood == 1.0 && inv_bad == 0 && fd_bad == 0,
          "median C-index " + fmt(mci) + ", informative covered with <=2 false positives in " +
              std::to_string(static_cast<int>(std::accumulate(good.begin(), good.end(), 0.0))) + "/" +
              std::to_string(good.size()) + " seeds, invariance failures " + std::to_string(inv_bad) +
              ", gradient mismatches " + std::to_string(fd_bad)};
}

// --------------------------------------------------------------- criterion 11

Vector lasso_cd(const Matrix& x, const Vector& y, double alpha) {
  const std::size_t n = x.rows(), d = x.cols();
  Vector theta(d, 0.0), resid = y, col_sq(d, 0.0);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < n; ++i) col_sq[j] += x(i, j) * x(i, j);
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double rho = 0;
      for (std::size_t i = 0; i < n; ++i) rho += x(i, j) * (resid[i] + x(i, j) * theta[j]);
      const double a = std::abs(rho) - alpha * static_cast<double>(n) / 2.0;
      const double t = a > 0 ? std::copysign(a, rho) / col_sq[j] : 0.0;
      const double delta = t - theta[j];
      if (delta != 0)
        for (std::size_t i = 0; i < n; ++i) resid[i] -= x(i, j) * delta;
      theta[j] = t;
      change = std::max(change, std::abs(delta));
    }
    if (change < 1e-15) break;
  }
  return theta;
}

Outcome lasso_oracle() {
  Rng rng(11);
  double worst_gap = 0.0;
  std::size_t null_bad = 0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = 20 + rng.index(40), d = 3 + rng.index(10);
    Matrix x(n, d);
    for (double& v : x.data()) v = rng.gaussian();
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 0.5 * rng.gaussian();
      for (std::size_t j = 0; j < d; ++j) y[i] += (j % 3 == 0 ? 1.0 : 0.0) * x(i, j);
    }
    const double alpha = rng.uniform(0.005, 0.6);
    const double ista = lasso_fit(x, y, alpha).objective;
    const double cd = lasso_objective(x, y, lasso_cd(x, y, alpha), alpha);
    worst_gap = std::max(worst_gap, std::abs(ista - cd));

    double thr = 0;
    for (double v : matvec_t(x, y)) thr = std::max(thr, 2.0 * std::abs(v) / static_cast<double>(n));
    for (double v : lasso_fit(x, y, thr * (1.0 + 0.5 * rng.uniform())).coef) null_bad += v != 0.0 ? 1 : 0;
  }
  return {worst_gap <= 1e-6 && null_bad == 0,
          "max objective gap " + fmt(worst_gap, 3) + ", nonzero coefficients above the KKT threshold " +
              std::to_string(null_bad)};
}

// --------------------------------------------------------------- criterion 12

Outcome lambda_sweep() {
  const ExperimentConfig cfg = preset_config("madelon_like");
  const auto res = run_experiment(cfg, jobs());
  const auto grid = cfg.grid();
  std::vector<double> counts;
  std::size_t exact = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> c, p;
    for (const auto* r : select(res.reports, "stg", g)) {
      if (!r->ok) continue;
      c.push_back(static_cast<double>(r->selected.size()));
      p.push_back(metric(*r, "precision_relevant"));
    }
    counts.push_back(median(c));
    if (median(p) == 1.0 && median(c) > 0) ++exact;
  }
  std::size_t increases = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) increases += counts[i] > counts[i - 1] ? 1 : 0;
  std::string curve;
  for (std::size_t i = 0; i < counts.size(); ++i) curve += (i ? "," : "") + fmt(counts[i]);
  return {increases == 0 && exact > 0 && count_failed(res.reports) == 0,
          "median selected count over the grid: " + curve + "; increases " + std::to_string(increases) +
              "; grid points with precision 1: " + std::to_string(exact)};
}

// --------------------------------------------------------------- criterion 13

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "stg_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    Rng rng(5);
    write_csv(gen_friedman_mod(80, 8, rng), (root / "custom.csv").string());
  }
  std::size_t identical = 0, total = 0;
  std::string mismatched;
  for (const auto& name : experiment_names()) {
    ExperimentConfig cfg = preset_config(name);
    cfg.repetitions = 2;
    cfg.train.epochs = std::min<std::size_t>(cfg.train.epochs, 15);
    if (cfg.sweep.values.size() > 2) cfg.sweep.values.resize(2);
    if (name == "mi_oracle") cfg.data.n = 4000;
    if (name == "custom_csv") cfg.data.csv_path = (root / "custom.csv").string();
    std::string first;
    for (int attempt = 0; attempt < 2; ++attempt) {
      cfg.out_dir = (root / (name + "_" + std::to_string(attempt))).string();
      emit(cfg, run_experiment(cfg, attempt == 0 ? 1 : jobs() + 1));
      const std::string bytes = slurp(fs::path(cfg.out_dir) / "runs.csv");
      if (attempt == 0) {
        first = bytes;
      } else {
        ++total;
        if (bytes == first && !bytes.empty()) {
          ++identical;
        } else {
          mismatched += " " + name;
        }
      }
    }
  }
  fs::remove_all(root);
  return {identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                  " presets byte-identical" + (mismatched.empty() ? "" : "; differ:" + mismatched)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_sec;
  Outcome (*fn)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "numerical core", 60, numerical_core},
      {2, "regularizer identity", 60, regularizer_identity},
      {3, "XOR", 600, xor_benchmark},
      {4, "Friedman variant", 1800, friedman_benchmark},
      {5, "linear support recovery", 1800, linear_recovery},
      {6, "correlated design", 1800, correlated_recovery},
      {7, "selection stability", 900, stability},
      {8, "DNC second chance", 600, second_chance},
      {9, "MI oracle", 60, mi_oracle},
      {10, "Cox-STG", 600, cox_benchmark},
      {11, "LASSO oracle equivalence", 60, lasso_oracle},
      {12, "lambda-sweep monotonicity", 1800, lambda_sweep},
      {13, "end-to-end determinism", 1800, determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_sec;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s [%.1fs of %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_sec, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
