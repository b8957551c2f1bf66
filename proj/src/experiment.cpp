#include "stg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "stg/baselines.hpp"

namespace stg {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

std::string_view to_string(SweepOver s) {
  switch (s) {
    case SweepOver::none:
      return "none";
    case SweepOver::lambda:
      return "lambda";
    case SweepOver::n:
      return "n";
  }
  return "?";
}

std::vector<double> log_grid(double start, double stop, std::size_t count) {
  if (count == 0 || !(start > 0.0) || !(stop > 0.0)) {
    throw ConfigError("sweep: log grid needs positive endpoints and count >= 1");
  }
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = start;
    return v;
  }
  const double a = std::log10(start), b = std::log10(stop);
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  v.front() = start;
  v.back() = stop;
  return v;
}

void apply_train_key(TrainConfig& t, const std::string& key, const std::string& v) {
  try {
    if (key == "loss") t.loss = parse_loss_kind(v);
    else if (key == "lambda") t.lambda = to_double(key, v);
    else if (key == "learning_rate") t.learning_rate = to_double(key, v);
    else if (key == "optimizer") t.optimizer = parse_optimizer_kind(v);
    else if (key == "adam_beta1") t.adam.beta1 = to_double(key, v);
    else if (key == "adam_beta2") t.adam.beta2 = to_double(key, v);
    else if (key == "adam_eps") t.adam.eps = to_double(key, v);
    else if (key == "epochs") t.epochs = to_size(key, v);
    else if (key == "batch_size") t.batch_size = to_size(key, v);
    else if (key == "cutoff") t.cutoff = to_double(key, v);
    else if (key == "patience") t.patience = to_size(key, v);
    else if (key == "mc_samples") t.mc_samples = to_size(key, v);
    else if (key == "per_example_gates") t.per_example_gates = to_bool(key, v);
    else if (key == "snapshot_every") t.snapshot_every = to_size(key, v);
    else throw ConfigError("unknown key train." + key);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void echo_train(std::ostream& o, const TrainConfig& t) {
  o << "loss = " << to_string(t.loss) << '\n'
    << "lambda = " << format_number(t.lambda) << '\n'
    << "learning_rate = " << format_number(t.learning_rate) << '\n'
    << "optimizer = " << to_string(t.optimizer) << '\n'
    << "adam_beta1 = " << format_number(t.adam.beta1) << '\n'
    << "adam_beta2 = " << format_number(t.adam.beta2) << '\n'
    << "adam_eps = " << format_number(t.adam.eps) << '\n'
    << "epochs = " << t.epochs << '\n'
    << "batch_size = " << t.batch_size << '\n'
    << "cutoff = " << format_number(t.cutoff) << '\n'
    << "patience = " << t.patience << '\n'
    << "mc_samples = " << t.mc_samples << '\n'
    << "per_example_gates = " << (t.per_example_gates ? "true" : "false") << '\n'
    << "snapshot_every = " << t.snapshot_every << '\n';
}

bool is_gated(const std::string& m) { return m == "stg" || m == "hc" || m == "dnc"; }

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

std::string format_selected(const IndexSet& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ";" : "") + std::to_string(s[i] + 1);
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "xor",       "two_moons",   "friedman",      "madelon_like", "linreg_recovery",
      "linreg_correlated", "stability", "cox_synthetic", "mi_oracle", "custom_csv"};
  return names;
}

std::vector<double> ExperimentConfig::grid() const {
  if (sweep.over == SweepOver::none) return {train.lambda};
  return sweep.values;
}

TrainConfig ExperimentConfig::train_for(const std::string& method) const {
  TrainConfig t = train;
  const auto it = train_overrides.find(method);
  if (it != train_overrides.end())
    for (const auto& [k, v] : it->second) apply_train_key(t, k, v);
  return t;
}

void ExperimentConfig::validate() const {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ConfigError("unknown experiment '" + name + "'");
  }
  if (methods.empty()) throw ConfigError("experiment.methods is empty");
  for (const auto& m : methods) {
    if (!is_gated(m) && m != "lasso" && m != "mi") throw ConfigError("unknown method '" + m + "'");
  }
  for (const auto& [m, keys] : train_overrides) {
    if (!is_gated(m)) throw ConfigError("train." + m + ": not a gated method");
    (void)train_for(m);
  }
  if (repetitions < 1) throw ConfigError("experiment.repetitions must be >= 1");
  if (sweep.over != SweepOver::none && sweep.values.empty()) throw ConfigError("sweep.values is empty");
  for (double v : grid()) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("grid values must be finite and >= 0");
    if (sweep.over == SweepOver::n && (v < 2.0 || v != std::floor(v))) {
      throw ConfigError("sweep over n needs integer values >= 2");
    }
  }
  if (data.d < 1) throw ConfigError("data.d must be >= 1");
  if (data.test_frac < 0.0 || data.test_frac >= 1.0 || data.valid_frac < 0.0 || data.valid_frac >= 1.0) {
    throw ConfigError("data.test_frac and data.valid_frac must lie in [0, 1)");
  }
  if (name == "custom_csv" && data.csv_path.empty()) throw ConfigError("custom_csv needs data.csv_path");
  if (!(model.sigma > 0.0)) throw ConfigError("model.sigma must be > 0");
  if (!(model.weight_std >= 0.0)) throw ConfigError("model.weight_std must be >= 0");
  const auto& hc = model.hc;
  if (!(hc.tau < 0.0 && hc.zeta > 1.0 && hc.beta > 0.0 && hc.beta < 1.0)) {
    throw ConfigError("model.hc_* must satisfy tau < 0 < 1 < zeta and 0 < beta < 1");
  }
  for (std::size_t h : model.hidden)
    if (h == 0) throw ConfigError("model.hidden widths must be >= 1");
  for (const auto& m : methods) {
    if (!is_gated(m)) continue;
    const TrainConfig t = train_for(m);
    if (!(t.lambda >= 0.0) || !(t.learning_rate > 0.0) || t.epochs < 1 || t.mc_samples < 1) {
      throw ConfigError("train." + m + ": lambda >= 0, learning_rate > 0, epochs >= 1 and mc_samples >= 1 required");
    }
  }
  if (std::find(methods.begin(), methods.end(), "mi") != methods.end() &&
      (mi_subset_size < 1 || mi_subset_size > 4)) {
    throw ConfigError("experiment.mi_subset_size must lie in [1, 4]");
  }
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  auto& d = c.data;
  auto& m = c.model;
  auto& t = c.train;
  t.optimizer = OptimizerKind::adam;
  t.learning_rate = 0.05;
  if (name == "xor" || name == "stability" || name == "two_moons") {
    d.n = 1500;
    d.d = name == "stability" ? 20 : 10;
    d.noise_var = 0.1;
    m.hidden = {16, 8};
    m.weight_std = 0.3;
    t.loss = LossKind::cross_entropy;
    t.learning_rate = 0.01;
    t.lambda = 0.05;
    t.epochs = 600;
    c.repetitions = 20;
    if (name == "stability") {
      c.methods = {"stg", "hc"};
      c.write_traces = false;
      c.sweep.over = SweepOver::lambda;
      c.sweep.values = log_grid(0.03, 0.3, 10);
    }
  } else if (name == "friedman") {
    d.n = 600;
    d.d = 500;
    m.hidden = {32, 16};
    t.loss = LossKind::mse;
    t.learning_rate = 0.005;
    t.batch_size = 64;
    t.lambda = 1.0;
    t.epochs = 800;
    c.repetitions = 20;
  } else if (name == "madelon_like") {
    d.n = 1500;
    d.d = 500;
    d.test_frac = 0.2;
    d.valid_frac = 0.1;
    m.hidden = {16};
    t.loss = LossKind::cross_entropy;
    t.epochs = 1000;
    c.repetitions = 5;
    c.sweep.over = SweepOver::lambda;
    c.sweep.values = log_grid(0.01, 10.0, 20);
    c.write_traces = false;
  } else if (name == "linreg_recovery" || name == "linreg_correlated") {
    d.d = 64;
    d.noise_var = 0.25;
    m.hidden = {};
    m.activation = Activation::identity;
    t.loss = LossKind::mse;
    t.lambda = 0.5;
    t.epochs = 400;
    c.methods = {"stg", "lasso"};
    c.repetitions = 200;
    c.sweep.over = SweepOver::n;
    for (double n = 10; n <= 250; n += 20) c.sweep.values.push_back(n);
    c.write_traces = false;
  } else if (name == "cox_synthetic") {
    d.n = 1000;
    d.d = 20;
    d.n_informative = 2;
    d.censor_frac = 0.3;
    d.test_frac = 0.2;
    d.valid_frac = 0.2;
    m.hidden = {};
    m.activation = Activation::selu;
    t.loss = LossKind::cox;
    t.lambda = 1.0;
    t.epochs = 400;
    c.repetitions = 5;
  } else if (name == "mi_oracle") {
    d.n = 100000;
    d.d = 6;
    c.methods = {"mi"};
    c.write_traces = false;
  } else if (name == "custom_csv") {
    m.hidden = {16};
    t.loss = LossKind::mse;
    t.epochs = 300;
  } else {
    throw ConfigError("unknown experiment '" + name + "'");
  }
  return c;
}

ExperimentConfig parse_config(std::istream& in) {
  struct Entry {
    std::string section, key, value;
    std::size_t line;
  };
  std::vector<Entry> entries;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cpos = line.find_first_of("#;");
    if (cpos != std::string::npos) line.erase(cpos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside a section");
    entries.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no});
  }

  std::string name;
  for (const auto& e : entries)
    if (e.section == "experiment" && e.key == "name") name = e.value;
  if (name.empty()) throw ConfigError("missing [experiment] name");
  ExperimentConfig c = preset_config(name);

  std::optional<double> log_start, log_stop;
  std::optional<std::size_t> log_count;
  bool values_given = false;
  for (const auto& e : entries) {
    const std::string& k = e.key;
    const std::string& v = e.value;
    try {
      if (e.section == "experiment") {
        if (k == "name") continue;
        if (k == "methods") c.methods = split_list(v);
        else if (k == "repetitions") c.repetitions = to_size(k, v);
        else if (k == "seed") c.seed = to_u64(k, v);
        else if (k == "out") c.out_dir = v;
        else if (k == "write_traces") c.write_traces = to_bool(k, v);
        else if (k == "mi_subset_size") c.mi_subset_size = to_size(k, v);
        else throw ConfigError("unknown key experiment." + k);
      } else if (e.section == "data") {
        auto& d = c.data;
        if (k == "n") d.n = to_size(k, v);
        else if (k == "d") d.d = to_size(k, v);
        else if (k == "noise_var") d.noise_var = to_double(k, v);
        else if (k == "sparsity") d.sparsity = to_size(k, v);
        else if (k == "n_informative") d.n_informative = to_size(k, v);
        else if (k == "n_combined") d.n_combined = to_size(k, v);
        else if (k == "n_nuisance") d.n_nuisance = to_size(k, v);
        else if (k == "flip_frac") d.flip_frac = to_double(k, v);
        else if (k == "class_sep") d.class_sep = to_double(k, v);
        else if (k == "clusters_per_class") d.clusters_per_class = to_size(k, v);
        else if (k == "feature_noise_std") d.feature_noise_std = to_double(k, v);
        else if (k == "censor_frac") d.censor_frac = to_double(k, v);
        else if (k == "effect") d.effect = to_double(k, v);
        else if (k == "test_frac") d.test_frac = to_double(k, v);
        else if (k == "valid_frac") d.valid_frac = to_double(k, v);
        else if (k == "csv_path") d.csv_path = v;
        else if (k == "csv_task") d.csv_task = v;
        else if (k == "csv_target") d.csv_target = v;
        else if (k == "csv_event") d.csv_event = v;
        else throw ConfigError("unknown key data." + k);
      } else if (e.section == "model") {
        auto& m = c.model;
        if (k == "hidden") {
          m.hidden.clear();
          for (const auto& w : split_list(v)) m.hidden.push_back(to_size(k, w));
        } else if (k == "activation") m.activation = parse_activation(v);
        else if (k == "sigma") m.sigma = to_double(k, v);
        else if (k == "hc_beta") m.hc.beta = to_double(k, v);
        else if (k == "hc_zeta") m.hc.zeta = to_double(k, v);
        else if (k == "hc_tau") m.hc.tau = to_double(k, v);
        else if (k == "weight_std") m.weight_std = to_double(k, v);
        else if (k == "gate_init") {
          if (v == "default") m.gate_init.reset();
          else m.gate_init = to_double(k, v);
        } else if (k == "use_bias") m.use_bias = to_bool(k, v);
        else throw ConfigError("unknown key model." + k);
      } else if (e.section == "train") {
        apply_train_key(c.train, k, v);
      } else if (e.section.rfind("train.", 0) == 0) {
        const std::string method = e.section.substr(6);
        TrainConfig probe;
        apply_train_key(probe, k, v);
        c.train_overrides[method][k] = v;
      } else if (e.section == "sweep") {
        if (k == "over") {
          if (v == "none") c.sweep.over = SweepOver::none;
          else if (v == "lambda") c.sweep.over = SweepOver::lambda;
          else if (v == "n") c.sweep.over = SweepOver::n;
          else throw ConfigError("sweep.over must be none, lambda or n");
        } else if (k == "values") {
          c.sweep.values.clear();
          for (const auto& w : split_list(v)) c.sweep.values.push_back(to_double(k, w));
          values_given = true;
        } else if (k == "log_start") log_start = to_double(k, v);
        else if (k == "log_stop") log_stop = to_double(k, v);
        else if (k == "log_count") log_count = to_size(k, v);
        else throw ConfigError("unknown key sweep." + k);
      } else if (e.section == "lasso") {
        if (k == "c") c.lasso.c = to_double(k, v);
        else if (k == "alpha") c.lasso.alpha = to_double(k, v);
        else if (k == "tol") c.lasso.tol = to_double(k, v);
        else if (k == "max_iter") c.lasso.max_iter = to_size(k, v);
        else throw ConfigError("unknown key lasso." + k);
      } else {
        throw ConfigError("unknown section [" + e.section + "]");
      }
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
    } catch (const std::invalid_argument& err) {
      throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
    }
  }
  if (log_start || log_stop || log_count) {
    if (!(log_start && log_stop && log_count)) {
      throw ConfigError("sweep: log_start, log_stop and log_count go together");
    }
    if (values_given) throw ConfigError("sweep: give either values or a log grid");
    c.sweep.values = log_grid(*log_start, *log_stop, *log_count);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in);
}

std::string echo_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[experiment]\n"
    << "name = " << c.name << '\n'
    << "methods = ";
  for (std::size_t i = 0; i < c.methods.size(); ++i) o << (i ? ", " : "") << c.methods[i];
  o << '\n'
    << "repetitions = " << c.repetitions << '\n'
    << "seed = " << c.seed << '\n'
    << "out = " << c.out_dir << '\n'
    << "write_traces = " << (c.write_traces ? "true" : "false") << '\n'
    << "mi_subset_size = " << c.mi_subset_size << "\n\n";
  const auto& d = c.data;
  o << "[data]\n"
    << "n = " << d.n << '\n'
    << "d = " << d.d << '\n'
    << "noise_var = " << format_number(d.noise_var) << '\n'
    << "sparsity = " << d.sparsity << '\n'
    << "n_informative = " << d.n_informative << '\n'
    << "n_combined = " << d.n_combined << '\n'
    << "n_nuisance = " << d.n_nuisance << '\n'
    << "flip_frac = " << format_number(d.flip_frac) << '\n'
    << "class_sep = " << format_number(d.class_sep) << '\n'
    << "clusters_per_class = " << d.clusters_per_class << '\n'
    << "feature_noise_std = " << format_number(d.feature_noise_std) << '\n'
    << "censor_frac = " << format_number(d.censor_frac) << '\n'
    << "effect = " << format_number(d.effect) << '\n'
    << "test_frac = " << format_number(d.test_frac) << '\n'
    << "valid_frac = " << format_number(d.valid_frac) << '\n'
    << "csv_path = " << d.csv_path << '\n'
    << "csv_task = " << d.csv_task << '\n'
    << "csv_target = " << d.csv_target << '\n'
    << "csv_event = " << d.csv_event << "\n\n";
  const auto& m = c.model;
  o << "[model]\n"
    << "hidden = " << join_sizes(m.hidden) << '\n'
    << "activation = " << to_string(m.activation) << '\n'
    << "sigma = " << format_number(m.sigma) << '\n'
    << "hc_beta = " << format_number(m.hc.beta) << '\n'
    << "hc_zeta = " << format_number(m.hc.zeta) << '\n'
    << "hc_tau = " << format_number(m.hc.tau) << '\n'
    << "weight_std = " << format_number(m.weight_std) << '\n'
    << "gate_init = " << (m.gate_init ? format_number(*m.gate_init) : "default") << '\n'
    << "use_bias = " << (m.use_bias ? "true" : "false") << "\n\n";
  o << "[train]\n";
  echo_train(o, c.train);
  for (const auto& [method, keys] : c.train_overrides) {
    o << "\n[train." << method << "]\n";
    for (const auto& [k, v] : keys) o << k << " = " << v << '\n';
  }
  o << "\n[sweep]\n"
    << "over = " << to_string(c.sweep.over) << '\n'
    << "values = " << join_numbers(c.sweep.values) << "\n\n";
  o << "[lasso]\n"
    << "c = " << format_number(c.lasso.c) << '\n'
    << "alpha = " << format_number(c.lasso.alpha) << '\n'
    << "tol = " << format_number(c.lasso.tol) << '\n'
    << "max_iter = " << c.lasso.max_iter << '\n';
  return o.str();
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{
      "accuracy",  "rmse",     "c_index", "precision",  "precision_relevant", "recall",
      "f1",        "median_rank", "ifwr", "recovery",   "mi_bits",            "train_loss",
      "valid_loss", "epochs",  "second_chance"};
  return cols;
}

std::uint64_t run_seed(std::uint64_t master, const std::string& method, std::size_t grid_index,
                       std::size_t rep) {
  return mix_seed(mix_seed(mix_seed(master, hash_name(method)), grid_index), rep);
}

std::uint64_t data_seed(std::uint64_t master, std::size_t rep) {
  return mix_seed(mix_seed(master, hash_name("data")), rep);
}

Dataset make_dataset(const ExperimentConfig& cfg, double grid_value, std::uint64_t seed) {
  Rng rng(seed);
  const auto& p = cfg.data;
  const std::size_t n =
      cfg.sweep.over == SweepOver::n ? static_cast<std::size_t>(grid_value) : p.n;
  const std::string& e = cfg.name;
  if (e == "xor" || e == "stability" || e == "mi_oracle") return gen_xor(n, p.d, rng);
  if (e == "two_moons") return gen_two_moons(n, p.d, rng, p.noise_var);
  if (e == "friedman") return gen_friedman_mod(n, p.d, rng);
  if (e == "madelon_like") {
    MadelonParams mp;
    mp.n_samples = n;
    mp.n_informative = p.n_informative;
    mp.n_combined = p.n_combined;
    mp.n_nuisance = p.n_nuisance;
    mp.flip_frac = p.flip_frac;
    mp.class_sep = p.class_sep;
    mp.clusters_per_class = p.clusters_per_class;
    mp.feature_noise_std = p.feature_noise_std;
    mp.test_frac = p.test_frac;
    mp.valid_frac = p.valid_frac;
    return gen_madelon_like(mp, rng);
  }
  if (e == "linreg_recovery" || e == "linreg_correlated") {
    std::optional<std::size_t> k;
    if (p.sparsity != 0) k = p.sparsity;
    return gen_sparse_linear(n, p.d, e == "linreg_correlated", p.noise_var, rng, k).data;
  }
  if (e == "cox_synthetic") {
    SurvivalParams sp;
    sp.n_samples = n;
    sp.n_features = p.d;
    sp.n_informative = p.n_informative;
    sp.censor_frac = p.censor_frac;
    sp.effect = p.effect;
    sp.test_frac = p.test_frac;
    sp.valid_frac = p.valid_frac;
    return gen_survival(sp, rng);
  }
  if (e == "custom_csv") {
    CsvSchema schema{parse_task_kind(p.csv_task), p.csv_target, p.csv_event};
    Dataset data = load_csv(p.csv_path, schema);
    assign_split(data, p.test_frac, p.valid_frac, rng);
    return data;
  }
  throw ConfigError("unknown experiment '" + e + "'");
}

namespace {

GateKind gate_of(const std::string& method) {
  if (method == "hc") return GateKind::hard_concrete;
  if (method == "dnc") return GateKind::dnc;
  return GateKind::stg;
}

std::size_t effective_sparsity(const ExperimentConfig& cfg) {
  return cfg.data.sparsity != 0 ? cfg.data.sparsity : default_sparsity(cfg.data.d);
}

/// Rows used for the reported prediction metrics: test, else valid, else
/// train.
Dataset eval_part(const Dataset& data) {
  for (Split s : {Split::test, Split::valid, Split::train}) {
    const auto rows = data.rows_of(s);
    if (!rows.empty()) return data.subset(rows);
  }
  return data;
}

void selection_metrics(RunReport& r, const Dataset& data, std::span<const double> rank_weights,
                       std::span<const double> ifwr_weights) {
  if (data.informative.empty()) return;
  const auto s = selection_f1(r.selected, data.informative, data.n_features());
  r.metrics["precision"] = s.precision;
  r.metrics["recall"] = s.recall;
  r.metrics["f1"] = s.f1;
  if (!data.weakly_relevant.empty()) {
    IndexSet relevant = data.informative;
    relevant.insert(relevant.end(), data.weakly_relevant.begin(), data.weakly_relevant.end());
    std::sort(relevant.begin(), relevant.end());
    r.metrics["precision_relevant"] =
        selection_f1(r.selected, relevant, data.n_features()).precision;
  }
  r.metrics["median_rank"] = median_rank(rank_weights, data.informative);
  double total = 0.0;
  for (double w : ifwr_weights) total += w;
  if (total > 0.0) r.metrics["ifwr"] = ifwr(ifwr_weights, data.informative);
  r.metrics["recovery"] = support_recovery(r.selected, data.informative);
}

void run_gated(const ExperimentConfig& cfg, RunReport& r, const Dataset& data, double grid_value,
               TrainTrace* trace_out) {
  TrainConfig tc = cfg.train_for(r.method);
  if (cfg.sweep.over == SweepOver::lambda) {
    tc.lambda = grid_value;
  } else if (cfg.sweep.over == SweepOver::n) {
    // C·α_N on the scale of Σ Φ(μ_d/σ); backward() applies λ/D.
    tc.lambda *= alpha_schedule(static_cast<std::size_t>(grid_value), data.n_features(),
                                effective_sparsity(cfg), cfg.data.noise_var) *
                 static_cast<double>(data.n_features());
  }
  r.lambda = tc.lambda;
  tc.seed = mix_seed(r.seed, 2);

  NetSpec spec;
  spec.input_dim = data.n_features();
  spec.hidden = cfg.model.hidden;
  spec.output_dim = tc.loss == LossKind::cross_entropy ? static_cast<std::size_t>(data.n_classes) : 1;
  spec.hidden_activation = cfg.model.activation;
  spec.output_activation = Activation::identity;
  spec.use_bias = cfg.model.use_bias;
  spec.gate = gate_of(r.method);
  spec.sigma = cfg.model.sigma;
  spec.hc = cfg.model.hc;
  spec.weight_std = cfg.model.weight_std;
  spec.gate_init = cfg.model.gate_init;
  Rng init_rng(mix_seed(r.seed, 1));
  TrainResult res = train(init_network(spec, init_rng), data, tc);

  const Network& net = res.net;
  const Dataset test = eval_part(data);
  const Matrix out = predict(net, test.x);
  switch (data.task) {
    case TaskKind::regression:
      r.metrics["rmse"] = rmse(out.data(), test.y);
      break;
    case TaskKind::classification:
      r.metrics["accuracy"] = accuracy(argmax_rows(out), test.labels);
      break;
    case TaskKind::survival:
      r.metrics["c_index"] = concordance_index(out.data(), test.survival);
      break;
  }
  const Vector zhat = eval_gate(net.gate);
  r.selected = select_features(zhat, tc.cutoff);
  selection_metrics(r, data, net.gate.mu, zhat);
  const auto& tr = res.trace;
  r.metrics["train_loss"] = tr.train_loss.back();
  if (std::isfinite(tr.valid_loss.back())) r.metrics["valid_loss"] = tr.valid_loss.back();
  r.metrics["epochs"] = static_cast<double>(tr.epochs());
  r.metrics["second_chance"] = static_cast<double>(second_chance_probe(tr).size());
  if (trace_out) *trace_out = res.trace;
}

void run_lasso(const ExperimentConfig& cfg, RunReport& r, const Dataset& data, double grid_value) {
  if (data.task != TaskKind::regression) throw std::invalid_argument("lasso needs regression data");
  double alpha = cfg.lasso.alpha;
  if (cfg.sweep.over == SweepOver::lambda) {
    alpha = grid_value;
  } else if (cfg.sweep.over == SweepOver::n) {
    alpha = cfg.lasso.c * alpha_schedule(static_cast<std::size_t>(grid_value), data.n_features(),
                                         effective_sparsity(cfg), cfg.data.noise_var);
  }
  r.lambda = alpha;
  const Dataset tr = data.part(Split::train);
  const LassoResult fit = lasso_fit(tr.x, tr.y, alpha, cfg.lasso.tol, cfg.lasso.max_iter);
  const Dataset test = eval_part(data);
  r.metrics["rmse"] = rmse(matvec(test.x, fit.coef), test.y);
  r.metrics["train_loss"] = fit.objective;
  r.metrics["epochs"] = static_cast<double>(fit.iterations);
  r.selected = lasso_support(fit.coef);
  Vector w(fit.coef.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::abs(fit.coef[i]);
  selection_metrics(r, data, w, w);
}

void run_mi(const ExperimentConfig& cfg, RunReport& r, const Dataset& data) {
  if (data.task != TaskKind::classification) throw std::invalid_argument("mi needs class labels");
  const MiSubset best = mi_bruteforce(data.x, data.labels, cfg.mi_subset_size);
  r.selected = best.subset;
  r.metrics["mi_bits"] = best.mi_bits;
  if (!data.informative.empty()) {
    const auto s = selection_f1(r.selected, data.informative, data.n_features());
    r.metrics["precision"] = s.precision;
    r.metrics["recall"] = s.recall;
    r.metrics["f1"] = s.f1;
    r.metrics["recovery"] = support_recovery(r.selected, data.informative);
  }
}

}  // namespace

RunReport run_cell(const ExperimentConfig& cfg, const std::string& method, std::size_t grid_index,
                   std::size_t rep, TrainTrace* trace_out) {
  RunReport r;
  r.experiment = cfg.name;
  r.method = method;
  r.grid_index = grid_index;
  r.rep = rep;
  r.seed = run_seed(cfg.seed, method, grid_index, rep);
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto grid = cfg.grid();
    r.grid_value = grid.at(grid_index);
    r.lambda = r.grid_value;
    const Dataset data = make_dataset(cfg, r.grid_value, data_seed(cfg.seed, rep));
    if (is_gated(method)) {
      run_gated(cfg, r, data, r.grid_value, trace_out);
    } else if (method == "lasso") {
      run_lasso(cfg, r, data, r.grid_value);
    } else if (method == "mi") {
      run_mi(cfg, r, data);
    } else {
      throw ConfigError("unknown method '" + method + "'");
    }
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = sanitize(e.what());
    r.metrics.clear();
    r.selected.clear();
  }
  r.runtime_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t jobs) {
  cfg.validate();
  struct Cell {
    std::string method;
    std::size_t grid_index, rep;
  };
  std::vector<Cell> cells;
  const std::size_t n_grid = cfg.grid().size();
  for (const auto& m : cfg.methods)
    for (std::size_t g = 0; g < n_grid; ++g)
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) cells.push_back({m, g, rep});

  ExperimentResult res;
  res.reports.resize(cells.size());
  res.traces.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      res.reports[i] = run_cell(cfg, cells[i].method, cells[i].grid_index, cells[i].rep,
                                cfg.write_traces ? &res.traces[i] : nullptr);
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return res;
}

std::vector<SummaryRow> summarize(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("summarize: no reports");
  using Key = std::tuple<std::string, std::string, std::size_t>;
  std::vector<Key> order;
  std::map<Key, std::vector<const RunReport*>> groups;
  for (const auto& r : reports) {
    const Key k{r.experiment, r.method, r.grid_index};
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&r);
  }
  std::vector<std::string> metrics{"n_selected"};
  metrics.insert(metrics.end(), metric_columns().begin(), metric_columns().end());

  std::vector<SummaryRow> rows;
  for (const auto& k : order) {
    const auto& g = groups[k];
    std::size_t excluded = 0;
    for (const auto* r : g) excluded += r->ok ? 0 : 1;
    for (const auto& metric : metrics) {
      std::vector<double> v;
      for (const auto* r : g) {
        if (!r->ok) continue;
        if (metric == "n_selected") {
          v.push_back(static_cast<double>(r->selected.size()));
        } else if (const auto it = r->metrics.find(metric); it != r->metrics.end()) {
          v.push_back(it->second);
        }
      }
      if (v.empty() && metric != "n_selected") continue;
      SummaryRow s;
      s.experiment = std::get<0>(k);
      s.method = std::get<1>(k);
      s.grid_index = std::get<2>(k);
      s.grid_value = g.front()->grid_value;
      s.metric = metric;
      s.count = v.size();
      s.excluded = excluded;
      if (v.empty()) {
        s.mean = s.median = s.std = kNaN;
      } else {
        s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size() / 2;
        s.median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      }
      rows.push_back(std::move(s));
    }
  }
  return rows;
}

std::vector<StabilityRow> stability_table(const std::vector<RunReport>& reports) {
  std::vector<std::pair<std::string, std::size_t>> order;
  std::map<std::pair<std::string, std::size_t>, std::vector<const RunReport*>> groups;
  for (const auto& r : reports) {
    if (!r.ok) continue;
    const auto k = std::make_pair(r.method, r.grid_index);
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&r);
  }
  std::vector<StabilityRow> rows;
  for (const auto& k : order) {
    const auto& g = groups[k];
    if (g.size() < 2) continue;
    std::vector<IndexSet> sets;
    double size_sum = 0.0;
    for (const auto* r : g) {
      sets.push_back(r->selected);
      size_sum += static_cast<double>(r->selected.size());
    }
    StabilityRow row;
    row.method = k.first;
    row.grid_index = k.second;
    row.grid_value = g.front()->grid_value;
    row.runs = g.size();
    row.stats = selection_stability(sets);
    row.mean_size = size_sum / static_cast<double>(g.size());
    rows.push_back(row);
  }
  return rows;
}

void write_runs_csv(const std::vector<RunReport>& reports, std::ostream& out) {
  out << "experiment,method,grid_index,grid_value,lambda,rep,seed,status,n_selected,selected";
  for (const auto& m : metric_columns()) out << ',' << m;
  out << ",error\n";
  for (const auto& r : reports) {
    out << r.experiment << ',' << r.method << ',' << r.grid_index << ','
        << format_number(r.grid_value) << ',' << format_number(r.lambda) << ',' << r.rep << ','
        << r.seed << ',' << (r.ok ? "ok" : "failed") << ',' << r.selected.size() << ','
        << format_selected(r.selected);
    for (const auto& m : metric_columns()) {
      out << ',';
      if (const auto it = r.metrics.find(m); it != r.metrics.end()) out << format_number(it->second);
    }
    out << ',' << sanitize(r.error) << '\n';
  }
}

std::vector<RunReport> read_runs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("runs.csv: missing header");
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(trim(cell));
  }
  auto col = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("runs.csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_exp = col("experiment"), c_method = col("method"), c_gi = col("grid_index"),
                    c_gv = col("grid_value"), c_lambda = col("lambda"), c_rep = col("rep"),
                    c_seed = col("seed"), c_status = col("status"), c_sel = col("selected");
  std::vector<std::pair<std::string, std::size_t>> metric_cols;
  for (const auto& m : metric_columns()) {
    const auto it = std::find(header.begin(), header.end(), m);
    if (it != header.end()) metric_cols.emplace_back(m, static_cast<std::size_t>(it - header.begin()));
  }
  const auto err_it = std::find(header.begin(), header.end(), "error");

  std::vector<RunReport> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const auto next = line.find(',', pos);
      cells.push_back(trim(line.substr(pos, next == std::string::npos ? std::string::npos : next - pos)));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (cells.size() != header.size()) {
      throw std::runtime_error("runs.csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " cells");
    }
    try {
      RunReport r;
      r.experiment = cells[c_exp];
      r.method = cells[c_method];
      r.grid_index = to_size("grid_index", cells[c_gi]);
      r.grid_value = to_double("grid_value", cells[c_gv]);
      r.lambda = cells[c_lambda].empty() ? kNaN : to_double("lambda", cells[c_lambda]);
      r.rep = to_size("rep", cells[c_rep]);
      r.seed = to_u64("seed", cells[c_seed]);
      r.ok = cells[c_status] == "ok";
      for (const auto& s : split_list(cells[c_sel], ';')) {
        const std::size_t one_based = to_size("selected", s);
        if (one_based == 0) throw ConfigError("selected: indices are 1-based");
        r.selected.push_back(one_based - 1);
      }
      for (const auto& [m, c] : metric_cols)
        if (!cells[c].empty()) r.metrics[m] = to_double(m, cells[c]);
      if (err_it != header.end()) r.error = cells[static_cast<std::size_t>(err_it - header.begin())];
      out.push_back(std::move(r));
    } catch (const ConfigError& e) {
      throw std::runtime_error("runs.csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "experiment,method,grid_index,grid_value,metric,count,excluded,mean,median,std\n";
  for (const auto& s : rows) {
    out << s.experiment << ',' << s.method << ',' << s.grid_index << ',' << format_number(s.grid_value)
        << ',' << s.metric << ',' << s.count << ',' << s.excluded << ',' << format_number(s.mean)
        << ',' << format_number(s.median) << ',' << format_number(s.std) << '\n';
  }
}

void write_stability_csv(const std::vector<StabilityRow>& rows, std::ostream& out) {
  out << "method,grid_index,grid_value,runs,mean_size,size_variance,union_size,mean_jaccard\n";
  for (const auto& s : rows) {
    out << s.method << ',' << s.grid_index << ',' << format_number(s.grid_value) << ',' << s.runs
        << ',' << format_number(s.mean_size) << ',' << format_number(s.stats.size_variance) << ','
        << s.stats.union_size << ',' << format_number(s.stats.mean_jaccard) << '\n';
  }
}

void write_timing_csv(const std::vector<RunReport>& reports, std::ostream& out) {
  out << "method,grid_index,rep,runtime_sec\n";
  for (const auto& r : reports) {
    out << r.method << ',' << r.grid_index << ',' << r.rep << ',' << format_number(r.runtime_sec)
        << '\n';
  }
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

void emit(const ExperimentConfig& cfg, const ExperimentResult& result) {
  const fs::path dir(cfg.out_dir);
  auto render = [](auto&& fn) {
    std::ostringstream o;
    fn(o);
    return o.str();
  };
  write_file_atomic((dir / "runs.csv").string(),
                    render([&](std::ostream& o) { write_runs_csv(result.reports, o); }));
  bool any_ok = false;
  for (const auto& r : result.reports) any_ok = any_ok || r.ok;
  write_file_atomic((dir / "summary.csv").string(), render([&](std::ostream& o) {
                      if (!result.reports.empty()) write_summary_csv(summarize(result.reports), o);
                    }));
  if (any_ok) {
    write_file_atomic((dir / "stability.csv").string(), render([&](std::ostream& o) {
                        write_stability_csv(stability_table(result.reports), o);
                      }));
  }
  write_file_atomic((dir / "timing.csv").string(),
                    render([&](std::ostream& o) { write_timing_csv(result.reports, o); }));
  write_file_atomic((dir / "config.echo").string(), echo_config(cfg));
  if (cfg.write_traces) {
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
      const auto& r = result.reports[i];
      if (i >= result.traces.size() || result.traces[i].epochs() == 0) continue;
      const std::string name = r.method + "_g" + std::to_string(r.grid_index) + "_r" +
                               std::to_string(r.rep) + ".csv";
      write_file_atomic((dir / "traces" / name).string(),
                        render([&](std::ostream& o) { write_trace_csv(result.traces[i], o); }));
    }
  }
}

}  // namespace stg
