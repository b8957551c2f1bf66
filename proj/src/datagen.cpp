#include "stg/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace stg {

namespace {

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  rng.shuffle(p);
  return p;
}

/// First k entries of a random permutation of [0, n), sorted.
std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, Rng& rng) {
  auto p = random_permutation(n, rng);
  p.resize(k);
  std::sort(p.begin(), p.end());
  return p;
}

std::size_t round_count(double v) { return static_cast<std::size_t>(std::llround(v)); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string_view rest = line;
  while (true) {
    const auto pos = rest.find(',');
    out.push_back(trim(rest.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return out;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::regression:
      return "regression";
    case TaskKind::classification:
      return "classification";
    case TaskKind::survival:
      return "survival";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "regression") return TaskKind::regression;
  if (name == "classification") return TaskKind::classification;
  if (name == "survival") return TaskKind::survival;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

std::vector<std::size_t> Dataset::rows_of(Split s) const {
  std::vector<std::size_t> rows;
  if (split.empty()) {
    if (s == Split::train) {
      rows.resize(n_samples());
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    return rows;
  }
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) rows.push_back(i);
  return rows;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = x.select_rows(rows);
  out.task = task;
  out.n_classes = n_classes;
  out.informative = informative;
  out.weakly_relevant = weakly_relevant;
  out.meta = meta;
  for (std::size_t r : rows) {
    if (!y.empty()) out.y.push_back(y[r]);
    if (!labels.empty()) out.labels.push_back(labels[r]);
    if (!survival.empty()) out.survival.push_back(survival[r]);
    if (!split.empty()) out.split.push_back(split[r]);
  }
  return out;
}

Dataset Dataset::select_features(std::span<const std::size_t> cols) const {
  Dataset out = *this;
  out.x = x.select_cols(cols);
  auto remap = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> mapped;
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (std::find(idx.begin(), idx.end(), cols[j]) != idx.end()) mapped.push_back(j);
    return mapped;
  };
  out.informative = remap(informative);
  out.weakly_relevant = remap(weakly_relevant);
  return out;
}

void Dataset::validate() const {
  const std::size_t n = n_samples();
  if (x.size() != n * n_features()) throw std::invalid_argument("Dataset: bad matrix");
  switch (task) {
    case TaskKind::regression:
      if (y.size() != n) throw std::invalid_argument("Dataset: target count mismatch");
      break;
    case TaskKind::classification:
      if (labels.size() != n) throw std::invalid_argument("Dataset: label count mismatch");
      for (int l : labels)
        if (l < 0 || l >= n_classes) throw std::invalid_argument("Dataset: label out of range");
      break;
    case TaskKind::survival:
      if (survival.size() != n) throw std::invalid_argument("Dataset: target count mismatch");
      for (const auto& t : survival)
        if (!(t.time > 0.0)) throw std::invalid_argument("Dataset: survival time must be > 0");
      break;
  }
  for (std::size_t i : informative)
    if (i >= n_features()) throw std::invalid_argument("Dataset: informative index out of range");
  if (!split.empty() && split.size() != n) {
    throw std::invalid_argument("Dataset: split tags do not cover every row");
  }
}

void assign_split_counts(Dataset& data, std::size_t n_train, std::size_t n_valid,
                         std::size_t n_test, Rng& rng) {
  const std::size_t n = data.n_samples();
  if (n_train + n_valid + n_test != n) {
    throw std::invalid_argument("assign_split: split sizes do not add up to N");
  }
  const auto perm = random_permutation(n, rng);
  data.split.assign(n, Split::train);
  for (std::size_t i = 0; i < n_test; ++i) data.split[perm[i]] = Split::test;
  for (std::size_t i = n_test; i < n_test + n_valid; ++i) data.split[perm[i]] = Split::valid;
}

void assign_split(Dataset& data, double test_frac, double valid_frac_of_rest, Rng& rng) {
  if (test_frac < 0.0 || test_frac > 1.0 || valid_frac_of_rest < 0.0 || valid_frac_of_rest > 1.0) {
    throw std::invalid_argument("assign_split: fractions must lie in [0, 1]");
  }
  const std::size_t n = data.n_samples();
  const std::size_t n_test = round_count(test_frac * static_cast<double>(n));
  const std::size_t n_valid = round_count(valid_frac_of_rest * static_cast<double>(n - n_test));
  assign_split_counts(data, n - n_test - n_valid, n_valid, n_test, rng);
}

std::size_t default_sparsity(std::size_t n_features) {
  return static_cast<std::size_t>(std::ceil(0.4 * std::pow(static_cast<double>(n_features), 0.75)));
}

Dataset gen_xor(std::size_t n, std::size_t d, Rng& rng) {
  if (d < 2) throw std::invalid_argument("gen_xor: need at least 2 features");
  Dataset data;
  data.task = TaskKind::classification;
  data.n_classes = 2;
  data.x = Matrix(n, d);
  data.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) data.x(r, c) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    data.labels[r] = (data.x(r, 0) != data.x(r, 1)) ? 1 : 0;
  }
  data.informative = {0, 1};
  assign_split(data, 0.7, 0.1, rng);
  return data;
}

Dataset gen_two_moons(std::size_t n, std::size_t d, Rng& rng, double noise_var) {
  if (d < 2) throw std::invalid_argument("gen_two_moons: need at least 2 features");
  if (noise_var < 0.0) throw std::invalid_argument("gen_two_moons: negative noise variance");
  const double noise_std = std::sqrt(noise_var);
  Dataset data;
  data.task = TaskKind::classification;
  data.n_classes = 2;
  data.x = Matrix(n, d);
  data.labels.resize(n);
  const std::size_t n_upper = (n + 1) / 2;
  for (std::size_t r = 0; r < n; ++r) {
    const double t = rng.uniform(0.0, std::numbers::pi);
    const bool upper = r < n_upper;
    const double cx = upper ? std::cos(t) : 1.0 - std::cos(t);
    const double cy = upper ? std::sin(t) : 0.5 - std::sin(t);
    data.x(r, 0) = cx + sample_gaussian(rng, 0.0, noise_std);
    data.x(r, 1) = cy + sample_gaussian(rng, 0.0, noise_std);
    for (std::size_t c = 2; c < d; ++c) data.x(r, c) = rng.gaussian();
    data.labels[r] = upper ? 0 : 1;
  }
  data.informative = {0, 1};
  assign_split(data, 0.7, 0.1, rng);
  return data;
}

double friedman_mod_response(std::span<const double> x) {
  if (x.size() < 5) throw std::invalid_argument("friedman_mod_response: need 5 features");
  const double s = std::sin(x[0] * x[1]);
  const double v = x[3] * x[4] - 0.2;
  const double sign = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return 10.0 * s * s + 20.0 * x[2] * x[2] + 10.0 * sign;
}

Dataset gen_friedman_mod(std::size_t n, std::size_t d, Rng& rng) {
  if (d < 5) throw std::invalid_argument("gen_friedman_mod: need at least 5 features");
  Dataset data;
  data.task = TaskKind::regression;
  data.x = Matrix(n, d);
  data.y.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) data.x(r, c) = rng.uniform();
    data.y[r] = friedman_mod_response(data.x.row(r)) + rng.gaussian();
  }
  const double mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(n);
  double scale = 0.0;
  for (double& v : data.y) {
    v -= mean;
    scale = std::max(scale, std::abs(v));
  }
  if (scale > 0.0)
    for (double& v : data.y) v /= scale;
  data.meta["y_shift"] = mean;
  data.meta["y_scale"] = scale;
  data.informative = {0, 1, 2, 3, 4};
  const std::size_t n_test = round_count(static_cast<double>(n) / 6.0);
  const std::size_t n_valid = round_count(static_cast<double>(n) / 12.0);
  assign_split_counts(data, n - n_test - n_valid, n_valid, n_test, rng);
  return data;
}

Dataset gen_madelon_like(const MadelonParams& p, Rng& rng) {
  if (p.n_informative == 0) throw std::invalid_argument("gen_madelon_like: need informative features");
  if (p.clusters_per_class == 0) throw std::invalid_argument("gen_madelon_like: need clusters");
  if (p.flip_frac < 0.0 || p.flip_frac > 1.0) throw std::invalid_argument("gen_madelon_like: bad flip_frac");
  const std::size_t n_clusters = 2 * p.clusters_per_class;
  if (p.n_informative < 63 && (std::size_t{1} << p.n_informative) < n_clusters) {
    throw std::invalid_argument("gen_madelon_like: too few hypercube vertices for the clusters");
  }
  const std::size_t n = p.n_samples;
  const std::size_t n_inf = p.n_informative;
  const std::size_t d = n_inf + p.n_combined + p.n_nuisance;

  // Distinct hypercube vertices, one per cluster.
  std::vector<std::vector<double>> centers;
  while (centers.size() < n_clusters) {
    std::vector<double> v(n_inf);
    for (double& c : v) c = rng.bernoulli(0.5) ? p.class_sep : -p.class_sep;
    if (std::find(centers.begin(), centers.end(), v) == centers.end()) centers.push_back(v);
  }
  Matrix mixing(n_inf, p.n_combined);
  for (double& w : mixing.data()) w = rng.uniform(-1.0, 1.0);

  Dataset data;
  data.task = TaskKind::classification;
  data.n_classes = 2;
  data.x = Matrix(n, d);
  data.labels.resize(n);
  Vector informative(n_inf);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t cluster = r % n_clusters;
    const int label = static_cast<int>(cluster % 2);
    for (std::size_t j = 0; j < n_inf; ++j) informative[j] = centers[cluster][j] + rng.gaussian();
    for (std::size_t j = 0; j < p.n_combined; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_inf; ++i) s += informative[i] * mixing(i, j);
      data.x(r, n_inf + j) = s;
    }
    for (std::size_t j = 0; j < n_inf; ++j) data.x(r, j) = informative[j];
    for (std::size_t j = 0; j < n_inf + p.n_combined; ++j) {
      data.x(r, j) += sample_gaussian(rng, 0.0, p.feature_noise_std);
    }
    for (std::size_t j = n_inf + p.n_combined; j < d; ++j) data.x(r, j) = rng.gaussian();
    data.labels[r] = label;
  }
  const std::size_t n_flip = round_count(p.flip_frac * static_cast<double>(n));
  for (std::size_t r : random_subset(n, n_flip, rng)) data.labels[r] = 1 - data.labels[r];
  data.meta["flipped"] = static_cast<double>(n_flip);
  data.meta["class_sep"] = p.class_sep;
  data.informative.resize(n_inf);
  std::iota(data.informative.begin(), data.informative.end(), std::size_t{0});
  data.weakly_relevant.resize(p.n_combined);
  std::iota(data.weakly_relevant.begin(), data.weakly_relevant.end(), n_inf);
  assign_split(data, p.test_frac, p.valid_frac, rng);
  return data;
}

Matrix toeplitz_covariance(std::size_t d, double rho) {
  Matrix s(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      s(i, j) = std::pow(rho, static_cast<double>(i > j ? i - j : j - i));
  return s;
}

SparseLinear gen_sparse_linear(std::size_t n, std::size_t d, bool correlated, double noise_var,
                               Rng& rng, std::optional<std::size_t> k) {
  if (d == 0) throw std::invalid_argument("gen_sparse_linear: need at least one feature");
  if (noise_var < 0.0) throw std::invalid_argument("gen_sparse_linear: negative noise variance");
  const std::size_t sparsity = std::min(k.value_or(default_sparsity(d)), d);
  SparseLinear out;
  Dataset& data = out.data;
  data.task = TaskKind::regression;
  data.x = Matrix(n, d);
  for (double& v : data.x.data()) v = rng.gaussian();
  if (correlated) {
    const Matrix l = cholesky(toeplitz_covariance(d));
    Matrix z = data.x;
    for (std::size_t r = 0; r < n; ++r) {
      const auto zr = z.row(r);
      auto xr = data.x.row(r);
      for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += l(i, j) * zr[j];
        xr[i] = s;
      }
    }
  }
  out.beta_star.assign(d, 0.0);
  data.informative = random_subset(d, sparsity, rng);
  for (std::size_t i : data.informative) out.beta_star[i] = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double noise_std = std::sqrt(noise_var);
  data.y = matvec(data.x, out.beta_star);
  for (double& v : data.y) v += sample_gaussian(rng, 0.0, noise_std);
  data.meta["noise_var"] = noise_var;
  data.meta["sparsity"] = static_cast<double>(sparsity);
  return out;
}

Dataset gen_survival(const SurvivalParams& p, Rng& rng) {
  if (p.n_informative > p.n_features) {
    throw std::invalid_argument("gen_survival: more informative features than features");
  }
  if (p.censor_frac < 0.0 || p.censor_frac >= 1.0) {
    throw std::invalid_argument("gen_survival: censor_frac must lie in [0, 1)");
  }
  const std::size_t n = p.n_samples;
  Dataset data;
  data.task = TaskKind::survival;
  data.x = Matrix(n, p.n_features);
  for (double& v : data.x.data()) v = rng.gaussian();
  data.informative = random_subset(p.n_features, p.n_informative, rng);
  Vector theta(p.n_features, 0.0);
  for (std::size_t i : data.informative) {
    theta[i] = rng.bernoulli(0.5) ? p.effect : -p.effect;
    data.meta["theta_" + std::to_string(i)] = theta[i];
  }
  const Vector log_hazard = matvec(data.x, theta);
  Vector rate(n);
  for (std::size_t i = 0; i < n; ++i) rate[i] = std::exp(log_hazard[i]);

  // Censoring rate c solving mean_i c/(c + rate_i) = censor_frac; the left side
  // increases in c, so bisect in log space.
  double c = 0.0;
  if (p.censor_frac > 0.0) {
    auto expected = [&](double cr) {
      double s = 0.0;
      for (double r : rate) s += cr / (cr + r);
      return s / static_cast<double>(n);
    };
    double lo = -30.0, hi = 30.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (expected(std::exp(mid)) < p.censor_frac ? lo : hi) = mid;
    }
    c = std::exp(0.5 * (lo + hi));
  }
  data.survival.resize(n);
  std::size_t censored = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = -std::log(rng.uniform_open()) / rate[i];
    const double ct = c > 0.0 ? -std::log(rng.uniform_open()) / c
                              : std::numeric_limits<double>::infinity();
    data.survival[i] = t <= ct ? SurvivalTarget{t, true} : SurvivalTarget{ct, false};
    censored += t <= ct ? 0 : 1;
  }
  data.meta["censor_rate"] = c;
  data.meta["censored_fraction"] = static_cast<double>(censored) / static_cast<double>(n);
  assign_split(data, p.test_frac, p.valid_frac, rng);
  return data;
}

Vector survival_theta(const Dataset& data) {
  Vector theta(data.n_features(), 0.0);
  for (std::size_t i : data.informative) {
    const auto it = data.meta.find("theta_" + std::to_string(i));
    if (it != data.meta.end()) theta[i] = it->second;
  }
  return theta;
}

CsvError::CsvError(const std::string& what, std::size_t line)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

Dataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_line(line);
      break;
    }
  }
  if (header.empty()) throw CsvError("missing header row", line_no);

  const bool survival = schema.task == TaskKind::survival;
  const std::size_t n_targets = survival ? 2 : 1;
  if (header.size() <= n_targets) throw CsvError("need at least one feature column", line_no);
  auto find_col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CsvError("missing target column '" + name + "'", line_no);
    return static_cast<std::size_t>(it - header.begin());
  };
  std::size_t target_col = header.size() - n_targets;
  if (!schema.target.empty()) target_col = find_col(schema.target);
  std::size_t event_col = target_col + 1;
  if (survival) {
    if (!schema.event.empty()) event_col = find_col(schema.event);
    if (event_col >= header.size()) throw CsvError("missing event column", line_no);
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != target_col && !(survival && c == event_col)) feature_cols.push_back(c);

  Dataset data;
  data.task = schema.task;
  Vector values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw CsvError("expected " + std::to_string(header.size()) + " cells, found " +
                         std::to_string(cells.size()),
                     line_no);
    }
    auto number = [&](std::size_t c) {
      double v = 0.0;
      const auto& s = cells[c];
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw CsvError("non-numeric cell '" + s + "' in column '" + header[c] + "'", line_no);
      }
      return v;
    };
    for (std::size_t c : feature_cols) values.push_back(number(c));
    const double target = number(target_col);
    switch (schema.task) {
      case TaskKind::regression:
        data.y.push_back(target);
        break;
      case TaskKind::classification: {
        if (target < 0.0 || target != std::floor(target)) {
          throw CsvError("class label must be a nonnegative integer", line_no);
        }
        const int label = static_cast<int>(target);
        data.labels.push_back(label);
        data.n_classes = std::max(data.n_classes, label + 1);
        break;
      }
      case TaskKind::survival: {
        const double event = number(event_col);
        if (event != 0.0 && event != 1.0) throw CsvError("event must be 0 or 1", line_no);
        if (!(target > 0.0)) throw CsvError("survival time must be positive", line_no);
        data.survival.push_back({target, event == 1.0});
        break;
      }
    }
    ++rows;
  }
  data.x = Matrix(rows, feature_cols.size(), std::move(values));
  return data;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  return read_csv(in, schema);
}

void write_csv(const Dataset& data, std::ostream& out) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t c = 0; c < data.n_features(); ++c) out << 'x' << (c + 1) << ',';
  switch (data.task) {
    case TaskKind::regression:
      out << "y\n";
      break;
    case TaskKind::classification:
      out << "label\n";
      break;
    case TaskKind::survival:
      out << "time,event\n";
      break;
  }
  for (std::size_t r = 0; r < data.n_samples(); ++r) {
    for (double v : data.x.row(r)) out << v << ',';
    switch (data.task) {
      case TaskKind::regression:
        out << data.y[r] << '\n';
        break;
      case TaskKind::classification:
        out << data.labels[r] << '\n';
        break;
      case TaskKind::survival:
        out << data.survival[r].time << ',' << (data.survival[r].event ? 1 : 0) << '\n';
        break;
    }
  }
  out.precision(old_precision);
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  write_csv(data, out);
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

}  // namespace stg
