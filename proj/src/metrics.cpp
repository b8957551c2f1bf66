#include "stg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace stg {

namespace {

IndexSet sorted_unique(const IndexSet& s) {
  IndexSet out = s;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t intersection_size(const IndexSet& a, const IndexSet& b) {
  const IndexSet sa = sorted_unique(a), sb = sorted_unique(b);
  IndexSet common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  return common.size();
}

}  // namespace

double accuracy(std::span<const int> pred, std::span<const int> target) {
  if (pred.size() != target.size()) throw ShapeError("accuracy: length mismatch");
  if (pred.empty()) throw DegenerateInputError("accuracy: no predictions");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == target[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double rmse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw ShapeError("rmse: length mismatch");
  if (pred.empty()) throw DegenerateInputError("rmse: no predictions");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

SelectionScore selection_f1(const IndexSet& selected, const IndexSet& informative, std::size_t d) {
  for (std::size_t i : selected)
    if (i >= d) throw std::out_of_range("selection_f1: selected index out of range");
  for (std::size_t i : informative)
    if (i >= d) throw std::out_of_range("selection_f1: informative index out of range");
  const IndexSet sel = sorted_unique(selected), inf = sorted_unique(informative);
  const double hit = static_cast<double>(intersection_size(sel, inf));
  SelectionScore s;
  s.precision = sel.empty() ? 0.0 : hit / static_cast<double>(sel.size());
  s.recall = inf.empty() ? 0.0 : hit / static_cast<double>(inf.size());
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

std::vector<std::size_t> feature_ranks(std::span<const double> weights) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  std::vector<std::size_t> rank(weights.size());
  for (std::size_t p = 0; p < order.size(); ++p) rank[order[p]] = p + 1;
  return rank;
}

double median_rank(std::span<const double> weights, const IndexSet& informative) {
  if (informative.empty()) throw std::invalid_argument("median_rank: empty informative set");
  const auto rank = feature_ranks(weights);
  std::vector<double> r;
  for (std::size_t i : informative) r.push_back(static_cast<double>(rank.at(i)));
  std::sort(r.begin(), r.end());
  const std::size_t m = r.size() / 2;
  return r.size() % 2 ? r[m] : 0.5 * (r[m - 1] + r[m]);
}

double ifwr(std::span<const double> weights, const IndexSet& informative) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::domain_error("ifwr: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw DegenerateInputError("ifwr: all weights are zero");
  double inf = 0.0;
  for (std::size_t i : sorted_unique(informative)) inf += weights[i];
  return inf / total;
}

int support_recovery(const IndexSet& selected, const IndexSet& truth) {
  return sorted_unique(selected) == sorted_unique(truth) ? 1 : 0;
}

int support_recovery_within(const IndexSet& selected, const IndexSet& truth,
                            std::size_t max_mismatch) {
  const IndexSet a = sorted_unique(selected), b = sorted_unique(truth);
  IndexSet diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
  return diff.size() <= max_mismatch ? 1 : 0;
}

double recovered_fraction(const IndexSet& selected, const IndexSet& truth) {
  const IndexSet t = sorted_unique(truth);
  if (t.empty()) return 1.0;
  return static_cast<double>(intersection_size(selected, t)) / static_cast<double>(t.size());
}

double concordance_index(std::span<const double> scores, std::span<const SurvivalTarget> targets) {
  if (scores.size() != targets.size()) throw ShapeError("concordance_index: length mismatch");
  double concordant = 0.0;
  std::size_t comparable = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t j = i + 1; j < targets.size(); ++j) {
      if (targets[i].time == targets[j].time) continue;
      const std::size_t a = targets[i].time < targets[j].time ? i : j;
      const std::size_t b = a == i ? j : i;
      if (!targets[a].event) continue;
      ++comparable;
      if (scores[a] > scores[b]) {
        concordant += 1.0;
      } else if (scores[a] == scores[b]) {
        concordant += 0.5;
      }
    }
  }
  if (comparable == 0) throw DegenerateInputError("concordance_index: no comparable pairs");
  return concordant / static_cast<double>(comparable);
}

double jaccard(const IndexSet& a, const IndexSet& b) {
  const IndexSet sa = sorted_unique(a), sb = sorted_unique(b);
  if (sa.empty() && sb.empty()) return 1.0;
  const std::size_t common = intersection_size(sa, sb);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

Stability selection_stability(const std::vector<IndexSet>& runs) {
  if (runs.size() < 2) throw std::invalid_argument("selection_stability: need at least two runs");
  Stability s;
  IndexSet all;
  double mean = 0.0;
  for (const auto& r : runs) {
    all.insert(all.end(), r.begin(), r.end());
    mean += static_cast<double>(sorted_unique(r).size());
  }
  s.union_size = sorted_unique(all).size();
  mean /= static_cast<double>(runs.size());
  for (const auto& r : runs) {
    const double dv = static_cast<double>(sorted_unique(r).size()) - mean;
    s.size_variance += dv * dv;
  }
  s.size_variance /= static_cast<double>(runs.size() - 1);
  double jsum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      jsum += jaccard(runs[i], runs[j]);
      ++pairs;
    }
  }
  s.mean_jaccard = jsum / static_cast<double>(pairs);
  return s;
}

double mutual_information(const Matrix& x, std::span<const int> y, const IndexSet& subset) {
  if (x.rows() != y.size()) throw ShapeError("mutual_information: row/label mismatch");
  if (y.empty()) throw DegenerateInputError("mutual_information: no samples");
  for (std::size_t c : subset)
    if (c >= x.cols()) throw std::out_of_range("mutual_information: column out of range");
  std::map<std::vector<long long>, double> joint_x;
  std::map<std::pair<std::vector<long long>, int>, double> joint_xy;
  std::map<int, double> py;
  std::vector<long long> key(subset.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t k = 0; k < subset.size(); ++k) {
      const double v = x(r, subset[k]);
      if (v != std::floor(v)) throw std::domain_error("mutual_information: non-integer feature value");
      key[k] = static_cast<long long>(v);
    }
    joint_x[key] += 1.0;
    joint_xy[{key, y[r]}] += 1.0;
    py[y[r]] += 1.0;
  }
  const double n = static_cast<double>(y.size());
  double mi = 0.0;
  for (const auto& [k, c] : joint_xy) {
    const double pxy = c / n;
    mi += pxy * std::log2(pxy / ((joint_x[k.first] / n) * (py[k.second] / n)));
  }
  return std::max(0.0, mi);
}

MiSubset mi_bruteforce(const Matrix& x, std::span<const int> y, std::size_t subset_size) {
  if (x.cols() > 16) throw std::length_error("mi_bruteforce: more than 16 features");
  if (subset_size > 4) throw std::length_error("mi_bruteforce: subset size above 4");
  if (subset_size == 0 || subset_size > x.cols()) {
    throw std::invalid_argument("mi_bruteforce: subset size must lie in [1, D]");
  }
  MiSubset best;
  best.mi_bits = -1.0;
  IndexSet cur(subset_size);
  std::iota(cur.begin(), cur.end(), std::size_t{0});
  const std::size_t d = x.cols();
  while (true) {
    const double mi = mutual_information(x, y, cur);
    if (mi > best.mi_bits) best = {cur, mi};
    // Next combination in lexicographic order.
    std::size_t i = subset_size;
    while (i > 0 && cur[i - 1] == d - subset_size + (i - 1)) --i;
    if (i == 0) break;
    ++cur[i - 1];
    for (std::size_t j = i; j < subset_size; ++j) cur[j] = cur[j - 1] + 1;
  }
  return best;
}

}  // namespace stg
