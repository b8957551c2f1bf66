// Evaluation metrics: prediction quality, feature-selection quality,
// survival concordance, selection stability and plug-in mutual information.
#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "stg/losses.hpp"
#include "stg/ndcore.hpp"

namespace stg {

using IndexSet = std::vector<std::size_t>;

double accuracy(std::span<const int> pred, std::span<const int> target);
/// Row-wise argmax of logits (lowest index wins ties).
std::vector<int> argmax_rows(const Matrix& logits);
double rmse(std::span<const double> pred, std::span<const double> target);

struct SelectionScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision |S∩I|/|S| (0 for empty S), recall |S∩I|/|I|, and their harmonic
/// mean (0 when both vanish). Throws std::out_of_range for indices ≥ D.
SelectionScore selection_f1(const IndexSet& selected, const IndexSet& informative, std::size_t d);

/// 1-based ranks by decreasing weight, ties broken by ascending index.
std::vector<std::size_t> feature_ranks(std::span<const double> weights);
/// Median rank of the informative features.
double median_rank(std::span<const double> weights, const IndexSet& informative);

/// Σ_{d∈I} W_d / Σ_d W_d. Throws DegenerateInputError when every weight is 0.
double ifwr(std::span<const double> weights, const IndexSet& informative);

/// 1 iff the two sets are equal.
int support_recovery(const IndexSet& selected, const IndexSet& truth);
/// 1 iff |selected △ truth| ≤ max_mismatch.
int support_recovery_within(const IndexSet& selected, const IndexSet& truth,
                            std::size_t max_mismatch);
/// |selected ∩ truth| / |truth|.
double recovered_fraction(const IndexSet& selected, const IndexSet& truth);

/// Harrell's C-index. A pair with distinct times is comparable when the
/// shorter time is an observed event; it is concordant when that member has
/// the higher score, and score ties count 1/2. Tied times are skipped.
/// Throws DegenerateInputError without comparable pairs.
double concordance_index(std::span<const double> scores, std::span<const SurvivalTarget> targets);

struct Stability {
  std::size_t union_size = 0;
  /// Sample variance (n − 1 denominator) of the set sizes.
  double size_variance = 0.0;
  double mean_jaccard = 0.0;
};

/// |A∩B|/|A∪B|, with J(∅, ∅) = 1.
double jaccard(const IndexSet& a, const IndexSet& b);
/// Throws std::invalid_argument for fewer than two runs.
Stability selection_stability(const std::vector<IndexSet>& runs);

/// Plug-in I(X_S; Y) in bits from counts. Columns of x must hold integer
/// values.
double mutual_information(const Matrix& x, std::span<const int> y, const IndexSet& subset);

struct MiSubset {
  IndexSet subset;
  double mi_bits = 0.0;
};

/// Exhaustive search over subsets of `subset_size` columns for the largest
/// plug-in MI; ties keep the lexicographically first subset. Throws
/// std::length_error when D > 16 or subset_size > 4.
MiSubset mi_bruteforce(const Matrix& x, std::span<const int> y, std::size_t subset_size);

}  // namespace stg
