// LASSO by proximal gradient and the regularization schedule of the sparse
// linear benchmark.
#pragma once

#include <span>
#include <vector>

#include "stg/ndcore.hpp"

namespace stg {

/// sign(x)·max(|x| − t, 0).
double soft_threshold(double x, double t);

/// (1/N)‖Xθ − y‖² + alpha·‖θ‖₁.
double lasso_objective(const Matrix& x, std::span<const double> y, std::span<const double> coef,
                       double alpha);

struct LassoResult {
  Vector coef;
  std::size_t iterations = 0;
  /// False when max_iter was reached first; coef is then the best iterate.
  bool converged = false;
  double objective = 0.0;
};

/// ISTA with step 1/L, L = 2·λ_max(XᵀX)/N from power iteration. Stops when
/// the relative objective decrease drops below `tol`.
LassoResult lasso_fit(const Matrix& x, std::span<const double> y, double alpha, double tol = 1e-8,
                      std::size_t max_iter = 100000);

/// Indices with |coef_d| > threshold, ascending.
std::vector<std::size_t> lasso_support(std::span<const double> coef, double threshold = 1e-8);

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
double max_eigenvalue_psd(const Matrix& a, std::size_t max_iter = 1000, double tol = 1e-12);

/// α_N = √(2σ²·ln(D − k)·ln(k)/N). Throws std::domain_error unless
/// D > k ≥ 2 and N ≥ 1.
double alpha_schedule(std::size_t n, std::size_t d, std::size_t k, double noise_var);

}  // namespace stg
