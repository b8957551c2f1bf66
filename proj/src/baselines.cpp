#include "stg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stg {

double soft_threshold(double x, double t) {
  if (t < 0.0) throw std::domain_error("soft_threshold: negative threshold");
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double lasso_objective(const Matrix& x, std::span<const double> y, std::span<const double> coef,
                       double alpha) {
  if (x.rows() != y.size() || x.cols() != coef.size()) throw ShapeError("lasso_objective: shape mismatch");
  const Vector fit = matvec(x, coef);
  double rss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) rss += (fit[i] - y[i]) * (fit[i] - y[i]);
  double l1 = 0.0;
  for (double c : coef) l1 += std::abs(c);
  return rss / static_cast<double>(y.size()) + alpha * l1;
}

double max_eigenvalue_psd(const Matrix& a, std::size_t max_iter, double tol) {
  if (a.rows() != a.cols()) throw ShapeError("max_eigenvalue_psd: matrix is not square");
  const std::size_t d = a.rows();
  if (d == 0) return 0.0;
  // Uneven start vector so it is unlikely to be orthogonal to the top
  // eigenvector.
  Vector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    for (double& e : v) e /= nv;
    Vector w = matvec(a, v);
    const double next = dot(v, w);
    v = std::move(w);
    if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) return next;
    lambda = next;
  }
  return lambda;
}

LassoResult lasso_fit(const Matrix& x, std::span<const double> y, double alpha, double tol,
                      std::size_t max_iter) {
  if (x.empty()) throw ShapeError("lasso_fit: empty design");
  if (x.rows() != y.size()) throw ShapeError("lasso_fit: row/target mismatch");
  if (!(alpha >= 0.0)) throw std::domain_error("lasso_fit: alpha must be >= 0");
  const std::size_t d = x.cols();
  const double n = static_cast<double>(x.rows());

  // Work with the Gram form: ∇ = 2(Gθ − b)/N, objective (θᵀGθ − 2bᵀθ + yᵀy)/N.
  const Matrix gram = matmul_tn(x, x);
  const Vector b = matvec_t(x, y);
  const double yy = dot(y, y);
  const double lip = 2.0 * max_eigenvalue_psd(gram) / n;
  auto objective = [&](const Vector& th, const Vector& g_th) {
    double l1 = 0.0;
    for (double c : th) l1 += std::abs(c);
    return std::max(0.0, dot(th, g_th) - 2.0 * dot(b, th) + yy) / n + alpha * l1;
  };

  LassoResult res;
  res.coef.assign(d, 0.0);
  Vector g_theta(d, 0.0);
  res.objective = objective(res.coef, g_theta);
  if (lip == 0.0) {
    res.converged = true;
    return res;
  }
  const double step = 1.0 / lip;
  Vector theta = res.coef;
  double f_prev = res.objective;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    for (std::size_t j = 0; j < d; ++j) {
      const double grad = 2.0 * (g_theta[j] - b[j]) / n;
      theta[j] = soft_threshold(theta[j] - step * grad, step * alpha);
    }
    g_theta = matvec(gram, theta);
    const double f = objective(theta, g_theta);
    res.iterations = it;
    if (f <= res.objective) {
      res.objective = f;
      res.coef = theta;
    }
    if (f_prev - f <= tol * std::max(std::abs(f_prev), std::numeric_limits<double>::min())) {
      res.converged = true;
      break;
    }
    f_prev = f;
  }
  res.objective = lasso_objective(x, y, res.coef, alpha);
  return res;
}

std::vector<std::size_t> lasso_support(std::span<const double> coef, double threshold) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < coef.size(); ++i)
    if (std::abs(coef[i]) > threshold) s.push_back(i);
  return s;
}

double alpha_schedule(std::size_t n, std::size_t d, std::size_t k, double noise_var) {
  if (k < 2) throw std::domain_error("alpha_schedule: need k >= 2");
  if (d <= k) throw std::domain_error("alpha_schedule: need D > k");
  if (n < 1) throw std::domain_error("alpha_schedule: need N >= 1");
  if (noise_var < 0.0) throw std::domain_error("alpha_schedule: negative noise variance");
  return std::sqrt(2.0 * noise_var * std::log(static_cast<double>(d - k)) *
                   std::log(static_cast<double>(k)) / static_cast<double>(n));
}

}  // namespace stg
