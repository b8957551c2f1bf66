// Dense linear algebra, seeded random numbers and the special functions
// shared by the rest of the library.
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stg {

using Vector = std::vector<double>;

/// Raised when operand shapes are not conformable.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called in a state or mode it does not support.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input is well-formed but carries no usable information (no events, no
/// comparable pairs, zero total weight, ...).
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, Vector data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  Vector& data() noexcept { return data_; }
  const Vector& data() const noexcept { return data_; }

  Vector column(std::size_t c) const;
  Matrix transpose() const;
  /// Rows picked by index, in the given order.
  Matrix select_rows(std::span<const std::size_t> idx) const;
  /// Columns picked by index, in the given order.
  Matrix select_cols(std::span<const std::size_t> idx) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

// Products. All throw ShapeError on non-conformable operands. Zero entries of
// the left operand are skipped, which makes gated inputs with closed gates
// cheap.
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);
/// aᵀ·x
Vector matvec_t(const Matrix& a, std::span<const double> x);

Vector hadamard(std::span<const double> a, std::span<const double> b);
/// Multiplies every row of x elementwise by z.
Matrix scale_columns(const Matrix& x, std::span<const double> z);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Lower-triangular L with a = L·Lᵀ; throws std::domain_error if a is not
/// symmetric positive definite.
Matrix cholesky(const Matrix& a);
/// Solves a·x = b for symmetric positive definite a.
Vector solve_spd(const Matrix& a, std::span<const double> b);

// Special functions. Non-finite inputs raise std::domain_error.

/// Standard normal CDF, Φ(x) = erfc(−x/√2)/2.
double gauss_cdf(double x);
/// N(0, sigma²) density at x.
double gauss_pdf(double x, double sigma);
/// Inverse of gauss_cdf on (0, 1), Acklam's rational approximation refined by
/// one Halley step.
double gauss_quantile(double p);
double hard_sigmoid(double x);
double sigmoid(double x);

/// Seeded random stream.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniforms take the top 53 bits of one engine draw. Gaussians use
/// the Box-Muller transform on two uniforms; both outputs of a pair are used,
/// the second one cached. None of the <random> distributions are used, since
/// their algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);
  /// Standard normal draw.
  double gaussian();
  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// mean + std·N(0,1); std must be nonnegative.
double sample_gaussian(Rng& rng, double mean, double std);

/// Stable 64-bit mixing of a seed with further integer keys (splitmix64
/// finalizer applied after each key).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);
/// FNV-1a hash of a string; used to fold names into seeds.
std::uint64_t hash_name(std::string_view name);

}  // namespace stg
