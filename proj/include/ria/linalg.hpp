#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ria {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Matrix transpose() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
/// aᵀ·b without forming the transpose.
Matrix multiply_at_b(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Symmetric d×d matrix. Construction symmetrizes (A + Aᵀ)/2 so the stored
/// entries are exactly mirror-equal.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);
  static SymMatrix identity(std::size_t d);
  static SymMatrix zeros(std::size_t d);
  static SymMatrix diagonal(std::span<const double> diag);

  std::size_t dim() const { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }

  /// Sets (i, j) and (j, i) together.
  void set(std::size_t i, std::size_t j, double v);

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  SymMatrix() = default;
  Matrix m_;
};

double frobenius_norm(const SymMatrix& m);
/// tr(AB) for symmetric A, B, i.e. the Frobenius inner product.
double frobenius_inner(const SymMatrix& a, const SymMatrix& b);

/// Symmetric matrix known to be positive definite.
class SpdMatrix {
 public:
  /// Verifies the smallest eigenvalue is positive; throws ErrorKind::singular otherwise.
  static SpdMatrix checked(SymMatrix m);
  /// Caller vouches for positive definiteness (e.g. PSD + εI by construction).
  static SpdMatrix trusted(SymMatrix m) { return SpdMatrix(std::move(m)); }

  const SymMatrix& sym() const { return m_; }
  std::size_t dim() const { return m_.dim(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

 private:
  explicit SpdMatrix(SymMatrix m) : m_(std::move(m)) {}
  SymMatrix m_;
};

struct EigenSystem {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // columns, orthonormal

  /// V·diag(f(λ))·Vᵀ for precomputed f(λ).
  SymMatrix reconstruct(std::span<const double> mapped_eigenvalues) const;
  SymMatrix reconstruct() const { return reconstruct(eigenvalues); }
};

/// Cyclic Jacobi eigensolver. Stops when the off-diagonal Frobenius mass drops
/// below 1e-12·‖m‖_F or after 30 sweeps.
EigenSystem sym_eig(const SymMatrix& m);

struct MatrixFunction {
  enum class Kind { power, log };
  Kind kind = Kind::power;
  double exponent = 1.0;

  static MatrixFunction power(double alpha) { return {Kind::power, alpha}; }
  static MatrixFunction log() { return {Kind::log, 0.0}; }
};

/// Spectral matrix function V f(Λ) Vᵀ. Log and non-integer powers require every
/// eigenvalue to exceed 1e-14·λ_max and throw ErrorKind::singular otherwise.
/// power(1.0) returns the input unchanged.
SymMatrix matrix_function(const SpdMatrix& m, MatrixFunction f);
/// Same, reusing a decomposition the caller already has.
SymMatrix matrix_function(const EigenSystem& eig, MatrixFunction f);

/// rows×cols matrix with orthonormal columns. Standard normals from
/// CounterRng(seed), column-orthonormalized by modified Gram-Schmidt with one
/// re-orthogonalization pass. Bit-identical for equal arguments.
Matrix random_orthonormal_basis(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace ria
