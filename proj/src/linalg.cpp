#include "ria/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ria/error.hpp"
#include "ria/random.hpp"

namespace ria {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::dimension: return "dimension mismatch";
    case ErrorKind::rank_deficient: return "rank deficient";
    case ErrorKind::insufficient_samples: return "insufficient samples";
    case ErrorKind::singular: return "singular matrix";
    case ErrorKind::divergence: return "numerical divergence";
    case ErrorKind::config: return "configuration";
    case ErrorKind::format: return "file format";
    case ErrorKind::io: return "io";
    case ErrorKind::inconsistent: return "inconsistent data";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorKind::dimension, "matrix data size does not match shape");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::dimension, "multiply: inner dimensions differ");
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix multiply_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorKind::dimension, "multiply_at_b: row counts differ");
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::dimension, std::string(op) + ": shapes differ");
  }
}

}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

double frobenius_norm(const Matrix& m) {
  // Scaled accumulation so huge or tiny entries do not over/underflow.
  double scale = 0.0;
  for (double v : m.data()) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double sum = 0.0;
  for (double v : m.data()) {
    const double r = v / scale;
    sum += r * r;
  }
  return scale * std::sqrt(sum);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) worst = std::max(worst, std::abs(ad[i] - bd[i]));
  return worst;
}

// ---------------------------------------------------------------------------
// SymMatrix / SpdMatrix

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::dimension, "symmetric matrix must be square");
  }
  if (m.rows() == 0) {
    throw Error(ErrorKind::dimension, "symmetric matrix must have dim >= 1");
  }
  const std::size_t d = m.rows();
  m_ = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    m_(i, i) = m(i, i);
    for (std::size_t j = i + 1; j < d; ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m_(i, j) = v;
      m_(j, i) = v;
    }
  }
}

SymMatrix SymMatrix::identity(std::size_t d) { return SymMatrix(Matrix::identity(d)); }

SymMatrix SymMatrix::zeros(std::size_t d) { return SymMatrix(Matrix(d, d)); }

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return SymMatrix(m);
}

void SymMatrix::set(std::size_t i, std::size_t j, double v) {
  m_(i, j) = v;
  m_(j, i) = v;
}

double frobenius_norm(const SymMatrix& m) { return frobenius_norm(m.matrix()); }

double frobenius_inner(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::dimension, "frobenius_inner: dims differ");
  }
  double sum = 0.0;
  auto ad = a.matrix().data();
  auto bd = b.matrix().data();
  for (std::size_t i = 0; i < ad.size(); ++i) sum += ad[i] * bd[i];
  return sum;
}

SpdMatrix SpdMatrix::checked(SymMatrix m) {
  const EigenSystem eig = sym_eig(m);
  const double lo = eig.eigenvalues.back();
  if (!(lo > 0.0)) {
    std::ostringstream msg;
    msg << "matrix is not positive definite (smallest eigenvalue " << lo << ")";
    throw Error(ErrorKind::singular, msg.str());
  }
  return SpdMatrix(std::move(m));
}

// ---------------------------------------------------------------------------
// Eigen

SymMatrix EigenSystem::reconstruct(std::span<const double> mapped) const {
  const std::size_t d = eigenvalues.size();
  if (mapped.size() != d) {
    throw Error(ErrorKind::dimension, "reconstruct: eigenvalue count mismatch");
  }
  // V·diag(f)·Vᵀ, accumulated on the upper triangle only.
  Matrix scaled(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) scaled(i, k) = eigenvectors(i, k) * mapped[k];
  Matrix out(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    auto si = scaled.row(i);
    for (std::size_t j = i; j < d; ++j) {
      auto vj = eigenvectors.row(j);
      double sum = 0.0;
      for (std::size_t k = 0; k < d; ++k) sum += si[k] * vj[k];
      out(i, j) = sum;
      out(j, i) = sum;
    }
  }
  return SymMatrix(out);
}

EigenSystem sym_eig(const SymMatrix& m) {
  const std::size_t d = m.dim();
  for (double v : m.matrix().data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_input, "sym_eig: non-finite entry");
  }

  Matrix a = m.matrix();
  Matrix v = Matrix::identity(d);
  const double norm = frobenius_norm(a);

  auto off_norm = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) sum += a(i, j) * a(i, j);
    return std::sqrt(2.0 * sum);
  };

  constexpr int kMaxSweeps = 30;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double off = off_norm();
    if (off <= 1e-12 * norm || off == 0.0) break;
    // Early sweeps skip small pivots; later sweeps rotate everything left.
    const double threshold = sweep < 3 ? 0.2 * off / static_cast<double>(d * d) : 0.0;

    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= threshold || apq == 0.0) continue;

        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        auto rp = a.row(p);
        auto rq = a.row(q);
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = rp[k];
          const double aqk = rq[k];
          rp[k] = c * apk - s * aqk;
          rq[k] = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenSystem out;
  out.eigenvalues.resize(d);
  out.eigenvectors = Matrix(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < d; ++i) out.eigenvectors(i, k) = v(i, order[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix functions

SymMatrix matrix_function(const EigenSystem& eig, MatrixFunction f) {
  const auto& lambda = eig.eigenvalues;
  const double lambda_max = lambda.front();
  const bool integral_power =
      f.kind == MatrixFunction::Kind::power && f.exponent == std::floor(f.exponent);

  if (!integral_power) {
    const double floor = 1e-14 * lambda_max;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      if (!(lambda[i] > floor) || !(lambda_max > 0.0)) {
        std::ostringstream msg;
        msg << "eigenvalue " << i << " = " << lambda[i] << " is at or below the floor "
            << floor << " (lambda_max " << lambda_max << ")";
        throw Error(ErrorKind::singular, msg.str());
      }
    }
  }

  std::vector<double> mapped(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    mapped[i] = f.kind == MatrixFunction::Kind::log ? std::log(lambda[i])
                                                    : std::pow(lambda[i], f.exponent);
  }
  return eig.reconstruct(mapped);
}

SymMatrix matrix_function(const SpdMatrix& m, MatrixFunction f) {
  if (f.kind == MatrixFunction::Kind::power && f.exponent == 1.0) return m.sym();
  return matrix_function(sym_eig(m.sym()), f);
}

// ---------------------------------------------------------------------------
// Orthonormal bases

Matrix random_orthonormal_basis(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (cols > rows) {
    std::ostringstream msg;
    msg << "random_orthonormal_basis: cols (" << cols << ") exceed rows (" << rows << ")";
    throw Error(ErrorKind::dimension, msg.str());
  }
  if (cols == 0) throw Error(ErrorKind::dimension, "random_orthonormal_basis: cols must be >= 1");

  // Column-major scratch so Gram-Schmidt runs over contiguous columns.
  std::vector<std::vector<double>> q(cols, std::vector<double>(rows));
  CounterRng rng(seed);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) q[c][r] = rng.normal();

  auto dot = [rows](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += x[i] * y[i];
    return s;
  };

  for (std::size_t c = 0; c < cols; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t prev = 0; prev < c; ++prev) {
        const double proj = dot(q[prev], q[c]);
        for (std::size_t i = 0; i < rows; ++i) q[c][i] -= proj * q[prev][i];
      }
    }
    const double n = std::sqrt(dot(q[c], q[c]));
    if (!(n > 1e-300)) {
      throw Error(ErrorKind::rank_deficient, "random_orthonormal_basis: degenerate column");
    }
    for (double& x : q[c]) x /= n;
  }

  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = q[c][r];
  return out;
}

}  // namespace ria
