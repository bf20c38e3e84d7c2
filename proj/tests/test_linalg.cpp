#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ria/error.hpp"
#include "ria/linalg.hpp"
#include "ria/random.hpp"
#include "test_support.hpp"

using namespace ria;
using namespace ria::testing;

namespace {

double orthonormality_defect(const Matrix& v) {
  return frob(naive_multiply(v.transpose(), v) - Matrix::identity(v.cols()));
}

}  // namespace

TEST_CASE("SymMatrix symmetrizes exactly") {
  Matrix m(2, 2, {1.0, 2.0, 4.0, 3.0});
  const SymMatrix s(m);
  CHECK(s(0, 1) == 3.0);
  CHECK(s(1, 0) == s(0, 1));
  CHECK_THROWS_AS(SymMatrix(Matrix(2, 3)), Error);
}

TEST_CASE("frobenius_norm") {
  CHECK(frobenius_norm(SymMatrix::zeros(4)) == 0.0);
  CHECK(frobenius_norm(SymMatrix::identity(3)) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  const SymMatrix m(Matrix(2, 2, {1, 2, 2, 3}));
  CHECK(frobenius_norm(m) == doctest::Approx(std::sqrt(18.0)).epsilon(1e-15));
}

TEST_CASE("sym_eig on closed-form cases") {
  SUBCASE("identity") {
    const EigenSystem e = sym_eig(SymMatrix::identity(3));
    for (double l : e.eigenvalues) CHECK(l == doctest::Approx(1.0));
    CHECK(orthonormality_defect(e.eigenvectors) <= 1e-12);
  }
  SUBCASE("diagonal") {
    const double diag[] = {1.0, 4.0};
    const EigenSystem e = sym_eig(SymMatrix::diagonal(diag));
    CHECK(e.eigenvalues[0] == 4.0);
    CHECK(e.eigenvalues[1] == 1.0);
    CHECK(std::abs(e.eigenvectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(e.eigenvectors(0, 1)) == doctest::Approx(1.0));
  }
  SUBCASE("non-finite input") {
    Matrix m = Matrix::identity(2);
    m(0, 0) = std::nan("");
    try {
      sym_eig(SymMatrix(m));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_input);
    }
  }
}

TEST_CASE("sym_eig reconstructs random symmetric matrices") {
  std::mt19937_64 rng(11);
  for (std::size_t d : {1u, 2u, 8u, 33u}) {
    const SymMatrix a = random_symmetric(d, rng);
    const EigenSystem e = sym_eig(a);
    CHECK(std::is_sorted(e.eigenvalues.rbegin(), e.eigenvalues.rend()));
    CHECK(orthonormality_defect(e.eigenvectors) <= 1e-10);
    CHECK(rel_diff(e.reconstruct().matrix(), a.matrix()) <= 1e-10);
  }
}

TEST_CASE("sym_eig reconstruction holds up to condition 1e6") {
  std::mt19937_64 rng(12);
  for (double cond : {10.0, 1e3, 1e6}) {
    const SymMatrix a = random_spd(24, cond, rng);
    const EigenSystem e = sym_eig(a);
    CHECK(rel_diff(e.reconstruct().matrix(), a.matrix()) <= 1e-10);
    CHECK(rel_diff(sym_eig(e.reconstruct()).reconstruct().matrix(), a.matrix()) <= 1e-10);
  }
}

TEST_CASE("matrix_function closed forms") {
  const double diag[] = {4.0, 1.0};
  const SpdMatrix c = SpdMatrix::checked(SymMatrix::diagonal(diag));
  const SymMatrix root = matrix_function(c, MatrixFunction::power(0.5));
  CHECK(root(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(root(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(root(0, 1)) <= 1e-15);

  const SymMatrix log_i = matrix_function(SpdMatrix::checked(SymMatrix::identity(5)), MatrixFunction::log());
  CHECK(frobenius_norm(log_i) <= 1e-15);

  std::mt19937_64 rng(3);
  const SymMatrix a = random_spd(6, 20.0, rng);
  CHECK(matrix_function(SpdMatrix::trusted(a), MatrixFunction::power(1.0)) == a);
}

TEST_CASE("matrix square root squares back to the input") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const SymMatrix a = random_spd(16, 100.0, rng);
    const SymMatrix r = matrix_function(SpdMatrix::trusted(a), MatrixFunction::power(0.5));
    CHECK(rel_diff(naive_multiply(r.matrix(), r.matrix()), a.matrix()) <= 1e-9);
  }
}

TEST_CASE("matrix_function maps eigenvalues elementwise") {
  std::mt19937_64 rng(6);
  for (double alpha : {0.1, 0.25, 0.5, 0.75}) {
    std::vector<double> lambda;
    const SymMatrix a = random_spd(12, 50.0, rng, &lambda);
    const SymMatrix p = matrix_function(SpdMatrix::trusted(a), MatrixFunction::power(alpha));
    std::vector<double> got = sym_eig(p).eigenvalues;
    std::vector<double> want;
    for (double l : lambda) want.push_back(std::pow(l, alpha));
    std::sort(want.rbegin(), want.rend());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(std::abs(got[i] - want[i]) <= 1e-10 * want[i]);
    }
  }
}

TEST_CASE("matrix_function rejects eigenvalues at the floor") {
  const double diag[] = {1.0, 0.0};
  const SpdMatrix singular = SpdMatrix::trusted(SymMatrix::diagonal(diag));
  for (auto f : {MatrixFunction::log(), MatrixFunction::power(0.5)}) {
    try {
      matrix_function(singular, f);
      FAIL("expected singularity error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::singular);
      CHECK(std::string(e.what()).find("eigenvalue 1") != std::string::npos);
    }
  }
  // Integer powers need no floor.
  CHECK_NOTHROW(matrix_function(singular, MatrixFunction::power(2.0)));
  CHECK_THROWS_AS(SpdMatrix::checked(SymMatrix::diagonal(diag)), Error);
}

TEST_CASE("matrix square root is equivariant under orthogonal conjugation") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const SymMatrix c = random_spd(10, 30.0, rng);
    const Matrix q = random_orthogonal(10, rng);
    const SymMatrix qcq(conjugate(q, c.matrix()));
    const SymMatrix lhs = matrix_function(SpdMatrix::trusted(qcq), MatrixFunction::power(0.5));
    const Matrix rhs = conjugate(q, matrix_function(SpdMatrix::trusted(c), MatrixFunction::power(0.5)).matrix());
    CHECK(max_abs_diff(lhs.matrix(), rhs) <= 1e-9);
  }
}

TEST_CASE("random_orthonormal_basis") {
  SUBCASE("square basis is orthogonal") {
    const Matrix p = random_orthonormal_basis(4, 4, 99);
    CHECK(orthonormality_defect(p) <= 1e-12);
  }
  SUBCASE("deterministic for equal seeds") {
    const Matrix a = random_orthonormal_basis(1536, 256, 7);
    const Matrix b = random_orthonormal_basis(1536, 256, 7);
    CHECK(a == b);
    CHECK(orthonormality_defect(a) <= 1e-10);
    CHECK_FALSE(a == random_orthonormal_basis(1536, 256, 8));
  }
  SUBCASE("unit columns") {
    const Matrix p = random_orthonormal_basis(64, 32, 3);
    for (std::size_t c = 0; c < 32; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < 64; ++r) s += p(r, c) * p(r, c);
      CHECK(std::abs(std::sqrt(s) - 1.0) <= 1e-12);
    }
  }
  SUBCASE("cols > rows") {
    try {
      random_orthonormal_basis(3, 4, 1);
      FAIL("expected dimension error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::dimension);
    }
  }
  SUBCASE("orthonormal over many shapes") {
    for (std::size_t rows : {1u, 5u, 17u, 128u})
      for (std::size_t cols : {1u, 3u, 16u, 128u})
        for (std::uint64_t seed : {0ull, 1ull, 12345ull}) {
          if (cols > rows) continue;
          CHECK(orthonormality_defect(random_orthonormal_basis(rows, cols, seed)) <= 1e-10);
        }
  }
}

TEST_CASE("CounterRng is addressable and roughly standard normal") {
  CounterRng a(42), b(42, 10);
  for (int i = 0; i < 10; ++i) a.next_u64();
  CHECK(a.next_u64() == b.next_u64());

  CounterRng rng(1);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}
