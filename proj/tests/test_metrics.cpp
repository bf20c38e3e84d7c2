#include <doctest.h>

#include <cmath>

#include "ria/aggregation.hpp"
#include "ria/metrics.hpp"
#include "test_support.hpp"

using namespace ria;
using namespace ria::testing;

namespace {

SpdMatrix spd(const SymMatrix& m) { return SpdMatrix::trusted(m); }

SpdMatrix scaled(const SymMatrix& m, double f) { return SpdMatrix::trusted(SymMatrix(f * m.matrix())); }

}  // namespace

TEST_CASE("pem distance closed form") {
  const double a[] = {4.0, 1.0}, b[] = {1.0, 4.0};
  const SpdMatrix A = spd(SymMatrix::diagonal(a)), B = spd(SymMatrix::diagonal(b));
  // (1/0.5)·‖diag(2,1) − diag(1,2)‖_F = 2√2
  CHECK(std::abs(spd_distance(A, B, MetricSpec::pem(0.5)) - 2.0 * std::sqrt(2.0)) <= 1e-12);
  CHECK(spd_distance(A, A, MetricSpec::pem(0.5)) == 0.0);
  CHECK(std::abs(spd_distance(A, B, MetricSpec::euclidean()) - 3.0 * std::sqrt(2.0)) <= 1e-12);
  CHECK(std::abs(spd_distance(A, B, MetricSpec::log_euclidean()) - std::sqrt(2.0) * std::log(4.0)) <=
        1e-12);
  // α = 1 is the plain Frobenius distance.
  CHECK(std::abs(spd_distance(A, B, MetricSpec::pem(1.0)) - spd_distance(A, B, MetricSpec::euclidean())) <=
        1e-12);
}

TEST_CASE("distances are invariant under orthogonal conjugation") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const SymMatrix a = random_spd(8, 20.0, rng), b = random_spd(8, 20.0, rng);
    const Matrix q = random_orthogonal(8, rng);
    const SpdMatrix qa = spd(SymMatrix(conjugate(q, a.matrix())));
    const SpdMatrix qb = spd(SymMatrix(conjugate(q, b.matrix())));
    for (const MetricSpec& m : {MetricSpec::pem(0.5), MetricSpec::pem(0.25), MetricSpec::log_euclidean(),
                                MetricSpec::euclidean()}) {
      const double d0 = spd_distance(spd(a), spd(b), m);
      CHECK(std::abs(spd_distance(qa, qb, m) - d0) <= 1e-9 * std::max(1.0, d0));
    }
  }
}

TEST_CASE("triangle inequality and symmetry") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const SpdMatrix a = spd(random_spd(6, 50.0, rng));
    const SpdMatrix b = spd(random_spd(6, 50.0, rng));
    const SpdMatrix c = spd(random_spd(6, 50.0, rng));
    for (const MetricSpec& m : {MetricSpec::pem(0.5), MetricSpec::log_euclidean(), MetricSpec::euclidean()}) {
      const double ab = spd_distance(a, b, m), bc = spd_distance(b, c, m), ac = spd_distance(a, c, m);
      CHECK(ac <= ab + bc + 1e-12);
      CHECK(std::abs(ab - spd_distance(b, a, m)) <= 1e-12 * std::max(1.0, ab));
      CHECK(ab >= 0.0);
    }
  }
}

TEST_CASE("scale behaviour") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const SymMatrix a = random_spd(7, 30.0, rng), b = random_spd(7, 30.0, rng);
    for (double s : {0.25, 2.0, 7.3}) {
      for (double alpha : {0.25, 0.5, 1.0}) {
        const double d0 = spd_distance(spd(a), spd(b), MetricSpec::pem(alpha));
        const double ds = spd_distance(scaled(a, s * s), scaled(b, s * s), MetricSpec::pem(alpha));
        CHECK(std::abs(ds - std::pow(s, 2 * alpha) * d0) <= 1e-9 * std::pow(s, 2 * alpha) * d0);
      }
      const double l0 = spd_distance(spd(a), spd(b), MetricSpec::log_euclidean());
      const double ls = spd_distance(scaled(a, s * s), scaled(b, s * s), MetricSpec::log_euclidean());
      CHECK(std::abs(ls - l0) <= 1e-12 * std::max(1.0, l0));
    }
  }
}

TEST_CASE("pem distance tends to log-euclidean as alpha shrinks") {
  std::mt19937_64 rng(4);
  const SpdMatrix a = spd(random_spd(5, 10.0, rng)), b = spd(random_spd(5, 10.0, rng));
  const double lem = spd_distance(a, b, MetricSpec::log_euclidean());
  double previous_gap = INFINITY;
  for (double alpha : {0.5, 0.1, 0.01, 0.001}) {
    const double gap = std::abs(spd_distance(a, b, MetricSpec::pem(alpha)) - lem);
    CHECK(gap < previous_gap);
    previous_gap = gap;
  }
  CHECK(previous_gap <= 1e-2 * lem);
}

TEST_CASE("descriptor similarity is the normalized Frobenius inner product") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const SymMatrix a = random_spd(9, 20.0, rng), b = random_spd(9, 20.0, rng);
    const GlobalDescriptor ga = GlobalDescriptor::normalized(isometric_vectorize(a));
    const GlobalDescriptor gb = GlobalDescriptor::normalized(isometric_vectorize(b));
    const double want = naive_trace_product(a, b) / (frob(a.matrix()) * frob(b.matrix()));
    CHECK(std::abs(descriptor_similarity(ga, gb) - want) <= 1e-12);
    // Unit vectors: ‖a − b‖² = 2 − 2⟨a, b⟩.
    const double dist = descriptor_distance(ga, gb);
    CHECK(std::abs(dist * dist - (2.0 - 2.0 * want)) <= 1e-12);
  }
}
