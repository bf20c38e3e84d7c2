#include <doctest.h>

#include <cmath>
#include <set>

#include "ria/error.hpp"
#include "ria/invariance_lab.hpp"
#include "ria/metrics.hpp"
#include "test_support.hpp"

using namespace ria;
using namespace ria::testing;

namespace {

const std::vector<Aggregator> kAll = {Aggregator::ria(), Aggregator::euclidean_cov(),
                                      Aggregator::log_euclidean_cov(), Aggregator::mean(),
                                      Aggregator::gem(3.0)};

PipelineConfig config_for(std::size_t d) {
  PipelineConfig cfg;
  cfg.d = d;
  return cfg;
}

FeatureMatrix scene_features(std::size_t d, std::size_t n, std::uint64_t seed, double mean = 1.0) {
  return generate_scene_features(random_place_scene(0, std::vector<double>(d, mean), 4.0, n, seed), seed + 1);
}

GlobalDescriptor ria_descriptor(const FeatureMatrix& x, const PipelineConfig& cfg) {
  PipelineConfig local = cfg;
  local.d = x.dim();
  return aggregate(x, ProjectionBasis::identity(x.dim()), local);
}

}  // namespace

TEST_CASE("perturb") {
  std::mt19937_64 rng(1);
  const FeatureMatrix x = random_features(30, 6, rng);

  SUBCASE("unit intensity scale is the identity") {
    CHECK(perturb(x, Perturbation::intensity_scale(1.0)).matrix() == x.matrix());
  }
  SUBCASE("intensity scale") {
    const FeatureMatrix y = perturb(x, Perturbation::intensity_scale(0.5));
    CHECK(max_abs_diff(y.matrix(), 0.5 * x.matrix()) == 0.0);
    CHECK(max_abs_diff(sample_covariance(y).matrix(), 0.25 * sample_covariance(x).matrix()) <= 1e-12);
  }
  SUBCASE("conjugation then its transpose") {
    const Perturbation p = Perturbation::orthogonal_conjugation(0.7, 9);
    const FeatureMatrix y = perturb(x, p);
    const Matrix q = rotation_matrix(6, 0.7, 9);
    CHECK(max_abs_diff(naive_multiply(q.transpose(), q), Matrix::identity(6)) <= 1e-12);
    CHECK(max_abs_diff(y.matrix(), naive_multiply(x.matrix(), q.transpose())) <= 1e-12);
    CHECK(max_abs_diff(naive_multiply(y.matrix(), q), x.matrix()) <= 1e-12);
  }
  SUBCASE("zero angle conjugation is the identity") {
    CHECK(max_abs_diff(rotation_matrix(5, 0.0, 3), Matrix::identity(5)) <= 1e-12);
  }
  SUBCASE("additive noise is seeded") {
    const FeatureMatrix a = perturb(x, Perturbation::additive_noise(0.1, 4));
    CHECK(a.matrix() == perturb(x, Perturbation::additive_noise(0.1, 4)).matrix());
    CHECK_FALSE(a.matrix() == perturb(x, Perturbation::additive_noise(0.1, 5)).matrix());
    CHECK(perturb(x, Perturbation::additive_noise(0.0, 4)).matrix() == x.matrix());
  }
  SUBCASE("affine brightness") {
    const FeatureMatrix y = perturb(x, Perturbation::affine_brightness(0.7, 0.5));
    CHECK(std::abs(y.matrix()(3, 2) - (0.7 * x.matrix()(3, 2) + 0.5)) <= 1e-15);
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(perturb(x, Perturbation::intensity_scale(0.0)), Error);
    CHECK_THROWS_AS(perturb(x, Perturbation::additive_noise(-1.0, 0)), Error);
  }
}

TEST_CASE("drift under intensity scale") {
  const FeatureMatrix x = scene_features(16, 1000, 3);
  const PipelineConfig cfg = config_for(16);
  for (double s : {0.25, 0.5, 2.0, 7.3}) {
    const DriftReport r = measure_drift(x, Perturbation::intensity_scale(s), kAll, cfg);
    CHECK(r.at("mean") <= 1e-8);
    CHECK(r.at("gem(3)") <= 1e-8);
    // log C picks up 2·ln(s)·I, which normalization cannot remove.
    CHECK(r.at("log_euclidean_cov") > 1e-4);
    for (const auto& e : r.per_aggregator) {
      CHECK(e.drift >= 0.0);
      CHECK(e.drift <= 2.0);
    }

    // s²C_raw + εI = s²(C_raw + ε/s²·I): the only thing scaling changes is the
    // effective regularizer, so the drift is exactly that of swapping ε.
    for (const Aggregator& agg : {Aggregator::ria(), Aggregator::euclidean_cov()}) {
      PipelineConfig a = cfg, b = cfg;
      a.aggregator = b.aggregator = agg;
      b.epsilon = cfg.epsilon / (s * s);
      const double want = 1.0 - descriptor_similarity(ria_descriptor(x, a), ria_descriptor(x, b));
      CHECK(std::abs(r.at(agg.name()) - want) <= 1e-12);
    }
  }
}

TEST_CASE("drift under affine brightness separates first- and second-order pooling") {
  // A mean parallel to the all-ones offset would hide the drift of mean pooling.
  std::vector<double> mean(16);
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = i % 2 ? 1.0 : -0.5;
  const FeatureMatrix x = generate_scene_features(random_place_scene(0, mean, 4.0, 1000, 4), 5);
  const PipelineConfig cfg = config_for(16);
  for (double offset : {0.5, 2.0}) {
    const DriftReport r = measure_drift(x, Perturbation::affine_brightness(1.0, offset), kAll, cfg);
    CHECK(r.at("ria") <= 1e-8);
    CHECK(r.at("mean") > 1e-3);
  }
  // With a scale as well, covariance-based descriptors still only see s².
  const DriftReport r = measure_drift(x, Perturbation::affine_brightness(0.7, 1.0), kAll, cfg);
  CHECK(r.at("ria") <= 1e-8);
  CHECK(r.at("mean") > 1e-3);
}

TEST_CASE("conjugation preserves pairwise descriptor distances") {
  const FeatureMatrix a = scene_features(16, 1000, 5);
  const FeatureMatrix b = scene_features(16, 1000, 6);
  PipelineConfig cfg = config_for(16);
  for (double angle : {M_PI / 12, M_PI / 4, M_PI / 2}) {
    const Perturbation p = Perturbation::orthogonal_conjugation(angle, 7);
    cfg.sqrt_backend = SqrtBackend::eig_oracle;
    CHECK(measure_pairwise_drift(a, b, p, {Aggregator::ria()}, cfg).at("ria") <= 1e-8);
    cfg.sqrt_backend = SqrtBackend::newton_schulz;
    CHECK(measure_pairwise_drift(a, b, p, {Aggregator::ria()}, cfg).at("ria") <= 1e-6);

    // Individual descriptors do move.
    CHECK(measure_drift(a, p, {Aggregator::ria()}, cfg).at("ria") > 1e-6);
  }
}

TEST_CASE("additive noise: ria drifts less than the plain covariance") {
  const FeatureMatrix x = scene_features(16, 1000, 8);
  const PipelineConfig cfg = config_for(16);
  double previous = 0.0;
  for (double sigma : {0.05, 0.1, 0.2, 0.4}) {
    const DriftReport r = measure_drift(x, Perturbation::additive_noise(sigma, 9), kAll, cfg);
    CHECK(r.at("ria") > previous);
    CHECK(r.at("ria") < r.at("euclidean_cov"));
    previous = r.at("ria");
  }
}

TEST_CASE("scene generator") {
  SUBCASE("identity covariance, sample covariance within 3d/sqrt(N)") {
    const std::size_t d = 8, n = 20000;
    const SyntheticScene scene{0, std::vector<double>(d, 0.0),
                               SpdMatrix::checked(SymMatrix::identity(d)), n};
    const FeatureMatrix x = generate_scene_features(scene, 1);
    const double err = frob(sample_covariance(x).matrix() - Matrix::identity(d));
    MESSAGE("covariance error " << err << " vs bound " << 3.0 * d / std::sqrt(double(n)));
    CHECK(err <= 3.0 * d / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("mean is honoured") {
    const FeatureMatrix x = scene_features(4, 20000, 2, 5.0);
    const std::vector<double> m = pool_features(x, Aggregator::mean());
    for (double v : m) CHECK(std::abs(v - 5.0) <= 0.1);
  }
  SUBCASE("deterministic") {
    const SyntheticScene s = random_place_scene(3, std::vector<double>(6, 0.0), 4.0, 100, 11);
    CHECK(generate_scene_features(s, 2).matrix() == generate_scene_features(s, 2).matrix());
    CHECK_FALSE(generate_scene_features(s, 2).matrix() == generate_scene_features(s, 3).matrix());
  }
  SUBCASE("random place covariance spans exactly [1, ratio]") {
    const SyntheticScene s = random_place_scene(0, std::vector<double>(10, 0.0), 4.0, 100, 12);
    const EigenSystem e = sym_eig(s.covariance_shape.sym());
    CHECK(e.eigenvalues.front() == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(e.eigenvalues.back() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("N <= d") {
    const SyntheticScene s{0, std::vector<double>(4, 0.0), SpdMatrix::checked(SymMatrix::identity(4)), 4};
    CHECK_THROWS_AS(generate_scene_features(s, 1), Error);
  }
}

TEST_CASE("swapped principal axes: mean pooling is blind, ria separates") {
  const std::size_t d = 16, n = 1000;
  const auto [scene_a, scene_b] = axis_swapped_scenes(d, 4.0, 1.0, n);
  const PipelineConfig cfg = config_for(d);

  std::vector<GlobalDescriptor> ria_a, ria_b;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    ria_a.push_back(ria_descriptor(generate_scene_features(scene_a, 100 + seed), cfg));
    ria_b.push_back(ria_descriptor(generate_scene_features(scene_b, 200 + seed), cfg));
  }
  double intra = 0.0, inter = INFINITY;
  for (std::size_t i = 0; i < ria_a.size(); ++i)
    for (std::size_t j = 0; j < ria_a.size(); ++j) {
      if (i < j) {
        intra = std::max({intra, descriptor_distance(ria_a[i], ria_a[j]),
                          descriptor_distance(ria_b[i], ria_b[j])});
      }
      inter = std::min(inter, descriptor_distance(ria_a[i], ria_b[j]));
    }
  MESSAGE("inter/intra separation factor " << inter / intra);
  CHECK(inter >= 5.0 * intra);

  // Shifted by a common mean so the mean-pooled vector is not pure noise.
  std::vector<double> shifted(d, 1.0);
  SyntheticScene ma = scene_a, mb = scene_b;
  ma.mean = mb.mean = shifted;
  const GlobalDescriptor mean_a = aggregate_baseline(generate_scene_features(ma, 1), [] {
    PipelineConfig c;
    c.aggregator = Aggregator::mean();
    return c;
  }());
  const GlobalDescriptor mean_b = aggregate_baseline(generate_scene_features(mb, 2), [] {
    PipelineConfig c;
    c.aggregator = Aggregator::mean();
    return c;
  }());
  CHECK(descriptor_similarity(mean_a, mean_b) >= 0.99);
}

TEST_CASE("synthetic benchmark layout") {
  BenchmarkSpec spec;
  spec.places = 3;
  spec.queries_per_place = 2;
  spec.n_patches = 100;
  spec.d = 4;
  const SyntheticBenchmark b = make_synthetic_benchmark(spec);
  CHECK(b.database.size() == 3);
  CHECK(b.queries.size() == 6);
  CHECK(b.database[1].id == "place0001");
  CHECK(b.queries[3].id == "place0001_q1");
  CHECK(b.manifest.queries.size() == 6);
  CHECK_NOTHROW(b.manifest.validate());
  std::set<std::string> ids;
  for (const auto& img : b.database) ids.insert(img.id);
  CHECK(ids.size() == 3);
}

TEST_CASE("drift csv") {
  const std::string csv = drift_csv({{"intensity_scale", 0.5, "ria", 0.0}, {"additive_noise", 0.1, "mean", 0.25}});
  CHECK(csv.rfind("perturbation_kind,magnitude,aggregator,drift\n", 0) == 0);
  CHECK(csv.find("additive_noise,0.1") != std::string::npos);
}
