#include "ria/invariance_lab.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "ria/error.hpp"
#include "ria/metrics.hpp"
#include "ria/random.hpp"

namespace ria {

Perturbation Perturbation::intensity_scale(double s) {
  if (!(s > 0.0)) throw Error(ErrorKind::config, "intensity_scale requires s > 0");
  return {Kind::intensity_scale, s, 0.0, 0};
}

Perturbation Perturbation::orthogonal_conjugation(double angle, std::uint64_t seed) {
  return {Kind::orthogonal_conjugation, angle, 0.0, seed};
}

Perturbation Perturbation::additive_noise(double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::config, "additive_noise requires sigma >= 0");
  return {Kind::additive_noise, sigma, 0.0, seed};
}

Perturbation Perturbation::affine_brightness(double scale, double offset) {
  if (!(scale > 0.0)) throw Error(ErrorKind::config, "affine_brightness requires scale > 0");
  return {Kind::affine_brightness, scale, offset, 0};
}

std::string Perturbation::kind_name() const {
  switch (kind) {
    case Kind::intensity_scale: return "intensity_scale";
    case Kind::orthogonal_conjugation: return "orthogonal_conjugation";
    case Kind::additive_noise: return "additive_noise";
    case Kind::affine_brightness: return "affine_brightness";
  }
  return "unknown";
}

Matrix rotation_matrix(std::size_t d, double angle, std::uint64_t seed) {
  Matrix r = Matrix::identity(d);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::size_t i = 0; i + 1 < d; i += 2) {
    r(i, i) = c;
    r(i, i + 1) = -s;
    r(i + 1, i) = s;
    r(i + 1, i + 1) = c;
  }
  const Matrix v = random_orthonormal_basis(d, d, seed);
  return multiply(multiply(v, r), v.transpose());
}

FeatureMatrix perturb(const FeatureMatrix& features, const Perturbation& p) {
  const Matrix& x = features.matrix();
  switch (p.kind) {
    case Perturbation::Kind::intensity_scale:
      return FeatureMatrix(p.magnitude * x);
    case Perturbation::Kind::affine_brightness: {
      Matrix out = p.magnitude * x;
      for (double& v : out.data()) v += p.offset;
      return FeatureMatrix(std::move(out));
    }
    case Perturbation::Kind::orthogonal_conjugation: {
      // Rows are xᵢᵀ, so x → Q·x is X·Qᵀ.
      const Matrix q = rotation_matrix(x.cols(), p.magnitude, p.seed);
      return FeatureMatrix(multiply(x, q.transpose()));
    }
    case Perturbation::Kind::additive_noise: {
      Matrix out = x;
      CounterRng rng(p.seed);
      for (double& v : out.data()) v += p.magnitude * rng.normal();
      return FeatureMatrix(std::move(out));
    }
  }
  throw Error(ErrorKind::config, "unknown perturbation");
}

double DriftReport::at(const std::string& aggregator) const {
  for (const auto& e : per_aggregator) {
    if (e.aggregator == aggregator) return e.drift;
  }
  throw Error(ErrorKind::invalid_input, "drift report has no aggregator '" + aggregator + "'");
}

namespace {

PipelineConfig lab_config(const PipelineConfig& cfg, const Aggregator& agg, std::size_t d) {
  PipelineConfig out = cfg;
  out.aggregator = agg;
  out.d = d;
  return out;
}

}  // namespace

DriftReport measure_drift(const FeatureMatrix& features, const Perturbation& p,
                          const std::vector<Aggregator>& aggregators, const PipelineConfig& cfg) {
  const ProjectionBasis basis = ProjectionBasis::identity(features.dim());
  const FeatureMatrix moved = perturb(features, p);

  DriftReport report{p, {}};
  for (const auto& agg : aggregators) {
    const PipelineConfig c = lab_config(cfg, agg, features.dim());
    const double cosine =
        descriptor_similarity(aggregate(features, basis, c), aggregate(moved, basis, c));
    report.per_aggregator.push_back({agg.name(), std::clamp(1.0 - cosine, 0.0, 2.0)});
  }
  return report;
}

DriftReport measure_pairwise_drift(const FeatureMatrix& first, const FeatureMatrix& second,
                                   const Perturbation& p,
                                   const std::vector<Aggregator>& aggregators,
                                   const PipelineConfig& cfg) {
  if (first.dim() != second.dim()) {
    throw Error(ErrorKind::dimension, "measure_pairwise_drift: feature dims differ");
  }
  const ProjectionBasis basis = ProjectionBasis::identity(first.dim());
  const FeatureMatrix first_moved = perturb(first, p);
  const FeatureMatrix second_moved = perturb(second, p);

  DriftReport report{p, {}};
  for (const auto& agg : aggregators) {
    const PipelineConfig c = lab_config(cfg, agg, first.dim());
    const double before =
        descriptor_distance(aggregate(first, basis, c), aggregate(second, basis, c));
    const double after =
        descriptor_distance(aggregate(first_moved, basis, c), aggregate(second_moved, basis, c));
    report.per_aggregator.push_back({agg.name(), std::abs(after - before)});
  }
  return report;
}

std::string drift_csv(const std::vector<DriftRow>& rows) {
  std::ostringstream out;
  out << "perturbation_kind,magnitude,aggregator,drift\n";
  for (const auto& r : rows) {
    out << r.perturbation_kind << ',' << std::setprecision(6) << r.magnitude << ','
        << r.aggregator << ',' << std::setprecision(9) << std::scientific << r.drift
        << std::defaultfloat << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Scenes

FeatureMatrix generate_scene_features(const SyntheticScene& scene, std::uint64_t seed) {
  const std::size_t d = scene.covariance_shape.dim();
  if (scene.mean.size() != d) {
    throw Error(ErrorKind::dimension, "scene mean and covariance dims differ");
  }
  if (scene.n_patches <= d) {
    std::ostringstream msg;
    msg << "scene needs more patches (" << scene.n_patches << ") than dims (" << d << ")";
    throw Error(ErrorKind::rank_deficient, msg.str());
  }
  // Re-check definiteness: the shape may have come from SpdMatrix::trusted.
  const EigenSystem eig = sym_eig(scene.covariance_shape.sym());
  if (!(eig.eigenvalues.back() > 0.0)) {
    throw Error(ErrorKind::singular, "scene covariance is not positive definite");
  }
  const SymMatrix root = matrix_function(eig, MatrixFunction::power(0.5));

  Matrix z(scene.n_patches, d);
  CounterRng rng(seed);
  for (double& v : z.data()) v = rng.normal();
  Matrix x = multiply(z, root.matrix());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) r[j] += scene.mean[j];
  }
  return FeatureMatrix(std::move(x));
}

SyntheticScene random_place_scene(int place_id, std::vector<double> mean, double eigen_ratio,
                                  std::size_t n_patches, std::uint64_t seed) {
  const std::size_t d = mean.size();
  if (d < 1) throw Error(ErrorKind::dimension, "scene needs d >= 1");
  if (!(eigen_ratio >= 1.0)) throw Error(ErrorKind::config, "eigen_ratio must be >= 1");

  CounterRng rng(CounterRng::mix(seed, 0xC0FFEE));
  std::vector<double> spectrum(d);
  const double log_ratio = std::log(eigen_ratio);
  for (auto& l : spectrum) l = std::exp(log_ratio * rng.uniform());
  spectrum.front() = 1.0;
  if (d > 1) spectrum.back() = eigen_ratio;

  const Matrix v = random_orthonormal_basis(d, d, seed);
  Matrix scaled = v;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) scaled(i, k) *= spectrum[k];
  SymMatrix cov(multiply(scaled, v.transpose()));
  return {place_id, std::move(mean), SpdMatrix::trusted(std::move(cov)), n_patches};
}

std::pair<SyntheticScene, SyntheticScene> axis_swapped_scenes(std::size_t d, double sigma_high,
                                                              double sigma_low,
                                                              std::size_t n_patches) {
  if (d < 2) throw Error(ErrorKind::dimension, "axis_swapped_scenes needs d >= 2");
  std::vector<double> a(d), b(d);
  for (std::size_t i = 0; i < d; ++i) {
    const bool first_half = i < d / 2;
    a[i] = first_half ? sigma_high : sigma_low;
    b[i] = first_half ? sigma_low : sigma_high;
  }
  return {
      SyntheticScene{0, std::vector<double>(d, 0.0), SpdMatrix::checked(SymMatrix::diagonal(a)),
                     n_patches},
      SyntheticScene{1, std::vector<double>(d, 0.0), SpdMatrix::checked(SymMatrix::diagonal(b)),
                     n_patches},
  };
}

SyntheticBenchmark make_synthetic_benchmark(const BenchmarkSpec& spec) {
  SyntheticBenchmark bench;
  const std::vector<double> mean(spec.d, spec.shared_mean);
  auto place_name = [](std::size_t p) {
    std::ostringstream s;
    s << "place" << std::setw(4) << std::setfill('0') << p;
    return s.str();
  };

  for (std::size_t p = 0; p < spec.places; ++p) {
    const std::uint64_t place_seed = CounterRng::mix(spec.seed, p);
    const SyntheticScene scene = random_place_scene(static_cast<int>(p), mean, spec.eigen_ratio,
                                                    spec.n_patches, place_seed);
    const std::string db_id = place_name(p);
    bench.database.push_back({db_id, generate_scene_features(scene, CounterRng::mix(place_seed, 1))});
    bench.manifest.database.push_back(db_id);

    for (std::size_t q = 0; q < spec.queries_per_place; ++q) {
      const std::string q_id = db_id + "_q" + std::to_string(q);
      bench.queries.push_back(
          {q_id, generate_scene_features(scene, CounterRng::mix(place_seed, 100 + q))});
      bench.manifest.queries.push_back({q_id, {db_id}});
    }
  }
  return bench;
}

}  // namespace ria
