#include "ria/aggregation.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ria/error.hpp"

namespace ria {

namespace {

template <typename F>
auto run_stage(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Types

FeatureMatrix::FeatureMatrix(Matrix rows) : m_(std::move(rows)) {
  if (m_.rows() < 2) {
    throw Error(ErrorKind::insufficient_samples,
                "feature matrix needs at least 2 patches, got " + std::to_string(m_.rows()));
  }
  if (m_.cols() < 1) throw Error(ErrorKind::dimension, "feature matrix has zero columns");
  for (double v : m_.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_input, "feature matrix has non-finite entry");
  }
}

ProjectionBasis ProjectionBasis::random(std::size_t dim_in, std::size_t dim_out, std::uint64_t seed) {
  return ProjectionBasis(random_orthonormal_basis(dim_in, dim_out, seed), seed);
}

ProjectionBasis ProjectionBasis::identity(std::size_t dim) {
  return ProjectionBasis(Matrix::identity(dim), 0);
}

ProjectionBasis ProjectionBasis::from_matrix(Matrix p, std::uint64_t seed) {
  if (p.cols() == 0 || p.cols() > p.rows()) {
    throw Error(ErrorKind::dimension, "projection basis needs 1 <= cols <= rows");
  }
  const Matrix gram = multiply_at_b(p, p);
  if (frobenius_norm(gram - Matrix::identity(p.cols())) > 1e-10) {
    throw Error(ErrorKind::invalid_input, "projection basis columns are not orthonormal");
  }
  return ProjectionBasis(std::move(p), seed);
}

std::string Aggregator::name() const {
  switch (kind) {
    case AggregatorKind::ria: return "ria";
    case AggregatorKind::euclidean_cov: return "euclidean_cov";
    case AggregatorKind::log_euclidean_cov: return "log_euclidean_cov";
    case AggregatorKind::mean: return "mean";
    case AggregatorKind::gem: {
      std::ostringstream s;
      s << "gem(" << gem_p << ")";
      return s.str();
    }
  }
  return "unknown";
}

Aggregator Aggregator::parse(const std::string& text) {
  if (text == "ria") return ria();
  if (text == "euclidean_cov") return euclidean_cov();
  if (text == "log_euclidean_cov") return log_euclidean_cov();
  if (text == "mean") return mean();
  if (text == "gem") return gem();
  if (text.starts_with("gem(") && text.ends_with(")")) {
    const std::string inner = text.substr(4, text.size() - 5);
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(inner, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == inner.size() && used > 0) return gem(p);
  }
  throw Error(ErrorKind::config, "unknown aggregator '" + text + "'");
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::config, msg); };
  if (d < 1) fail("d must be >= 1");
  if (!(tau >= 0.0) || !std::isfinite(tau)) fail("tau must be >= 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail("epsilon must be > 0");
  if (ns_iterations < 1) fail("ns_iterations must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must lie in (0, 1]");
  if (aggregator.kind == AggregatorKind::gem && !(aggregator.gem_p > 0.0)) {
    fail("gem power p must be > 0");
  }
  if (aggregator.kind == AggregatorKind::ria && sqrt_backend == SqrtBackend::newton_schulz &&
      alpha != 0.5) {
    fail("newton_schulz backend computes only alpha = 0.5; use the eig backend for other powers");
  }
}

GlobalDescriptor GlobalDescriptor::normalized(std::vector<double> values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  const double norm = std::sqrt(sum);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorKind::invalid_input, "cannot normalize a zero or non-finite descriptor");
  }
  for (double& v : values) v /= norm;
  return GlobalDescriptor(std::move(values));
}

GlobalDescriptor GlobalDescriptor::from_unit(std::vector<double> values, double tolerance) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  const double norm = std::sqrt(sum);
  if (!(std::abs(norm - 1.0) <= tolerance)) {
    std::ostringstream msg;
    msg << "descriptor is not unit norm (|v| = " << norm << ")";
    throw Error(ErrorKind::invalid_input, msg.str());
  }
  return GlobalDescriptor(std::move(values));
}

// ---------------------------------------------------------------------------
// Stages

FeatureMatrix project(const FeatureMatrix& features, const ProjectionBasis& basis) {
  if (features.dim() != basis.dim_in()) {
    std::ostringstream msg;
    msg << "features have dim " << features.dim() << " but basis expects " << basis.dim_in();
    throw Error(ErrorKind::dimension, msg.str());
  }
  if (basis.dim_out() >= features.n_patches()) {
    std::ostringstream msg;
    msg << "projected dim d = " << basis.dim_out() << " must be below the patch count N = "
        << features.n_patches() << " for a full-rank covariance";
    throw Error(ErrorKind::rank_deficient, msg.str());
  }
  return FeatureMatrix(multiply(features.matrix(), basis.matrix()));
}

SymMatrix sample_covariance(const FeatureMatrix& projected) {
  const Matrix& x = projected.matrix();
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);

  Matrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = x.row(i);
    auto c = centered.row(i);
    for (std::size_t j = 0; j < d; ++j) c[j] = r[j] - mean[j];
  }
  Matrix cov = multiply_at_b(centered, centered);
  return SymMatrix((1.0 / static_cast<double>(n - 1)) * cov);
}

SymMatrix rectify(const SymMatrix& c_raw, double tau) {
  if (!(tau >= 0.0)) throw Error(ErrorKind::config, "rectify: tau must be >= 0");
  SymMatrix out = c_raw;
  const std::size_t d = c_raw.dim();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (!(std::abs(c_raw(i, j)) > tau)) out.set(i, j, 0.0);
  return out;
}

SpdDescriptor regularize(const SymMatrix& c_rec, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::config, "regularize: epsilon must be > 0");
  Matrix m = c_rec.matrix();
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += epsilon;
  SymMatrix c(m);
  const double scale = frobenius_norm(c);
  return SpdDescriptor{SpdMatrix::trusted(std::move(c)), scale};
}

namespace {

NewtonSchulzResult newton_schulz_impl(const SpdDescriptor& c, int k_iters, bool trace) {
  if (k_iters < 1) throw Error(ErrorKind::config, "newton_schulz: K must be >= 1");
  const double scale = c.frob_scale;
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::invalid_input, "newton_schulz: covariance has zero or non-finite norm");
  }
  const std::size_t d = c.matrix.dim();
  const Matrix eye = Matrix::identity(d);

  Matrix y = (1.0 / scale) * c.matrix.sym().matrix();
  Matrix z = eye;
  const double y0_norm = frobenius_norm(y);

  NewtonSchulzResult out{SymMatrix::zeros(d), {}};
  for (int k = 1; k <= k_iters; ++k) {
    // T = ½(3I − Z·Y); Y ← Y·T, Z ← T·Z
    Matrix t = multiply(z, y);
    if (trace && k > 1) out.residuals.push_back(frobenius_norm(t - eye));
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) t(i, j) = -0.5 * t(i, j);
      t(i, i) += 1.5;
    }
    y = multiply(y, t);
    z = multiply(t, z);

    const double y_norm = frobenius_norm(y);
    if (!std::isfinite(y_norm) || !std::isfinite(frobenius_norm(z)) || y_norm > 1e6 * y0_norm) {
      std::ostringstream msg;
      msg << "newton_schulz diverged at iteration " << k << " (|Y|_F = " << y_norm << ")";
      throw Error(ErrorKind::divergence, msg.str());
    }
  }
  if (trace) out.residuals.push_back(frobenius_norm(multiply(z, y) - eye));

  out.sqrt = SymMatrix(std::sqrt(scale) * y);
  return out;
}

}  // namespace

SymMatrix newton_schulz_sqrt(const SpdDescriptor& c, int k_iters) {
  return newton_schulz_impl(c, k_iters, false).sqrt;
}

NewtonSchulzResult newton_schulz_sqrt_traced(const SpdDescriptor& c, int k_iters) {
  return newton_schulz_impl(c, k_iters, true);
}

std::vector<double> isometric_vectorize(const SymMatrix& m) {
  const std::size_t d = m.dim();
  std::vector<double> v;
  v.reserve(d * (d + 1) / 2);
  for (std::size_t i = 0; i < d; ++i) v.push_back(m(i, i));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) v.push_back(std::numbers::sqrt2 * m(i, j));
  return v;
}

SymMatrix isometric_unvectorize(std::span<const double> v) {
  // D = d(d+1)/2
  const auto d = static_cast<std::size_t>((std::sqrt(8.0 * static_cast<double>(v.size()) + 1.0) - 1.0) / 2.0 + 0.5);
  if (d * (d + 1) / 2 != v.size() || d == 0) {
    throw Error(ErrorKind::dimension, "vector length is not a triangular number");
  }
  Matrix m(d, d);
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) m(i, i) = v[k++];
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double x = v[k++] / std::numbers::sqrt2;
      m(i, j) = x;
      m(j, i) = x;
    }
  return SymMatrix(m);
}

// ---------------------------------------------------------------------------
// Pipelines

SpdDescriptor covariance_descriptor(const FeatureMatrix& features, const ProjectionBasis& basis,
                                    const PipelineConfig& cfg) {
  run_stage("config", [&] { cfg.validate(); });
  if (cfg.d != basis.dim_out()) {
    std::ostringstream msg;
    msg << "config: d = " << cfg.d << " but the projection basis has " << basis.dim_out()
        << " columns";
    throw Error(ErrorKind::config, msg.str());
  }
  const FeatureMatrix x = run_stage("project", [&] { return project(features, basis); });
  const SymMatrix c_raw = run_stage("covariance", [&] { return sample_covariance(x); });
  const SymMatrix c_rec = run_stage("rectify", [&] { return rectify(c_raw, cfg.tau); });
  return run_stage("regularize", [&] { return regularize(c_rec, cfg.epsilon); });
}

GlobalDescriptor map_descriptor(const SpdDescriptor& c, const PipelineConfig& cfg) {
  run_stage("config", [&] { cfg.validate(); });
  const SymMatrix mapped = run_stage("linearize", [&]() -> SymMatrix {
    switch (cfg.aggregator.kind) {
      case AggregatorKind::euclidean_cov:
        return c.matrix.sym();
      case AggregatorKind::log_euclidean_cov:
        return matrix_function(c.matrix, MatrixFunction::log());
      case AggregatorKind::ria:
        if (cfg.sqrt_backend == SqrtBackend::newton_schulz) {
          return newton_schulz_sqrt(c, cfg.ns_iterations);
        }
        return matrix_function(c.matrix, MatrixFunction::power(cfg.alpha));
      case AggregatorKind::mean:
      case AggregatorKind::gem:
        break;
    }
    throw Error(ErrorKind::config, "first-order aggregator has no covariance mapping");
  });
  return run_stage("vectorize",
                   [&] { return GlobalDescriptor::normalized(isometric_vectorize(mapped)); });
}

GlobalDescriptor aggregate(const FeatureMatrix& features, const ProjectionBasis& basis,
                           const PipelineConfig& cfg) {
  if (cfg.aggregator.first_order()) return aggregate_baseline(features, cfg);
  return map_descriptor(covariance_descriptor(features, basis, cfg), cfg);
}

std::vector<double> pool_features(const FeatureMatrix& features, const Aggregator& agg) {
  if (!agg.first_order()) {
    throw Error(ErrorKind::config, "pooling expects mean or gem, got " + agg.name());
  }
  if (agg.kind == AggregatorKind::gem && !(agg.gem_p > 0.0)) {
    throw Error(ErrorKind::config, "gem power p must be > 0");
  }
  const Matrix& x = features.matrix();
  const std::size_t n = x.rows();
  const std::size_t dim = x.cols();

  std::vector<double> pooled(dim, 0.0);
  if (agg.kind == AggregatorKind::mean) {
    for (std::size_t i = 0; i < n; ++i) {
      auto r = x.row(i);
      for (std::size_t j = 0; j < dim; ++j) pooled[j] += r[j];
    }
    for (double& v : pooled) v /= static_cast<double>(n);
  } else {
    const double p = agg.gem_p;
    for (std::size_t i = 0; i < n; ++i) {
      auto r = x.row(i);
      for (std::size_t j = 0; j < dim; ++j) pooled[j] += std::pow(std::max(r[j], 0.0), p);
    }
    for (double& v : pooled) v = std::pow(v / static_cast<double>(n), 1.0 / p);
  }
  return pooled;
}

GlobalDescriptor aggregate_baseline(const FeatureMatrix& features, const PipelineConfig& cfg) {
  std::vector<double> pooled = pool_features(features, cfg.aggregator);
  return run_stage("normalize", [&] { return GlobalDescriptor::normalized(std::move(pooled)); });
}

}  // namespace ria
