#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ria/linalg.hpp"

namespace ria {

/// N×D patch activations for one image. N ≥ 2, all entries finite.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(Matrix rows);

  std::size_t n_patches() const { return m_.rows(); }
  std::size_t dim() const { return m_.cols(); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

/// Fixed D_in×d map with orthonormal columns, shared across a whole dataset.
class ProjectionBasis {
 public:
  static ProjectionBasis random(std::size_t dim_in, std::size_t dim_out, std::uint64_t seed);
  static ProjectionBasis identity(std::size_t dim);
  /// Wraps an existing matrix after checking ‖PᵀP − I‖_F ≤ 1e-10.
  static ProjectionBasis from_matrix(Matrix p, std::uint64_t seed = 0);

  std::size_t dim_in() const { return p_.rows(); }
  std::size_t dim_out() const { return p_.cols(); }
  std::uint64_t seed() const { return seed_; }
  const Matrix& matrix() const { return p_; }

 private:
  ProjectionBasis(Matrix p, std::uint64_t seed) : p_(std::move(p)), seed_(seed) {}
  Matrix p_;
  std::uint64_t seed_;
};

enum class SqrtBackend { newton_schulz, eig_oracle };

enum class AggregatorKind { ria, euclidean_cov, log_euclidean_cov, mean, gem };

struct Aggregator {
  AggregatorKind kind = AggregatorKind::ria;
  double gem_p = 3.0;

  static Aggregator ria() { return {AggregatorKind::ria}; }
  static Aggregator euclidean_cov() { return {AggregatorKind::euclidean_cov}; }
  static Aggregator log_euclidean_cov() { return {AggregatorKind::log_euclidean_cov}; }
  static Aggregator mean() { return {AggregatorKind::mean}; }
  static Aggregator gem(double p = 3.0) { return {AggregatorKind::gem, p}; }

  bool first_order() const {
    return kind == AggregatorKind::mean || kind == AggregatorKind::gem;
  }

  /// "ria", "euclidean_cov", "log_euclidean_cov", "mean", "gem(3)".
  std::string name() const;
  /// Inverse of name(); "gem" alone means gem(3).
  static Aggregator parse(const std::string& text);

  friend bool operator==(const Aggregator&, const Aggregator&) = default;
};

struct PipelineConfig {
  std::size_t d = 64;
  double tau = 0.0;
  double epsilon = 1e-4;
  int ns_iterations = 3;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  SqrtBackend sqrt_backend = SqrtBackend::newton_schulz;
  Aggregator aggregator = Aggregator::ria();

  /// Throws ErrorKind::config on any out-of-range field.
  void validate() const;
};

/// Regularized covariance C = R_τ(C_raw) + εI with its Frobenius norm cached.
struct SpdDescriptor {
  SpdMatrix matrix;
  double frob_scale;
};

/// Unit-norm retrieval embedding.
class GlobalDescriptor {
 public:
  /// L2-normalizes `values`; throws ErrorKind::invalid_input for a zero or
  /// non-finite vector.
  static GlobalDescriptor normalized(std::vector<double> values);
  /// Takes values as-is after checking |‖v‖₂ − 1| ≤ tolerance.
  static GlobalDescriptor from_unit(std::vector<double> values, double tolerance = 1e-6);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const GlobalDescriptor&, const GlobalDescriptor&) = default;

 private:
  explicit GlobalDescriptor(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

/// X = X_raw·P. Fails when P's input dim does not match, or when d ≥ N.
FeatureMatrix project(const FeatureMatrix& features, const ProjectionBasis& basis);

/// Unbiased (N−1) sample covariance of the rows, centered on the row mean.
SymMatrix sample_covariance(const FeatureMatrix& projected);

/// Keeps the diagonal and every off-diagonal entry with |c| > tau.
SymMatrix rectify(const SymMatrix& c_raw, double tau);

/// C_rec + εI.
SpdDescriptor regularize(const SymMatrix& c_rec, double epsilon);

struct NewtonSchulzResult {
  SymMatrix sqrt;
  /// ‖Z_k·Y_k − I‖_F after each iteration k = 1..K (only when tracing).
  std::vector<double> residuals;
};

/// Coupled Newton-Schulz square root with Frobenius pre-normalization and
/// √‖C‖_F post-compensation. Throws ErrorKind::divergence if an iterate turns
/// non-finite or ‖Y_k‖_F grows past 1e6·‖Y_0‖_F.
SymMatrix newton_schulz_sqrt(const SpdDescriptor& c, int k_iters);
NewtonSchulzResult newton_schulz_sqrt_traced(const SpdDescriptor& c, int k_iters);

/// [m_11..m_dd, √2·m_12, √2·m_13, .., √2·m_(d-1)d]: diagonal first, then the
/// strict upper triangle row by row. ⟨vec A, vec B⟩ = tr(AB).
std::vector<double> isometric_vectorize(const SymMatrix& m);
/// Inverse of isometric_vectorize.
SymMatrix isometric_unvectorize(std::span<const double> v);

/// Project, covariance, rectify, regularize.
SpdDescriptor covariance_descriptor(const FeatureMatrix& features,
                                    const ProjectionBasis& basis,
                                    const PipelineConfig& cfg);

/// Second-order mapping of an already regularized covariance, per cfg.aggregator
/// (ria: C^α via Newton-Schulz or eig; euclidean_cov: C; log_euclidean_cov: log C),
/// then vectorize and normalize.
GlobalDescriptor map_descriptor(const SpdDescriptor& c, const PipelineConfig& cfg);

/// Full pipeline. First-order aggregators bypass the projection and run on raw features.
GlobalDescriptor aggregate(const FeatureMatrix& features, const ProjectionBasis& basis,
                           const PipelineConfig& cfg);

/// Mean or GeM pooling over patches before normalization. GeM clamps negatives
/// to 0 so fractional powers stay real.
std::vector<double> pool_features(const FeatureMatrix& features, const Aggregator& agg);

/// pool_features, L2-normalized.
GlobalDescriptor aggregate_baseline(const FeatureMatrix& features, const PipelineConfig& cfg);

}  // namespace ria
