#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ria/aggregation.hpp"
#include "ria/retrieval.hpp"

namespace ria {

/// Feature-space perturbation models for projected N×d features.
///
///   intensity_scale(s)            x → s·x                 (global illumination)
///   orthogonal_conjugation(θ)     x → Q·x, Q ∈ O(d)       (viewpoint)
///   additive_noise(σ)             x → x + n, n ~ N(0, σ²I)
///   affine_brightness(s, b)       x → s·x + b·1           (brightness with offset)
///
/// For conjugation Q = V·R(θ)·Vᵀ: R rotates consecutive coordinate pairs by θ
/// radians and V is a seeded random orthogonal matrix, so θ = 0 is the identity.
struct Perturbation {
  enum class Kind { intensity_scale, orthogonal_conjugation, additive_noise, affine_brightness };

  Kind kind = Kind::intensity_scale;
  double magnitude = 1.0;
  double offset = 0.0;
  std::uint64_t seed = 0;

  static Perturbation intensity_scale(double s);
  static Perturbation orthogonal_conjugation(double angle, std::uint64_t seed);
  static Perturbation additive_noise(double sigma, std::uint64_t seed);
  static Perturbation affine_brightness(double scale, double offset);

  std::string kind_name() const;
};

/// Q = V·R(angle)·Vᵀ as used by orthogonal_conjugation.
Matrix rotation_matrix(std::size_t d, double angle, std::uint64_t seed);

FeatureMatrix perturb(const FeatureMatrix& features, const Perturbation& p);

struct DriftEntry {
  std::string aggregator;
  double drift;
};

struct DriftReport {
  Perturbation perturbation;
  std::vector<DriftEntry> per_aggregator;

  double at(const std::string& aggregator) const;
};

/// 1 − cos(Φ(X), Φ(perturb(X))) per aggregator, clamped to [0, 2]. Features
/// are taken as already projected: each aggregator runs with an identity basis
/// and cfg.d set to the feature dim.
DriftReport measure_drift(const FeatureMatrix& features, const Perturbation& p,
                          const std::vector<Aggregator>& aggregators, const PipelineConfig& cfg);

/// |‖Φ(X₁') − Φ(X₂')‖ − ‖Φ(X₁) − Φ(X₂)‖| per aggregator: how much a perturbation
/// applied to both images changes their descriptor distance.
DriftReport measure_pairwise_drift(const FeatureMatrix& first, const FeatureMatrix& second,
                                   const Perturbation& p,
                                   const std::vector<Aggregator>& aggregators,
                                   const PipelineConfig& cfg);

struct DriftRow {
  std::string perturbation_kind;
  double magnitude;
  std::string aggregator;
  double drift;
};

/// perturbation_kind,magnitude,aggregator,drift
std::string drift_csv(const std::vector<DriftRow>& rows);

struct SyntheticScene {
  int place_id = 0;
  std::vector<double> mean;
  SpdMatrix covariance_shape;
  std::size_t n_patches = 0;
};

/// N i.i.d. rows from N(mean, covariance_shape) via the spectral square root.
FeatureMatrix generate_scene_features(const SyntheticScene& scene, std::uint64_t seed);

/// Covariance V·diag(λ)·Vᵀ with λ log-uniform in [1, eigen_ratio] (both ends
/// hit exactly) and V random orthogonal; all places share `mean`.
SyntheticScene random_place_scene(int place_id, std::vector<double> mean, double eigen_ratio,
                                  std::size_t n_patches, std::uint64_t seed);

/// Two zero-mean scenes with diagonal covariances: the first half of the axes
/// at sigma_high and the rest at sigma_low, and the mirror image.
std::pair<SyntheticScene, SyntheticScene> axis_swapped_scenes(std::size_t d, double sigma_high,
                                                              double sigma_low,
                                                              std::size_t n_patches);

struct SyntheticImage {
  std::string id;
  FeatureMatrix features;
};

struct SyntheticBenchmark {
  std::vector<SyntheticImage> database;
  std::vector<SyntheticImage> queries;
  DatasetManifest manifest;
};

struct BenchmarkSpec {
  std::size_t places = 100;
  std::size_t queries_per_place = 5;
  std::size_t n_patches = 1000;
  std::size_t d = 16;
  double eigen_ratio = 4.0;
  double shared_mean = 1.0;  // every coordinate of every scene's mean
  std::uint64_t seed = 1;
};

/// Equal-mean places that differ only in covariance shape. Each place has one
/// database image and `queries_per_place` independently resampled queries.
SyntheticBenchmark make_synthetic_benchmark(const BenchmarkSpec& spec);

}  // namespace ria
