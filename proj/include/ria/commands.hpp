#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ria/aggregation.hpp"
#include "ria/invariance_lab.hpp"
#include "ria/io.hpp"
#include "ria/retrieval.hpp"

namespace ria {

namespace fs = std::filesystem;

struct RunConfig {
  PipelineConfig pipeline;

  fs::path features_dir;        // aggregate, invariance
  fs::path perturbed_dir;       // invariance: matching files of perturbed images
  fs::path db_archive;          // eval
  fs::path query_archive;       // eval
  fs::path db_features_dir;     // ablate
  fs::path query_features_dir;  // ablate
  fs::path manifest;            // eval, ablate
  fs::path out;                 // primary output file

  std::vector<std::size_t> ks = {1, 5, 10};
  std::vector<Aggregator> aggregators = {Aggregator::ria(), Aggregator::euclidean_cov(),
                                         Aggregator::log_euclidean_cov(), Aggregator::mean(),
                                         Aggregator::gem(3.0)};
  /// Synthetic scenes used by `invariance` when no features_dir is given.
  std::size_t synthetic_images = 8;
  std::size_t synthetic_patches = 1000;
};

/// Code version baked into archive metadata.
std::string code_version();

/// `*.riaf` files in a directory, sorted by file name.
std::vector<fs::path> list_feature_files(const fs::path& dir);

struct NamedFeatures {
  std::string id;  // file stem
  FeatureMatrix features;
};

/// Reads every file in parallel. All malformed files are reported together in
/// one ErrorKind::format error naming each file.
std::vector<NamedFeatures> load_feature_dir(const fs::path& dir);

/// One descriptor per feature file (id = stem) with run metadata attached.
/// Fails before aggregating if any file has N ≤ d, listing those files.
DescriptorArchive aggregate_features(const std::vector<NamedFeatures>& images,
                                     const PipelineConfig& cfg);

/// Reads features_dir, writes the archive to cfg.out.
DescriptorArchive cmd_aggregate(const RunConfig& cfg);

/// Reads both archives and the manifest, writes "k,recall" CSV to cfg.out
/// when set.
RecallTable cmd_eval(const RunConfig& cfg);

struct AblationRow {
  std::string variant;
  double r1;
  double r5;
};

/// Aggregator and α sweep over cached covariances. Rows, in order: mean,
/// gem(3), euclidean_cov, log_euclidean_cov, ria (configured backend), then
/// alpha=1.0, 0.75, 0.5, 0.25, 0.1 through the eig backend.
std::vector<AblationRow> run_ablation(const std::vector<NamedFeatures>& database,
                                      const std::vector<NamedFeatures>& queries,
                                      const DatasetManifest& manifest, const PipelineConfig& cfg);
std::string ablation_csv(const std::vector<AblationRow>& rows);

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg);

/// Drift sweep: intensity scale, affine brightness, rotation (per-descriptor
/// and pairwise-distance), additive noise; plus "external" rows when a
/// perturbed_dir is given. Features are projected with the configured basis
/// before perturbation.
std::vector<DriftRow> run_invariance_sweep(const std::vector<FeatureMatrix>& projected,
                                           const std::vector<Aggregator>& aggregators,
                                           const PipelineConfig& cfg);

std::vector<DriftRow> cmd_invariance(const RunConfig& cfg);

struct GeoPoint {
  std::string id;
  double lat;
  double lon;
};

/// Great-circle distance in meters on a 6371 km sphere.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

/// Parses "id,lat,lon" lines; a non-numeric first line is taken as a header.
std::vector<GeoPoint> parse_geo_csv(const std::string& text);

struct GeoManifest {
  DatasetManifest manifest;
  std::vector<std::string> warnings;  // queries dropped for having no positive

  std::string to_json() const;
};

GeoManifest build_geo_manifest(const std::vector<GeoPoint>& database,
                               const std::vector<GeoPoint>& queries, double radius_m);

}  // namespace ria
