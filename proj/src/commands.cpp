#include "ria/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "ria/error.hpp"
#include "ria/metrics.hpp"
#include "ria/parallel.hpp"
#include "ria/random.hpp"

#ifndef RIA_VERSION
#define RIA_VERSION "dev"
#endif

namespace ria {

std::string code_version() { return RIA_VERSION; }

namespace {

const char* backend_name(SqrtBackend b) {
  return b == SqrtBackend::newton_schulz ? "newton-schulz" : "eig";
}

nlohmann::json config_json(const PipelineConfig& cfg) {
  return {
      {"dim", cfg.d},
      {"tau", cfg.tau},
      {"epsilon", cfg.epsilon},
      {"ns_iterations", cfg.ns_iterations},
      {"alpha", cfg.alpha},
      {"seed", cfg.seed},
      {"backend", backend_name(cfg.sqrt_backend)},
      {"aggregator", cfg.aggregator.name()},
  };
}

void require_path(const fs::path& p, const char* flag) {
  if (p.empty()) throw Error(ErrorKind::config, std::string("missing required ") + flag);
}

}  // namespace

// ---------------------------------------------------------------------------
// Loading

std::vector<fs::path> list_feature_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".riaf") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

std::vector<NamedFeatures> load_feature_dir(const fs::path& dir) {
  const auto files = list_feature_files(dir);
  if (files.empty()) throw Error(ErrorKind::io, "no .riaf files in " + dir.string());

  std::vector<std::optional<FeatureMatrix>> loaded(files.size());
  std::vector<std::string> errors(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    try {
      loaded[i] = read_feature_file(files[i]);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  std::ostringstream report;
  std::size_t failures = 0;
  for (const auto& e : errors) {
    if (!e.empty()) {
      report << "\n  " << e;
      ++failures;
    }
  }
  if (failures > 0) {
    throw Error(ErrorKind::format,
                std::to_string(failures) + " malformed feature file(s):" + report.str());
  }

  std::vector<NamedFeatures> out;
  out.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    out.push_back({files[i].stem().string(), std::move(*loaded[i])});
  }
  return out;
}

// ---------------------------------------------------------------------------
// aggregate

namespace {

struct Shape {
  std::string id;
  std::size_t n_patches;
  std::size_t dim;
};

void append_shapes(std::vector<Shape>& out, const std::vector<NamedFeatures>& images) {
  for (const auto& img : images) out.push_back({img.id, img.features.n_patches(), img.features.dim()});
}

ProjectionBasis basis_for(const std::vector<Shape>& shapes, const PipelineConfig& cfg) {
  const std::size_t dim_in = shapes.front().dim;
  std::ostringstream mismatched;
  std::ostringstream too_small;
  for (const auto& img : shapes) {
    if (img.dim != dim_in) {
      mismatched << "\n  " << img.id << " (dim " << img.dim << ")";
    }
    if (img.n_patches <= cfg.d) {
      too_small << "\n  " << img.id << " (N = " << img.n_patches << ")";
    }
  }
  if (!mismatched.str().empty()) {
    throw Error(ErrorKind::dimension,
                "feature dims differ from " + std::to_string(dim_in) + ":" + mismatched.str());
  }
  if (!too_small.str().empty() && !cfg.aggregator.first_order()) {
    throw Error(ErrorKind::rank_deficient,
                "projected dim d = " + std::to_string(cfg.d) +
                    " is not below the patch count of:" + too_small.str());
  }
  if (cfg.d > dim_in) {
    throw Error(ErrorKind::dimension, "projected dim d = " + std::to_string(cfg.d) +
                                          " exceeds the feature dim " + std::to_string(dim_in));
  }
  return ProjectionBasis::random(dim_in, cfg.d, cfg.seed);
}

ProjectionBasis basis_for(const std::vector<NamedFeatures>& images, const PipelineConfig& cfg) {
  std::vector<Shape> shapes;
  append_shapes(shapes, images);
  return basis_for(shapes, cfg);
}

}  // namespace

DescriptorArchive aggregate_features(const std::vector<NamedFeatures>& images,
                                     const PipelineConfig& cfg) {
  if (images.empty()) throw Error(ErrorKind::invalid_input, "no images to aggregate");
  cfg.validate();
  const ProjectionBasis basis = basis_for(images, cfg);

  std::vector<std::optional<GlobalDescriptor>> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    try {
      out[i] = aggregate(images[i].features, basis, cfg);
    } catch (const Error& e) {
      throw e.with_stage(images[i].id);
    }
  });

  DescriptorArchive archive;
  for (std::size_t i = 0; i < images.size(); ++i) {
    archive.items.push_back({images[i].id, std::move(*out[i])});
  }
  archive.metadata = {
      {"config", config_json(cfg)},
      {"code_version", code_version()},
      {"rng", "splitmix64-counter/" + std::to_string(CounterRng::kVersion)},
      {"dim_in", images.front().features.dim()},
  };
  return archive;
}

DescriptorArchive cmd_aggregate(const RunConfig& cfg) {
  require_path(cfg.features_dir, "--features");
  require_path(cfg.out, "--out");
  DescriptorArchive archive = aggregate_features(load_feature_dir(cfg.features_dir), cfg.pipeline);
  write_archive(cfg.out, archive);
  return archive;
}

// ---------------------------------------------------------------------------
// eval

RecallTable cmd_eval(const RunConfig& cfg) {
  require_path(cfg.db_archive, "--db");
  require_path(cfg.query_archive, "--queries");
  require_path(cfg.manifest, "--manifest");

  const DatasetManifest manifest = manifest_from_json(read_text_file(cfg.manifest));
  DescriptorArchive db = read_archive(cfg.db_archive);
  const DescriptorArchive queries = read_archive(cfg.query_archive);
  if (queries.items.empty() || manifest.queries.empty()) {
    throw Error(ErrorKind::invalid_input, "eval: query list is empty");
  }
  const DescriptorIndex index = build_index(std::move(db.items));
  const RecallTable table = evaluate_recall(index, queries.items, manifest, cfg.ks);
  if (!cfg.out.empty()) write_file_atomic(cfg.out, table.to_csv());
  return table;
}

// ---------------------------------------------------------------------------
// ablate

namespace {

struct CachedImage {
  std::string id;
  std::optional<SpdDescriptor> covariance;
  std::optional<EigenSystem> eig;
  std::vector<double> mean_pool;
  std::vector<double> gem_pool;
};

std::vector<CachedImage> cache_images(const std::vector<NamedFeatures>& images,
                                      const ProjectionBasis& basis, const PipelineConfig& cfg) {
  std::vector<CachedImage> cached(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    try {
      CachedImage& c = cached[i];
      c.id = images[i].id;
      c.covariance = covariance_descriptor(images[i].features, basis, cfg);
      c.eig = sym_eig(c.covariance->matrix.sym());
      c.mean_pool = pool_features(images[i].features, Aggregator::mean());
      c.gem_pool = pool_features(images[i].features, Aggregator::gem(3.0));
    } catch (const Error& e) {
      throw e.with_stage(images[i].id);
    }
  });
  return cached;
}

using Describe = std::function<GlobalDescriptor(const CachedImage&)>;

AblationRow evaluate_variant(const std::string& name, const Describe& describe,
                             const std::vector<CachedImage>& db,
                             const std::vector<CachedImage>& queries,
                             const DatasetManifest& manifest) {
  std::vector<std::optional<GlobalDescriptor>> db_desc(db.size());
  std::vector<std::optional<GlobalDescriptor>> q_desc(queries.size());
  parallel_for(db.size() + queries.size(), [&](std::size_t i) {
    if (i < db.size()) {
      db_desc[i] = describe(db[i]);
    } else {
      q_desc[i - db.size()] = describe(queries[i - db.size()]);
    }
  });
  std::vector<IndexedDescriptor> db_items;
  for (std::size_t i = 0; i < db.size(); ++i) db_items.push_back({db[i].id, std::move(*db_desc[i])});
  std::vector<IndexedDescriptor> q_items;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    q_items.push_back({queries[i].id, std::move(*q_desc[i])});
  }
  const RecallTable t = evaluate_recall(build_index(std::move(db_items)), q_items, manifest, {1, 5});
  return {name, t.recall.at(1), t.recall.at(5)};
}

std::string alpha_label(double alpha) {
  std::ostringstream s;
  s << "alpha=" << std::fixed << std::setprecision(2) << alpha;
  return s.str();
}

}  // namespace

std::vector<AblationRow> run_ablation(const std::vector<NamedFeatures>& database,
                                      const std::vector<NamedFeatures>& queries,
                                      const DatasetManifest& manifest, const PipelineConfig& cfg) {
  PipelineConfig ria_cfg = cfg;
  ria_cfg.aggregator = Aggregator::ria();
  ria_cfg.validate();
  manifest.validate();
  if (database.empty() || queries.empty()) {
    throw Error(ErrorKind::invalid_input, "ablate: database and queries must be nonempty");
  }

  std::vector<Shape> shapes;
  append_shapes(shapes, database);
  append_shapes(shapes, queries);
  const ProjectionBasis basis = basis_for(shapes, ria_cfg);

  const auto db = cache_images(database, basis, ria_cfg);
  const auto qs = cache_images(queries, basis, ria_cfg);

  auto normalized = [](std::vector<double> v) { return GlobalDescriptor::normalized(std::move(v)); };
  auto vec = [](const SymMatrix& m) { return GlobalDescriptor::normalized(isometric_vectorize(m)); };

  std::vector<std::pair<std::string, Describe>> variants;
  variants.emplace_back("mean", [&](const CachedImage& c) { return normalized(c.mean_pool); });
  variants.emplace_back("gem(3)", [&](const CachedImage& c) { return normalized(c.gem_pool); });
  variants.emplace_back("euclidean_cov",
                        [&](const CachedImage& c) { return vec(c.covariance->matrix.sym()); });
  variants.emplace_back("log_euclidean_cov", [&](const CachedImage& c) {
    return vec(matrix_function(*c.eig, MatrixFunction::log()));
  });
  variants.emplace_back("ria", [&](const CachedImage& c) { return map_descriptor(*c.covariance, ria_cfg); });
  for (double alpha : {1.0, 0.75, 0.5, 0.25, 0.1}) {
    variants.emplace_back(alpha_label(alpha), [alpha, &vec](const CachedImage& c) {
      // α = 1 is the covariance itself, bit-identical to euclidean_cov.
      if (alpha == 1.0) return vec(c.covariance->matrix.sym());
      return vec(matrix_function(*c.eig, MatrixFunction::power(alpha)));
    });
  }

  std::vector<AblationRow> rows;
  for (const auto& [name, describe] : variants) {
    rows.push_back(evaluate_variant(name, describe, db, qs, manifest));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "variant,R@1,R@5\n" << std::fixed << std::setprecision(6);
  for (const auto& r : rows) out << r.variant << ',' << r.r1 << ',' << r.r5 << '\n';
  return out.str();
}

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg) {
  require_path(cfg.db_features_dir, "--db-features");
  require_path(cfg.query_features_dir, "--query-features");
  require_path(cfg.manifest, "--manifest");
  const DatasetManifest manifest = manifest_from_json(read_text_file(cfg.manifest));
  if (manifest.queries.empty()) throw Error(ErrorKind::invalid_input, "ablate: query list is empty");
  const auto rows = run_ablation(load_feature_dir(cfg.db_features_dir),
                                 load_feature_dir(cfg.query_features_dir), manifest, cfg.pipeline);
  if (!cfg.out.empty()) write_file_atomic(cfg.out, ablation_csv(rows));
  return rows;
}

// ---------------------------------------------------------------------------
// invariance

std::vector<DriftRow> run_invariance_sweep(const std::vector<FeatureMatrix>& projected,
                                           const std::vector<Aggregator>& aggregators,
                                           const PipelineConfig& cfg) {
  if (projected.empty()) throw Error(ErrorKind::invalid_input, "invariance: no feature sets");
  std::vector<DriftRow> rows;

  // Mean drift over images for one perturbation family member.
  auto sweep = [&](const std::string& kind, double magnitude, const auto& make) {
    std::map<std::string, double> total;
    for (std::size_t i = 0; i < projected.size(); ++i) {
      const DriftReport r = measure_drift(projected[i], make(i), aggregators, cfg);
      for (const auto& e : r.per_aggregator) total[e.aggregator] += e.drift;
    }
    for (const auto& agg : aggregators) {
      rows.push_back({kind, magnitude, agg.name(),
                      total[agg.name()] / static_cast<double>(projected.size())});
    }
  };

  for (double s : {0.25, 0.5, 2.0, 7.3}) {
    sweep("intensity_scale", s, [s](std::size_t) { return Perturbation::intensity_scale(s); });
  }
  for (double b : {0.25, 0.5, 1.0, 2.0}) {
    sweep("affine_brightness", b, [b](std::size_t) { return Perturbation::affine_brightness(0.7, b); });
  }
  const double pi = std::numbers::pi;
  for (double angle : {pi / 12, pi / 6, pi / 4, pi / 2}) {
    sweep("orthogonal_conjugation", angle, [&](std::size_t i) {
      return Perturbation::orthogonal_conjugation(angle, CounterRng::mix(cfg.seed, 7000 + i));
    });
    // Same rotation applied to both images of each consecutive pair.
    std::map<std::string, double> worst;
    for (std::size_t i = 0; i + 1 < projected.size(); ++i) {
      const Perturbation p = Perturbation::orthogonal_conjugation(angle, CounterRng::mix(cfg.seed, 9000));
      const DriftReport r = measure_pairwise_drift(projected[i], projected[i + 1], p, aggregators, cfg);
      for (const auto& e : r.per_aggregator) worst[e.aggregator] = std::max(worst[e.aggregator], e.drift);
    }
    if (projected.size() > 1) {
      for (const auto& agg : aggregators) {
        rows.push_back({"orthogonal_conjugation_pairwise", angle, agg.name(), worst[agg.name()]});
      }
    }
  }
  for (double sigma : {0.05, 0.1, 0.2, 0.4}) {
    sweep("additive_noise", sigma, [&](std::size_t i) {
      return Perturbation::additive_noise(sigma, CounterRng::mix(cfg.seed, 5000 + i));
    });
  }
  return rows;
}

std::vector<DriftRow> cmd_invariance(const RunConfig& cfg) {
  PipelineConfig pc = cfg.pipeline;
  pc.validate();

  std::vector<FeatureMatrix> projected;
  std::vector<DriftRow> external;
  if (!cfg.features_dir.empty()) {
    const auto images = load_feature_dir(cfg.features_dir);
    const ProjectionBasis basis = basis_for(images, pc);
    for (const auto& img : images) {
      try {
        projected.push_back(project(img.features, basis));
      } catch (const Error& e) {
        throw e.with_stage(img.id);
      }
    }

    if (!cfg.perturbed_dir.empty()) {
      const auto moved = load_feature_dir(cfg.perturbed_dir);
      std::map<std::string, double> total;
      std::size_t pairs = 0;
      for (const auto& img : images) {
        auto it = std::find_if(moved.begin(), moved.end(),
                               [&](const NamedFeatures& m) { return m.id == img.id; });
        if (it == moved.end()) continue;
        ++pairs;
        for (const auto& agg : cfg.aggregators) {
          PipelineConfig c = pc;
          c.aggregator = agg;
          const double cosine = descriptor_similarity(aggregate(img.features, basis, c),
                                                      aggregate(it->features, basis, c));
          total[agg.name()] += std::clamp(1.0 - cosine, 0.0, 2.0);
        }
      }
      if (pairs == 0) {
        throw Error(ErrorKind::inconsistent, "invariance: no perturbed file matches a features file");
      }
      for (const auto& agg : cfg.aggregators) {
        external.push_back({"external", 0.0, agg.name(), total[agg.name()] / static_cast<double>(pairs)});
      }
    }
  } else {
    // Not parallel to the all-ones brightness offset, so mean pooling can drift.
    std::vector<double> mean(pc.d);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] = j % 2 ? 1.0 : -0.5;
    for (std::size_t i = 0; i < cfg.synthetic_images; ++i) {
      const std::uint64_t seed = CounterRng::mix(pc.seed, 3000 + i);
      const SyntheticScene scene =
          random_place_scene(static_cast<int>(i), mean, 4.0, cfg.synthetic_patches, seed);
      projected.push_back(generate_scene_features(scene, CounterRng::mix(seed, 1)));
    }
  }

  pc.d = projected.front().dim();
  std::vector<DriftRow> rows = run_invariance_sweep(projected, cfg.aggregators, pc);
  rows.insert(rows.end(), external.begin(), external.end());
  if (!cfg.out.empty()) write_file_atomic(cfg.out, drift_csv(rows));
  return rows;
}

// ---------------------------------------------------------------------------
// geo manifest

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadiusM = 6371000.0;
  const double to_rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * to_rad;
  const double dlon = (lon2 - lon1) * to_rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * to_rad) * std::cos(lat2 * to_rad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

std::vector<GeoPoint> parse_geo_csv(const std::string& text) {
  std::vector<GeoPoint> points;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 3) {
      throw Error(ErrorKind::format, "geo csv line " + std::to_string(line_no) + ": expected id,lat,lon");
    }
    try {
      std::size_t used_lat = 0, used_lon = 0;
      const double lat = std::stod(cells[1], &used_lat);
      const double lon = std::stod(cells[2], &used_lon);
      if (used_lat != cells[1].size() || used_lon != cells[2].size()) throw std::invalid_argument("trailing");
      if (std::abs(lat) > 90.0 || std::abs(lon) > 180.0) {
        throw Error(ErrorKind::invalid_input,
                    "geo csv line " + std::to_string(line_no) + ": coordinate out of range");
      }
      points.push_back({cells[0], lat, lon});
    } catch (const std::invalid_argument&) {
      if (line_no == 1 && points.empty()) continue;  // header
      throw Error(ErrorKind::format, "geo csv line " + std::to_string(line_no) + ": bad number");
    } catch (const std::out_of_range&) {
      throw Error(ErrorKind::format, "geo csv line " + std::to_string(line_no) + ": bad number");
    }
  }
  return points;
}

std::string GeoManifest::to_json() const {
  nlohmann::json doc = nlohmann::json::parse(manifest_to_json(manifest));
  doc["warnings"] = nlohmann::json::array();
  for (const auto& w : warnings) doc["warnings"].push_back(w);
  return doc.dump(2) + "\n";
}

GeoManifest build_geo_manifest(const std::vector<GeoPoint>& database,
                               const std::vector<GeoPoint>& queries, double radius_m) {
  if (!(radius_m >= 0.0)) throw Error(ErrorKind::config, "radius must be >= 0");
  GeoManifest out;
  for (const auto& db : database) out.manifest.database.push_back(db.id);
  for (const auto& q : queries) {
    ManifestQuery mq{q.id, {}};
    for (const auto& db : database) {
      if (haversine_m(q.lat, q.lon, db.lat, db.lon) <= radius_m) mq.positives.push_back(db.id);
    }
    if (mq.positives.empty()) {
      out.warnings.push_back(q.id);
    } else {
      out.manifest.queries.push_back(std::move(mq));
    }
  }
  out.manifest.validate();
  return out;
}

}  // namespace ria
