// ria: second-order global descriptors for place recognition.
//
//   ria aggregate  --features DIR --out db.riad [--dim 64 --seed 0 ...]
//   ria eval       --db db.riad --queries q.riad --manifest m.json [--ks 1,5,10] [--out r.csv]
//   ria ablate     --db-features DIR --query-features DIR --manifest m.json [--out a.csv]
//   ria invariance [--features DIR [--perturbed DIR]] [--out drift.csv]
//   ria geo-manifest --database db.csv --queries q.csv [--radius 25] --out m.json

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "ria/commands.hpp"
#include "ria/error.hpp"

namespace {

void add_pipeline_flags(CLI::App* cmd, ria::RunConfig& cfg, std::string& backend,
                        std::string& aggregator) {
  auto& p = cfg.pipeline;
  cmd->add_option("--dim", p.d, "projected dimension d (descriptor dim d(d+1)/2)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tau", p.tau, "off-diagonal rectification threshold")->check(CLI::NonNegativeNumber);
  cmd->add_option("--epsilon", p.epsilon, "diagonal regularizer")->check(CLI::PositiveNumber);
  cmd->add_option("--ns-iters", p.ns_iterations, "Newton-Schulz iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", p.alpha, "matrix power in (0, 1]");
  cmd->add_option("--seed", p.seed, "projection basis seed");
  cmd->add_option("--backend", backend, "square-root backend")
      ->check(CLI::IsMember({"newton-schulz", "eig"}));
  cmd->add_option("--aggregator", aggregator,
                  "ria | euclidean_cov | log_euclidean_cov | mean | gem(p)");
}

void apply_pipeline_flags(ria::RunConfig& cfg, const std::string& backend,
                          const std::string& aggregator) {
  cfg.pipeline.sqrt_backend =
      backend == "eig" ? ria::SqrtBackend::eig_oracle : ria::SqrtBackend::newton_schulz;
  cfg.pipeline.aggregator = ria::Aggregator::parse(aggregator);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Second-order SPD descriptors for visual place recognition"};
  app.require_subcommand(1);

  ria::RunConfig cfg;
  std::string backend = "newton-schulz";
  std::string aggregator = "ria";
  std::vector<std::string> aggregator_list;
  std::string db_csv, query_csv;
  double radius_m = 25.0;

  auto* aggregate = app.add_subcommand("aggregate", "feature files -> descriptor archive");
  add_pipeline_flags(aggregate, cfg, backend, aggregator);
  aggregate->add_option("--features", cfg.features_dir, "directory of .riaf files")->required();
  aggregate->add_option("--out", cfg.out, "output .riad archive")->required();

  auto* eval = app.add_subcommand("eval", "Recall@K of query archive against database archive");
  eval->add_option("--db", cfg.db_archive, "database .riad")->required();
  eval->add_option("--queries", cfg.query_archive, "query .riad")->required();
  eval->add_option("--manifest", cfg.manifest, "manifest json")->required();
  eval->add_option("--ks", cfg.ks, "K values")->delimiter(',');
  eval->add_option("--out", cfg.out, "CSV output (k,recall)");

  auto* ablate = app.add_subcommand("ablate", "aggregator and alpha sweep, CSV of R@1/R@5");
  add_pipeline_flags(ablate, cfg, backend, aggregator);
  ablate->add_option("--db-features", cfg.db_features_dir, "database .riaf directory")->required();
  ablate->add_option("--query-features", cfg.query_features_dir, "query .riaf directory")->required();
  ablate->add_option("--manifest", cfg.manifest, "manifest json")->required();
  ablate->add_option("--out", cfg.out, "CSV output");

  auto* invariance = app.add_subcommand("invariance", "descriptor drift under feature perturbations");
  add_pipeline_flags(invariance, cfg, backend, aggregator);
  invariance->add_option("--features", cfg.features_dir, "optional .riaf directory (synthetic scenes otherwise)");
  invariance->add_option("--perturbed", cfg.perturbed_dir, "features of perturbed images, matched by file stem");
  invariance->add_option("--aggregators", aggregator_list, "aggregators to compare")->delimiter(',');
  invariance->add_option("--synthetic-images", cfg.synthetic_images)->check(CLI::PositiveNumber);
  invariance->add_option("--synthetic-patches", cfg.synthetic_patches)->check(CLI::PositiveNumber);
  invariance->add_option("--out", cfg.out, "CSV output");

  auto* geo = app.add_subcommand("geo-manifest", "manifest from id,lat,lon CSVs");
  geo->add_option("--database", db_csv, "database CSV")->required();
  geo->add_option("--queries", query_csv, "query CSV")->required();
  geo->add_option("--radius", radius_m, "positive radius in meters")->check(CLI::NonNegativeNumber);
  geo->add_option("--out", cfg.out, "manifest json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    apply_pipeline_flags(cfg, backend, aggregator);
    if (!aggregator_list.empty()) {
      cfg.aggregators.clear();
      for (const auto& name : aggregator_list) cfg.aggregators.push_back(ria::Aggregator::parse(name));
    }

    if (aggregate->parsed()) {
      const auto archive = ria::cmd_aggregate(cfg);
      std::cout << "wrote " << archive.items.size() << " descriptors (dim "
                << (archive.items.empty() ? 0 : archive.items.front().descriptor.dim()) << ") to "
                << cfg.out.string() << "\n";
    } else if (eval->parsed()) {
      const auto table = ria::cmd_eval(cfg);
      for (const auto& [k, r] : table.recall) {
        std::cout << "R@" << k << " = " << std::fixed << std::setprecision(4) << r << "\n";
      }
    } else if (ablate->parsed()) {
      std::cout << ria::ablation_csv(ria::cmd_ablate(cfg));
    } else if (invariance->parsed()) {
      const auto rows = ria::cmd_invariance(cfg);
      if (cfg.out.empty()) std::cout << ria::drift_csv(rows);
      else std::cout << "wrote " << rows.size() << " drift rows to " << cfg.out.string() << "\n";
    } else if (geo->parsed()) {
      const auto result = ria::build_geo_manifest(
          ria::parse_geo_csv(ria::read_text_file(db_csv)),
          ria::parse_geo_csv(ria::read_text_file(query_csv)), radius_m);
      ria::write_file_atomic(cfg.out, result.to_json());
      for (const auto& w : result.warnings) {
        std::cerr << "warning: query '" << w << "' has no database item within " << radius_m
                  << " m; excluded\n";
      }
      std::cout << "wrote manifest with " << result.manifest.queries.size() << " queries to "
                << cfg.out.string() << "\n";
    }
  } catch (const ria::Error& e) {
    std::cerr << "error (" << ria::to_string(e.kind()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
