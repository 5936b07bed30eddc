#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tarsim/cost.hpp"
#include "tarsim/experiment_config.hpp"

namespace tarsim {

/// One cell of the run grid.
struct RunSpec {
  std::string category;
  int seed_set = 0;
  FeatureMode feature_mode = FeatureMode::bm25;
  WorkflowKind workflow = WorkflowKind::one_phase;
  SamplingStrategy strategy = SamplingStrategy::relevance;

  /// "<category>__<mode>__<workflow>-<strategy>__s<seed>"
  std::string id() const;
};

/// categories x seed sets x feature modes x distinct (workflow, strategy).
std::vector<RunSpec> enumerate_grid(const ExperimentConfig& config,
                                    const std::vector<std::string>& categories);

struct ExperimentSummary {
  std::filesystem::path run_dir;
  std::size_t total = 0;
  std::size_t executed = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
};

/// Executes the grid into config.output_dir:
///   config.json, manifest.json, records/<run id>.jsonl
/// Runs already marked ok in the manifest with their record present are
/// skipped. `workers` overrides config.parallelism when nonzero.
ExperimentSummary run_experiment(const ExperimentConfig& config, std::size_t workers = 0);

struct ManifestEntry {
  RunSpec spec;
  std::string status;  // "ok" or "failed"
  std::string error;
  std::string record;  // path relative to the run dir
};

struct Manifest {
  std::string config_hash;
  std::map<std::string, ManifestEntry> runs;
};

Manifest read_manifest(const std::filesystem::path& run_dir);

struct RelativeCostCell {
  FeatureMode mode;
  std::string protocol;
  std::optional<CategoryGroup> group;
  double relative_cost;
  std::size_t categories;
};

struct RunCostRow {
  std::string protocol;
  RunSpec spec;
  OptimalCost optimal;
};

struct AggregateReport {
  FeatureMode baseline;
  std::vector<RunCostRow> run_costs;
  std::vector<RelativeCostCell> overall;
  std::vector<RelativeCostCell> grouped;
};

/// Relative optimal cost of every feature mode against `baseline` for every
/// protocol; per (difficulty, prevalence) cell too when `groups_csv` is given.
AggregateReport aggregate(const std::filesystem::path& run_dir, FeatureMode baseline,
                          const std::optional<std::filesystem::path>& groups_csv = std::nullopt);

/// Writes run_costs_<protocol>.csv, relative_cost.csv, relative_cost_groups.csv
/// (when grouped) and report.txt into `out_dir`.
void write_aggregate_report(const AggregateReport& report, const std::filesystem::path& out_dir);

struct DynamicsOutput {
  std::filesystem::path csv;
  std::filesystem::path svg;
  std::size_t rows = 0;
};

/// Cost dynamics of one two-phase run as CSV plus a stacked-area SVG chart.
/// The cost structure defaults to the first matching protocol's.
DynamicsOutput emit_dynamics(const std::filesystem::path& run_dir, const std::string& run_id,
                             const std::filesystem::path& out_dir,
                             const std::optional<CostStructure>& cost = std::nullopt);

/// Standalone SVG stacked-area chart of the four cost sectors, with a dashed
/// vertical marker at the first iteration needing no second-phase review.
std::string render_dynamics_svg(const CostDynamics& dynamics, const std::string& title);

struct DedupeSummary {
  std::size_t read = 0;
  std::size_t written = 0;
  std::size_t dropped = 0;
};

/// Copies the corpus JSONL keeping the first record of each distinct text
/// (MD5 of the text field).
DedupeSummary dedupe_corpus(const std::filesystem::path& in, const std::filesystem::path& out);

std::string md5_hex(std::string_view bytes);

}  // namespace tarsim
