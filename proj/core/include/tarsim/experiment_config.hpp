#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tarsim/classifier.hpp"
#include "tarsim/cost.hpp"
#include "tarsim/sparse_features.hpp"
#include "tarsim/tokenizer.hpp"
#include "tarsim/workflow.hpp"

namespace tarsim {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kDefaultSeedSets = 10;

/// A workflow, its sampling strategy and the cost structure it is judged by.
struct Protocol {
  WorkflowKind workflow = WorkflowKind::one_phase;
  SamplingStrategy strategy = SamplingStrategy::relevance;
  std::string cost_name = "uniform";
  CostStructure cost = CostStructure::uniform();

  /// e.g. "one_phase-relevance-uniform"
  std::string label() const;
  /// Runs depend on workflow and strategy only; cost is applied afterwards.
  std::string run_key() const;
};

struct ExperimentConfig {
  std::filesystem::path corpus;
  std::filesystem::path labels;
  std::optional<std::filesystem::path> groups;
  std::optional<std::filesystem::path> splade_vectors;
  std::optional<std::filesystem::path> splade_cache;
  std::optional<std::filesystem::path> bm25_cache;

  /// Empty selects every usable category.
  std::vector<std::string> categories;
  std::vector<FeatureMode> feature_modes{FeatureMode::bm25};
  std::vector<Protocol> protocols{Protocol{}};

  double recall_target = kDefaultRecallTarget;
  std::size_t batch_size = kDefaultBatchSize;
  std::optional<int> max_iterations;
  int seed_sets = kDefaultSeedSets;
  std::uint64_t rng_seed = 0;
  bool warm_start = false;

  TokenizerConfig tokenizer;
  Bm25Params bm25;
  VectorLoadOptions splade;
  TrainConfig classifier;

  int parallelism = 1;
  std::filesystem::path output_dir = "runs";
};

/// Parses the JSON config document. Relative paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Canonical JSON (all fields, paths as given) used for the run directory copy.
std::string experiment_config_json(const ExperimentConfig& config);

/// Checks value ranges and that referenced files exist. Throws tarsim::Error.
void validate(const ExperimentConfig& config);

/// MD5 over the fields that change run results. Parallelism and the output
/// directory are excluded.
std::string config_hash(const ExperimentConfig& config);

}  // namespace tarsim
