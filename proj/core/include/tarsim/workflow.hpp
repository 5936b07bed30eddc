#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tarsim/classifier.hpp"
#include "tarsim/corpus.hpp"
#include "tarsim/random.hpp"
#include "tarsim/sampling.hpp"
#include "tarsim/sparse_features.hpp"

namespace tarsim {

enum class WorkflowKind { one_phase, two_phase };
enum class FeatureMode { bm25, splade, fused };

std::string_view to_string(WorkflowKind w) noexcept;
std::string_view to_string(FeatureMode m) noexcept;
WorkflowKind parse_workflow(std::string_view s);
FeatureMode parse_feature_mode(std::string_view s);

inline constexpr double kDefaultRecallTarget = 0.8;
inline constexpr int kDefaultTwoPhaseIterationCap = 200;

struct RunConfig {
  WorkflowKind workflow = WorkflowKind::one_phase;
  /// Unset: relevance feedback for one-phase, uncertainty for two-phase.
  std::optional<SamplingStrategy> strategy;
  FeatureMode feature_mode = FeatureMode::bm25;
  double recall_target = kDefaultRecallTarget;
  std::size_t batch_size = kDefaultBatchSize;
  /// Unset: 200 for two-phase, unlimited for one-phase.
  std::optional<int> max_iterations;
  int seed_set_id = 0;
  /// Experiment-level seed. Seed documents derive from it together with the
  /// category and seed set only, so every mode and workflow shares them.
  std::uint64_t rng_seed = 0;
  TrainConfig train;
  bool warm_start = false;

  SamplingStrategy effective_strategy() const noexcept;
  std::optional<int> effective_max_iterations() const noexcept;
};

/// Non-owning view of the matrices available to a run.
struct FeatureMatrices {
  const SparseMatrix* bm25 = nullptr;
  const SparseMatrix* splade = nullptr;
};

struct SeedPair {
  DocIndex positive;
  DocIndex negative;
};

/// Generator for seed set `seed_set_id` of a category.
Rng seed_rng(std::uint64_t base_seed, std::string_view category_id, int seed_set_id);

/// One uniform relevant and one uniform non-relevant document, both with a
/// non-empty token list.
SeedPair select_seeds(const LabeledCollection& collection, const CategoryLabels& category,
                      Rng& rng);
SeedPair select_seeds(const LabeledCollection& collection, const CategoryLabels& category,
                      std::uint64_t base_seed, int seed_set_id);

/// Elementwise mean of two aligned probability vectors.
std::vector<double> fuse_scores(std::span<const double> p_bm25, std::span<const double> p_splade);

/// Smallest c with c / total_positives >= target.
std::int64_t required_positive_count(std::int64_t total_positives, double target);

struct PhaseTwoDepth {
  std::int64_t depth;
  std::int64_t positives;
};

/// Length of the shortest prefix of the unreviewed ranking (descending score,
/// ties by row index) that lifts found_in_phase1 to the required count, with
/// the relevant documents inside it. Depth 0 when phase one already meets the
/// target; nullopt when even the full ranking falls short.
std::optional<PhaseTwoDepth> rank_depth_to_target(std::span<const ScoredDoc> unreviewed_scores,
                                                  std::int64_t found_in_phase1,
                                                  std::int64_t total_positives, double target,
                                                  std::span<const Relevance> gold);

/// Reviewed/unreviewed bookkeeping for one run.
class ReviewState {
 public:
  struct Review {
    DocIndex doc;
    Relevance label;
    int iteration;
  };

  explicit ReviewState(std::size_t n_docs);

  void reveal(DocIndex doc, Relevance label, int iteration);

  bool is_reviewed(DocIndex doc) const { return reviewed_mask_.at(doc) != 0; }
  const std::vector<Review>& reviewed() const noexcept { return reviewed_; }
  /// Unreviewed row indices in ascending order.
  std::vector<DocIndex> unreviewed() const;
  std::size_t unreviewed_count() const noexcept { return reviewed_mask_.size() - reviewed_.size(); }
  std::int64_t found_relevant() const noexcept { return found_relevant_; }

  /// Reviewed rows sorted ascending with their labels (training order).
  void training_set(std::vector<DocIndex>& rows, std::vector<Relevance>& labels) const;

 private:
  std::vector<std::uint8_t> reviewed_mask_;
  std::vector<Review> reviewed_;
  std::int64_t found_relevant_ = 0;
};

struct IterationEntry {
  int iteration = 0;
  std::vector<std::string> batch;
  std::int64_t batch_positives = 0;
  std::int64_t cumulative_reviewed = 0;
  std::int64_t cumulative_positives = 0;
  /// Two-phase only: documents reviewed down the current ranking to reach
  /// the target, and the relevant ones among them.
  std::optional<std::int64_t> second_phase_depth;
  std::optional<std::int64_t> second_phase_positives;

  friend bool operator==(const IterationEntry&, const IterationEntry&) = default;
};

struct RunRecord {
  std::string category_id;
  RunConfig config;
  std::vector<std::string> seed_docs;
  std::int64_t collection_size = 0;
  std::int64_t total_positives = 0;
  std::int64_t required_positives = 0;
  /// Phase-one review alone reached the recall target.
  bool target_reached = false;
  std::vector<IterationEntry> iterations;
};

RunRecord run_tar(const RunConfig& config, const LabeledCollection& collection,
                  std::string_view category_id, const FeatureMatrices& matrices);

/// JSONL: a header object, then one object per iteration. Output is a pure
/// function of the record, so equal records serialize to equal bytes.
void write_run_record(const RunRecord& record, std::ostream& out);
void write_run_record(const RunRecord& record, const std::filesystem::path& path);
std::string serialize_run_record(const RunRecord& record);
RunRecord read_run_record(std::istream& in);
RunRecord read_run_record(const std::filesystem::path& path);

}  // namespace tarsim
