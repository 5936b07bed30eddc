#include "tarsim/workflow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "tarsim/error.hpp"

namespace tarsim {
namespace {

constexpr std::uint64_t kSamplingStream = 0x73616d706c65ULL;

struct Scorer {
  const RunConfig& config;
  const FeatureMatrices& matrices;
  std::optional<LogRegModel> bm25_model;
  std::optional<LogRegModel> splade_model;

  std::vector<double> score_with(const SparseMatrix& matrix, std::optional<LogRegModel>& model,
                                 std::span<const DocIndex> rows, std::span<const Relevance> labels,
                                 std::span<const DocIndex> targets) {
    const LogRegModel* warm = config.warm_start && model ? &*model : nullptr;
    model = train(matrix, rows, labels, config.train, warm);
    return predict_proba(*model, matrix, targets);
  }

  std::vector<ScoredDoc> score(const ReviewState& state, std::span<const DocIndex> unreviewed) {
    std::vector<DocIndex> rows;
    std::vector<Relevance> labels;
    state.training_set(rows, labels);
    std::vector<double> probs;
    switch (config.feature_mode) {
      case FeatureMode::bm25:
        probs = score_with(*matrices.bm25, bm25_model, rows, labels, unreviewed);
        break;
      case FeatureMode::splade:
        probs = score_with(*matrices.splade, splade_model, rows, labels, unreviewed);
        break;
      case FeatureMode::fused: {
        const auto p1 = score_with(*matrices.bm25, bm25_model, rows, labels, unreviewed);
        const auto p2 = score_with(*matrices.splade, splade_model, rows, labels, unreviewed);
        probs = fuse_scores(p1, p2);
        break;
      }
    }
    std::vector<ScoredDoc> scored;
    scored.reserve(unreviewed.size());
    for (std::size_t i = 0; i < unreviewed.size(); ++i) scored.push_back({unreviewed[i], probs[i]});
    return scored;
  }
};

void check_matrices(const RunConfig& config, const FeatureMatrices& matrices, std::size_t n_docs) {
  auto require = [&](const SparseMatrix* m, std::string_view name) {
    if (m == nullptr) {
      throw Error(fmt::format("feature mode {} needs a {} matrix", to_string(config.feature_mode),
                              name));
    }
    if (m->n_rows() != n_docs) {
      throw Error(fmt::format("{} matrix has {} rows but the collection has {} documents", name,
                              m->n_rows(), n_docs));
    }
  };
  if (config.feature_mode != FeatureMode::splade) require(matrices.bm25, "bm25");
  if (config.feature_mode != FeatureMode::bm25) require(matrices.splade, "splade");
}

}  // namespace

std::string_view to_string(WorkflowKind w) noexcept {
  return w == WorkflowKind::one_phase ? "one_phase" : "two_phase";
}

std::string_view to_string(FeatureMode m) noexcept {
  switch (m) {
    case FeatureMode::bm25: return "bm25";
    case FeatureMode::splade: return "splade";
    case FeatureMode::fused: return "fused";
  }
  return "?";
}

WorkflowKind parse_workflow(std::string_view s) {
  if (s == "one_phase") return WorkflowKind::one_phase;
  if (s == "two_phase") return WorkflowKind::two_phase;
  throw Error(fmt::format("unknown workflow '{}'", s));
}

FeatureMode parse_feature_mode(std::string_view s) {
  if (s == "bm25") return FeatureMode::bm25;
  if (s == "splade") return FeatureMode::splade;
  if (s == "fused") return FeatureMode::fused;
  throw Error(fmt::format("unknown feature mode '{}'", s));
}

SamplingStrategy RunConfig::effective_strategy() const noexcept {
  if (strategy) return *strategy;
  return workflow == WorkflowKind::one_phase ? SamplingStrategy::relevance
                                             : SamplingStrategy::uncertainty;
}

std::optional<int> RunConfig::effective_max_iterations() const noexcept {
  if (max_iterations) return max_iterations;
  if (workflow == WorkflowKind::two_phase) return kDefaultTwoPhaseIterationCap;
  return std::nullopt;
}

Rng seed_rng(std::uint64_t base_seed, std::string_view category_id, int seed_set_id) {
  const auto per_category = mix_seed(base_seed, stable_hash(category_id));
  return Rng(mix_seed(per_category, static_cast<std::uint64_t>(seed_set_id)));
}

SeedPair select_seeds(const LabeledCollection& collection, const CategoryLabels& category,
                      Rng& rng) {
  std::vector<DocIndex> positives;
  std::vector<DocIndex> negatives;
  for (DocIndex d = 0; d < collection.size(); ++d) {
    if (collection.document(d).length() == 0) continue;
    (category.is_positive(d) ? positives : negatives).push_back(d);
  }
  if (positives.empty()) {
    throw Error(fmt::format("category {}: no eligible relevant seed document",
                            category.category_id));
  }
  if (negatives.empty()) {
    throw Error(fmt::format("category {}: no eligible non-relevant seed document",
                            category.category_id));
  }
  const DocIndex pos = positives[uniform_index(rng, positives.size())];
  const DocIndex neg = negatives[uniform_index(rng, negatives.size())];
  return {pos, neg};
}

SeedPair select_seeds(const LabeledCollection& collection, const CategoryLabels& category,
                      std::uint64_t base_seed, int seed_set_id) {
  auto rng = seed_rng(base_seed, category.category_id, seed_set_id);
  return select_seeds(collection, category, rng);
}

std::vector<double> fuse_scores(std::span<const double> p_bm25, std::span<const double> p_splade) {
  if (p_bm25.size() != p_splade.size()) {
    throw Error(fmt::format("fuse_scores: length mismatch ({} vs {})", p_bm25.size(),
                            p_splade.size()));
  }
  std::vector<double> out(p_bm25.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (p_bm25[i] + p_splade[i]);
  return out;
}

std::int64_t required_positive_count(std::int64_t total_positives, double target) {
  if (total_positives <= 0) throw Error("required_positive_count: no relevant documents");
  if (!(target > 0.0 && target <= 1.0)) throw Error("recall target must lie in (0, 1]");
  const auto total = static_cast<double>(total_positives);
  auto c = static_cast<std::int64_t>(std::ceil(target * total));
  while (c > 0 && static_cast<double>(c - 1) / total >= target) --c;
  while (static_cast<double>(c) / total < target) ++c;
  return c;
}

std::optional<PhaseTwoDepth> rank_depth_to_target(std::span<const ScoredDoc> unreviewed_scores,
                                                  std::int64_t found_in_phase1,
                                                  std::int64_t total_positives, double target,
                                                  std::span<const Relevance> gold) {
  if (found_in_phase1 < 0 || found_in_phase1 > total_positives) {
    throw Error("rank_depth_to_target: found count outside [0, total]");
  }
  const auto required = required_positive_count(total_positives, target);
  if (found_in_phase1 >= required) return PhaseTwoDepth{0, 0};

  std::vector<ScoredDoc> ranked(unreviewed_scores.begin(), unreviewed_scores.end());
  std::sort(ranked.begin(), ranked.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    return a.score != b.score ? a.score > b.score : a.doc < b.doc;
  });
  std::int64_t found = found_in_phase1;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (gold[ranked[i].doc] == Relevance::relevant) ++found;
    if (found >= required) {
      return PhaseTwoDepth{static_cast<std::int64_t>(i + 1), found - found_in_phase1};
    }
  }
  return std::nullopt;
}

ReviewState::ReviewState(std::size_t n_docs) : reviewed_mask_(n_docs, 0) {}

void ReviewState::reveal(DocIndex doc, Relevance label, int iteration) {
  if (reviewed_mask_.at(doc) != 0) {
    throw Error(fmt::format("document row {} reviewed twice", doc));
  }
  reviewed_mask_[doc] = 1;
  reviewed_.push_back({doc, label, iteration});
  if (label == Relevance::relevant) ++found_relevant_;
}

std::vector<DocIndex> ReviewState::unreviewed() const {
  std::vector<DocIndex> out;
  out.reserve(unreviewed_count());
  for (std::size_t d = 0; d < reviewed_mask_.size(); ++d) {
    if (reviewed_mask_[d] == 0) out.push_back(static_cast<DocIndex>(d));
  }
  return out;
}

void ReviewState::training_set(std::vector<DocIndex>& rows, std::vector<Relevance>& labels) const {
  std::vector<Review> sorted = reviewed_;
  std::sort(sorted.begin(), sorted.end(),
            [](const Review& a, const Review& b) { return a.doc < b.doc; });
  rows.clear();
  labels.clear();
  for (const auto& r : sorted) {
    rows.push_back(r.doc);
    labels.push_back(r.label);
  }
}

RunRecord run_tar(const RunConfig& config, const LabeledCollection& collection,
                  std::string_view category_id, const FeatureMatrices& matrices) {
  if (config.batch_size == 0) throw Error("batch size must be at least 1");
  check_matrices(config, matrices, collection.size());
  const auto& category = collection.category(category_id);
  const auto gold = category.gold(collection.size());
  const auto strategy = config.effective_strategy();
  const auto max_iterations = config.effective_max_iterations();

  RunRecord record;
  record.category_id = category.category_id;
  record.config = config;
  record.collection_size = static_cast<std::int64_t>(collection.size());
  record.total_positives = static_cast<std::int64_t>(category.positives.size());
  record.required_positives = required_positive_count(record.total_positives, config.recall_target);

  ReviewState state(collection.size());
  auto append_entry = [&](int iteration, std::span<const DocIndex> batch) {
    IterationEntry entry;
    entry.iteration = iteration;
    for (DocIndex d : batch) {
      state.reveal(d, gold[d], iteration);
      entry.batch.push_back(collection.document(d).doc_id);
      if (gold[d] == Relevance::relevant) ++entry.batch_positives;
    }
    entry.cumulative_reviewed = static_cast<std::int64_t>(state.reviewed().size());
    entry.cumulative_positives = state.found_relevant();
    record.iterations.push_back(std::move(entry));
  };

  const auto seeds = select_seeds(collection, category, config.rng_seed, config.seed_set_id);
  record.seed_docs = {collection.document(seeds.positive).doc_id,
                      collection.document(seeds.negative).doc_id};
  const std::array<DocIndex, 2> seed_batch{seeds.positive, seeds.negative};
  append_entry(0, seed_batch);

  Rng sampling_rng(mix_seed(seed_rng(config.rng_seed, category.category_id, config.seed_set_id)(),
                            kSamplingStream));
  Scorer scorer{config, matrices, std::nullopt, std::nullopt};
  int iteration = 0;

  while (true) {
    const bool met = state.found_relevant() >= record.required_positives;
    const bool capped = max_iterations && iteration >= *max_iterations;
    const auto unreviewed = state.unreviewed();
    std::vector<ScoredDoc> scores;

    if (config.workflow == WorkflowKind::two_phase) {
      if (!met && !unreviewed.empty()) scores = scorer.score(state, unreviewed);
      const auto depth = rank_depth_to_target(scores, state.found_relevant(),
                                              record.total_positives, config.recall_target, gold);
      if (depth) {
        record.iterations.back().second_phase_depth = depth->depth;
        record.iterations.back().second_phase_positives = depth->positives;
      }
      if (met || capped || unreviewed.empty()) break;
    } else {
      if (met || capped || unreviewed.empty()) break;
      if (strategy != SamplingStrategy::random) scores = scorer.score(state, unreviewed);
    }

    std::vector<DocIndex> batch;
    switch (strategy) {
      case SamplingStrategy::relevance: batch = select_relevance(scores, config.batch_size); break;
      case SamplingStrategy::uncertainty:
        batch = select_uncertainty(scores, config.batch_size);
        break;
      case SamplingStrategy::random:
        batch = select_random(unreviewed, config.batch_size, sampling_rng);
        break;
    }
    ++iteration;
    append_entry(iteration, batch);
  }

  record.target_reached = state.found_relevant() >= record.required_positives;
  return record;
}

}  // namespace tarsim
