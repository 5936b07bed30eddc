#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tarsim/corpus.hpp"
#include "tarsim/random.hpp"

namespace tarsim {

enum class SamplingStrategy { relevance, uncertainty, random };

std::string_view to_string(SamplingStrategy s) noexcept;
SamplingStrategy parse_strategy(std::string_view s);

inline constexpr std::size_t kDefaultBatchSize = 200;

struct BatchRequest {
  SamplingStrategy strategy = SamplingStrategy::relevance;
  std::size_t batch_size = kDefaultBatchSize;
  std::uint64_t rng_seed = 0;
};

struct ScoredDoc {
  DocIndex doc;
  double score;
};

// All selectors return min(k, candidates) documents. Ties are broken by the
// lower row index so batches are reproducible.

/// Highest probability first.
std::vector<DocIndex> select_relevance(std::span<const ScoredDoc> scores, std::size_t k);

/// Closest to 0.5 first.
std::vector<DocIndex> select_uncertainty(std::span<const ScoredDoc> scores, std::size_t k);

/// Uniform without replacement (partial Fisher-Yates over a copy).
std::vector<DocIndex> select_random(std::span<const DocIndex> unreviewed, std::size_t k, Rng& rng);

}  // namespace tarsim
