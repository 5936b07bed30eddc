#include "tarsim/sampling.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tarsim/error.hpp"

namespace tarsim {
namespace {

template <typename Key>
std::vector<DocIndex> top_k(std::span<const ScoredDoc> scores, std::size_t k, Key key) {
  std::vector<ScoredDoc> ranked(scores.begin(), scores.end());
  auto before = [&](const ScoredDoc& a, const ScoredDoc& b) {
    const double ka = key(a.score);
    const double kb = key(b.score);
    return ka != kb ? ka < kb : a.doc < b.doc;
  };
  k = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    before);
  std::vector<DocIndex> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(ranked[i].doc);
  return out;
}

}  // namespace

std::string_view to_string(SamplingStrategy s) noexcept {
  switch (s) {
    case SamplingStrategy::relevance: return "relevance";
    case SamplingStrategy::uncertainty: return "uncertainty";
    case SamplingStrategy::random: return "random";
  }
  return "?";
}

SamplingStrategy parse_strategy(std::string_view s) {
  if (s == "relevance") return SamplingStrategy::relevance;
  if (s == "uncertainty") return SamplingStrategy::uncertainty;
  if (s == "random") return SamplingStrategy::random;
  throw Error(fmt::format("unknown sampling strategy '{}'", s));
}

std::vector<DocIndex> select_relevance(std::span<const ScoredDoc> scores, std::size_t k) {
  return top_k(scores, k, [](double p) { return -p; });
}

std::vector<DocIndex> select_uncertainty(std::span<const ScoredDoc> scores, std::size_t k) {
  return top_k(scores, k, [](double p) { return std::abs(p - 0.5); });
}

std::vector<DocIndex> select_random(std::span<const DocIndex> unreviewed, std::size_t k, Rng& rng) {
  std::vector<DocIndex> pool(unreviewed.begin(), unreviewed.end());
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace tarsim
