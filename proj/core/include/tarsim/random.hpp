#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tarsim {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a. Stable across platforms and releases, unlike std::hash.
std::uint64_t stable_hash(std::string_view bytes) noexcept;

/// SplitMix64 finalizer applied to the combination of two values.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

/// Uniform integer in [0, bound) by rejection sampling. The result depends
/// only on the generator output, never on the standard library's
/// distribution implementation, so draws reproduce across toolchains.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

}  // namespace tarsim
