#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace confpinn {

using Rng = std::mt19937_64;

/// Counter-based seed derivation: the seed for item `index` of `stream` is a
/// pure function of the master seed, so any single record or trial can be
/// regenerated without replaying the ones before it.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index) noexcept;

/// Streams used with derive_seed. Kept in one place so that no two
/// consumers of the same master seed collide.
namespace streams {
inline constexpr std::uint64_t model_init = 1;
inline constexpr std::uint64_t noise = 2;
inline constexpr std::uint64_t split = 3;
inline constexpr std::uint64_t holdout_split = 4;
inline constexpr std::uint64_t coverage_trial = 5;
inline constexpr std::uint64_t inverse_record = 6;
inline constexpr std::uint64_t inverse_test = 7;
inline constexpr std::uint64_t calibration_draw = 8;
} // namespace streams

/// Uniformly random permutation of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

} // namespace confpinn
