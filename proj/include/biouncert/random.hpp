#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace biouncert {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a root seed and a path of indices,
/// e.g. (seed, subject_index, sample_index). Order matters.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept;

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path)
{
    return Rng(derive_seed(root, path));
}

/// Seed default taken from BIOUNCERT_SEED when set and parseable, otherwise `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback);

} // namespace biouncert
