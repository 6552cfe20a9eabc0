#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace biouncert::eval {

struct SplitSpec {
    int n_repeats = 1000;
    double train_fraction = 0.5;
    bool stratified = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    int resamples = 0; // extra draws needed to get both classes into train
};

/// Train size of a group of n: round-half-up of train_fraction * n (77/76 for 153 at 0.5).
std::size_t train_count(std::size_t n, double train_fraction) noexcept;

/// Split for repeat `repeat_index`, drawn from the stream (seed, repeat_index, attempt).
/// Stratified: each class shuffled independently and cut at train_count.
/// A train set holding a single class is redrawn, at most 10 times, then
/// DegenerateSplit is thrown. Index lists are sorted ascending.
Split draw_split(std::span<const int> labels, const SplitSpec& spec, int repeat_index);

} // namespace biouncert::eval
