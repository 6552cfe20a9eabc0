#include "biouncert/splits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biouncert/error.hpp"
#include "biouncert/random.hpp"

namespace biouncert::eval {

namespace {

constexpr int kMaxResamples = 10;

bool has_both_classes(std::span<const int> labels, const std::vector<std::size_t>& idx)
{
    bool pos = false, neg = false;
    for (std::size_t i : idx) {
        (labels[i] == 1 ? pos : neg) = true;
    }
    return pos && neg;
}

} // namespace

void SplitSpec::validate() const
{
    if (n_repeats < 1)
        throw Error(Errc::InvalidConfig, "n_repeats must be at least 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw Error(Errc::InvalidConfig, "train_fraction must lie in (0,1)");
}

std::size_t train_count(std::size_t n, double train_fraction) noexcept
{
    return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 0.5));
}

Split draw_split(std::span<const int> labels, const SplitSpec& spec, int repeat_index)
{
    spec.validate();
    Split split;
    for (int attempt = 0; attempt <= kMaxResamples; ++attempt) {
        Rng rng = make_rng(spec.seed, {static_cast<std::uint64_t>(repeat_index), static_cast<std::uint64_t>(attempt)});
        split.train.clear();
        split.test.clear();
        if (spec.stratified) {
            for (int cls : {1, 0}) {
                std::vector<std::size_t> members;
                for (std::size_t i = 0; i < labels.size(); ++i) {
                    if (labels[i] == cls)
                        members.push_back(i);
                }
                std::shuffle(members.begin(), members.end(), rng);
                const std::size_t k = train_count(members.size(), spec.train_fraction);
                split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
                split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
            }
        } else {
            std::vector<std::size_t> all(labels.size());
            std::iota(all.begin(), all.end(), std::size_t{0});
            std::shuffle(all.begin(), all.end(), rng);
            const std::size_t k = train_count(all.size(), spec.train_fraction);
            split.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
            split.test.assign(all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
        }
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.test.begin(), split.test.end());
        if (has_both_classes(labels, split.train)) {
            split.resamples = attempt;
            return split;
        }
    }
    throw Error(Errc::DegenerateSplit, "train set held a single class after " + std::to_string(kMaxResamples)
                                           + " resamples (repeat " + std::to_string(repeat_index) + ")");
}

} // namespace biouncert::eval
