#pragma once

#include <optional>
#include <random>
#include <vector>

#include "biouncert/error.hpp"
#include "biouncert/label_volume.hpp"

namespace testing {

// Error code thrown by f, or nullopt when it returns normally.
template <class F>
std::optional<biouncert::Errc> thrown_code(F&& f)
{
    try {
        f();
    } catch (const biouncert::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline biouncert::LabelVolume random_volume(std::mt19937_64& rng, biouncert::Dims dims, double p_fg,
                                            biouncert::Label label = 1)
{
    std::bernoulli_distribution fg(p_fg);
    std::vector<biouncert::Label> v(dims.voxel_count());
    for (auto& x : v)
        x = fg(rng) ? label : biouncert::Label{0};
    return {dims, biouncert::Spacing{1.0, 1.0, 1.0}, std::move(v)};
}

} // namespace testing
