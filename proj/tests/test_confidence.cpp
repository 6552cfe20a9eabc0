#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

#include "biouncert/confidence.hpp"

using namespace biouncert;
using namespace biouncert::metrics;
using testing::thrown_code;

namespace {

LabelVolume mask(Dims d, std::initializer_list<std::size_t> on, Label label = 1)
{
    std::vector<Label> v(d.voxel_count(), 0);
    for (auto i : on)
        v[i] = label;
    return {d, {1, 1, 1}, std::move(v)};
}

// A stack whose k-th sample holds counts[k] foreground voxels at 2 x 1 x 1 mm.
SampleStack stack_with_counts(std::initializer_list<std::size_t> counts)
{
    const Dims d{1, 1, 200};
    std::vector<LabelVolume> samples;
    for (auto c : counts) {
        std::vector<Label> v(d.voxel_count(), 0);
        std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(c), Label{1});
        samples.emplace_back(d, Spacing{2, 1, 1}, std::move(v));
    }
    return {"s", std::move(samples), 1};
}

} // namespace

TEST_CASE("IoU of hand-built stacks")
{
    const Dims d{1, 2, 4};
    SampleStack same("a", {mask(d, {0, 1, 2}), mask(d, {0, 1, 2})}, 1);
    CHECK(stack_iou(same).value == 1.0);

    SampleStack half("b", {mask(d, {0, 1}), mask(d, {1, 2}), mask(d, {1, 3})}, 1);
    CHECK(stack_iou(half).value == doctest::Approx(1.0 / 4.0));

    SampleStack empty("c", {mask(d, {}), mask(d, {})}, 1);
    const auto r = stack_iou(empty);
    CHECK(r.value == 0.0);
    CHECK(r.degenerate);

    // other labels do not count
    SampleStack other("d", {mask(d, {0, 1}), mask(d, {0, 1}, 2)}, 1);
    CHECK(stack_iou(other).value == 0.0);
}

TEST_CASE("coefficient of variation uses the divide-by-N form")
{
    const std::vector<double> v{90, 100, 110};
    const auto r = coefficient_of_variation(v);
    CHECK(r.cv == doctest::Approx(std::sqrt(200.0 / 3.0) / 100.0).epsilon(1e-14));
    CHECK(r.cv == doctest::Approx(0.0816497).epsilon(1e-6));
    CHECK(r.inv_cv == doctest::Approx(1.0 / r.cv));
    CHECK(r.mean_volume == doctest::Approx(100.0));

    const std::vector<double> flat{5, 5, 5};
    const auto f = coefficient_of_variation(flat);
    CHECK(f.cv == 0.0);
    CHECK(f.inv_cv_infinite);
    CHECK(std::isinf(f.inv_cv));

    const std::vector<double> zero{0, 0};
    CHECK(thrown_code([&] { coefficient_of_variation(zero); }) == Errc::UndefinedCv);
}

TEST_CASE("stack CV works in mm^3")
{
    const auto s = stack_with_counts({45, 50, 55});
    const auto r = stack_cv(s);
    CHECK(r.mean_volume == doctest::Approx(100.0));
    CHECK(r.cv == doctest::Approx(0.0816496580927726));
    CHECK(volume_of(s.samples()[0], 1) == doctest::Approx(90.0));
}

TEST_CASE("Dice")
{
    const Dims d{1, 1, 6};
    CHECK(dice(mask(d, {0, 1}), mask(d, {0, 1}), 1) == 1.0);
    CHECK(dice(mask(d, {}), mask(d, {}), 1) == 1.0);
    CHECK(dice(mask(d, {0, 1}), mask(d, {2, 3}), 1) == 0.0);
    CHECK(dice(mask(d, {0, 1, 2}), mask(d, {1, 2, 3, 4}), 1) == doctest::Approx(4.0 / 7.0));
    CHECK(thrown_code([&] { dice(mask(d, {0}), mask({1, 1, 5}, {0}), 1); }) == Errc::DimsMismatch);
}

TEST_CASE("Dice and pair IoU satisfy the Jaccard identity")
{
    std::mt19937_64 rng(21);
    for (int t = 0; t < 200; ++t) {
        const auto a = testing::random_volume(rng, {3, 4, 5}, 0.5);
        const auto b = testing::random_volume(rng, {3, 4, 5}, 0.3);
        const double j = pair_iou(a, b, 1);
        CHECK(dice(a, b, 1) == doctest::Approx(2 * j / (1 + j)).epsilon(1e-12));
    }
}

TEST_CASE("binary entropy")
{
    CHECK(binary_entropy_bits(0.0) == 0.0);
    CHECK(binary_entropy_bits(1.0) == 0.0);
    CHECK(binary_entropy_bits(0.5) == doctest::Approx(1.0));
    CHECK(binary_entropy_bits(0.25) == doctest::Approx(binary_entropy_bits(0.75)));
    CHECK(binary_entropy_bits(0.25) == doctest::Approx(0.8112781244591328));
}

TEST_CASE("uncertainty map and consensus")
{
    const Dims d{1, 1, 4};
    // voxel 0: 2/2, voxel 1: 1/2, voxel 2: 0/2, voxel 3: 1/2
    SampleStack s("a", {mask(d, {0, 1}), mask(d, {0, 3})}, 1);
    const auto u = uncertainty_map(s);
    REQUIRE(u.values.size() == 4);
    CHECK(u.values[0] == 0.0);
    CHECK(u.values[1] == doctest::Approx(1.0));
    CHECK(u.values[2] == 0.0);

    // an exact tie goes to foreground
    const auto c = consensus_mask(s);
    CHECK(c == mask(d, {0, 1, 3}));

    SampleStack three("b", {mask(d, {0, 1}), mask(d, {0}), mask(d, {2})}, 1);
    CHECK(consensus_mask(three) == mask(d, {0}));
}

TEST_CASE("bfv1 round trip is exact in float32")
{
    UncertaintyMap m{{2, 2, 3}, {3, 2, 2}, {}};
    for (int i = 0; i < 12; ++i)
        m.values.push_back(static_cast<float>(i) / 11.0f);
    std::stringstream ss;
    write_uncertainty_map(m, ss);
    const auto back = read_uncertainty_map(ss);
    CHECK(back.dims == m.dims);
    CHECK(back.values == m.values);

    std::stringstream again;
    write_uncertainty_map(m, again);
    std::string blv = again.str();
    blv.replace(blv.find("bfv1"), 4, "blv1");
    std::stringstream wrong_magic(blv);
    CHECK(thrown_code([&] { read_uncertainty_map(wrong_magic); }) == Errc::MalformedHeader);
}

TEST_CASE("confidence report")
{
    const auto s = stack_with_counts({45, 50, 55});
    const auto r = confidence_report(s);
    CHECK(r.iou == doctest::Approx(45.0 / 55.0));
    CHECK(r.cv == doctest::Approx(0.0816496580927726));
    CHECK(r.volumes_mm3 == std::vector<double>{90, 100, 110});
    CHECK(r.mean_volume_mm3 == doctest::Approx(100.0));
    // voxels 0..49 are in at least 2 of 3 samples
    CHECK(r.consensus_volume_mm3 == doctest::Approx(100.0));
}
