#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"

#include "biouncert/cohort_sim.hpp"
#include "biouncert/confidence.hpp"
#include "biouncert/phantom.hpp"
#include "biouncert/samplers.hpp"

using namespace biouncert;
using namespace biouncert::phantom;
using testing::thrown_code;

namespace {

// Nearest surface point by dense parametric search, refined locally.
double brute_force_distance(Vec3 p, Vec3 a)
{
    const double pi = std::acos(-1.0);
    auto dist_at = [&](double t, double f) {
        const double x = a[0] * std::sin(t) * std::cos(f);
        const double y = a[1] * std::sin(t) * std::sin(f);
        const double z = a[2] * std::cos(t);
        return std::hypot(p[0] - x, p[1] - y, p[2] - z);
    };
    double best = 1e300, bt = 0, bf = 0;
    const int nt = 300, nf = 600;
    for (int i = 0; i <= nt; ++i) {
        for (int j = 0; j < nf; ++j) {
            const double t = pi * i / nt, f = 2 * pi * j / nf;
            const double d = dist_at(t, f);
            if (d < best) {
                best = d;
                bt = t;
                bf = f;
            }
        }
    }
    double step = pi / nt;
    for (int it = 0; it < 60; ++it) {
        bool moved = false;
        for (int dt = -1; dt <= 1; ++dt) {
            for (int df = -1; df <= 1; ++df) {
                const double d = dist_at(bt + dt * step, bf + df * step);
                if (d < best) {
                    best = d;
                    bt += dt * step;
                    bf += df * step;
                    moved = true;
                }
            }
        }
        if (!moved)
            step *= 0.5;
    }
    const double q = std::pow(p[0] / a[0], 2) + std::pow(p[1] / a[1], 2) + std::pow(p[2] / a[2], 2);
    return q <= 1.0 ? best : -best;
}

Phantom small_phantom(std::uint64_t seed = 1)
{
    return make_phantom({20, 24, 22}, {3, 2, 2}, {9.5, 11.5, 10.5}, {6, 8, 7}, 1, seed);
}

} // namespace

TEST_CASE("ellipsoid rasterization matches the implicit inequality")
{
    const Dims d{9, 11, 13};
    const Vec3 c{4.2, 5.0, 6.3};
    const Vec3 r{3.5, 4.0, 5.5};
    const auto v = rasterize_ellipsoid(d, {1, 1, 1}, c, r, 3);
    std::size_t expected = 0;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const double q = std::pow((z - c[0]) / r[0], 2) + std::pow((y - c[1]) / r[1], 2)
                    + std::pow((x - c[2]) / r[2], 2);
                const bool in = q <= 1.0;
                expected += in;
                CHECK((v.at(z, y, x) == 3) == in);
            }
    CHECK(v.count(3) == expected);
    CHECK(v.count(0) + v.count(3) == v.size());
}

TEST_CASE("phantom bounds are enforced")
{
    CHECK_NOTHROW(make_phantom({10, 10, 10}, {1, 1, 1}, {4.5, 4.5, 4.5}, {5, 5, 5}, 1, 0));
    CHECK(thrown_code([] { make_phantom({10, 10, 10}, {1, 1, 1}, {4.5, 4.5, 4.5}, {5.1, 5, 5}, 1, 0); })
          == Errc::OutOfBounds);
    CHECK(thrown_code([] { make_phantom({10, 10, 10}, {1, 1, 1}, {2, 4.5, 4.5}, {3, 3, 3}, 1, 0); })
          == Errc::OutOfBounds);
    CHECK(thrown_code([] { make_phantom({10, 10, 10}, {1, 1, 1}, {4.5, 4.5, 4.5}, {3, 3, 3}, 0, 0); })
          == Errc::InvalidConfig);
}

TEST_CASE("signed distance on spheres is exact")
{
    const Vec3 r{5, 5, 5};
    CHECK(ellipsoid_signed_distance({0, 0, 0}, r) == doctest::Approx(5.0));
    CHECK(ellipsoid_signed_distance({0, 0, 7}, r) == doctest::Approx(-2.0));
    CHECK(ellipsoid_signed_distance({3, 4, 0}, r) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ellipsoid_signed_distance({1, 1, 1}, r) == doctest::Approx(5.0 - std::sqrt(3.0)));
}

TEST_CASE("signed distance on ellipsoids matches a dense surface search")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> axis(1.0, 8.0), coord(-10.0, 10.0);
    for (int trial = 0; trial < 40; ++trial) {
        const Vec3 a{axis(rng), axis(rng), axis(rng)};
        const Vec3 p{coord(rng), coord(rng), coord(rng)};
        const double fast = ellipsoid_signed_distance(p, a);
        const double slow = brute_force_distance(p, a);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-6).scale(1.0));
    }
    // points on a coordinate plane and on an axis, where the closed form degenerates
    CHECK(ellipsoid_signed_distance({0, 0, 0}, {2, 3, 4}) == doctest::Approx(2.0));
    CHECK(ellipsoid_signed_distance({0.5, 0, 0}, {2, 3, 4}) == doctest::Approx(1.5));
    CHECK(ellipsoid_signed_distance({0, 0, 1}, {2, 3, 4}) == doctest::Approx(brute_force_distance({0, 0, 1}, {2, 3, 4})));
    CHECK(ellipsoid_signed_distance({0, 5, 0}, {2, 3, 4}) == doctest::Approx(-2.0));
}

TEST_CASE("distance field sign agrees with the truth mask")
{
    const auto ph = small_phantom();
    const auto d = signed_distance_field(ph);
    REQUIRE(d.size() == ph.truth.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (ph.truth[i] == 1)
            CHECK(d[i] >= -1e-9);
        else
            CHECK(d[i] <= 1e-9);
    }
}

TEST_CASE("reparameterization draws have the requested moments")
{
    const Dims dims{1, 200, 500};
    LogitField f{dims, {1, 1, 1}, 1, std::vector<double>(dims.voxel_count(), 0.0),
                 std::vector<double>(dims.voxel_count(), 1.0)};
    const auto g = draw_reparam(f, 0.1, 5);
    const double n = static_cast<double>(g.size());
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / n;
    double ss = 0.0;
    std::size_t positive = 0;
    for (double v : g) {
        ss += (v - mean) * (v - mean);
        positive += v > 0.0;
    }
    CHECK(std::abs(mean) < 0.002);
    CHECK(std::sqrt(ss / n) == doctest::Approx(0.1).epsilon(0.02));
    CHECK(static_cast<double>(positive) / n == doctest::Approx(0.5).epsilon(0.02));

    const auto s = sample_reparam(f, 0.1, 5);
    CHECK(s.count(1) == positive);
    CHECK(draw_reparam(f, 0.1, 5) == g);
    CHECK(draw_reparam(f, 0.1, 6) != g);
    CHECK(thrown_code([&] { draw_reparam(f, 0.0, 1); }) == Errc::InvalidConfig);
}

TEST_CASE("phantom logits follow the distance")
{
    const auto ph = small_phantom();
    const auto d = signed_distance_field(ph);
    const auto f = phantom_logits(ph, 0.1, 2.0);
    for (std::size_t i = 0; i < d.size(); i += 37) {
        CHECK(f.mu[i] == doctest::Approx(0.1 * d[i]));
        CHECK(f.sigma[i] == doctest::Approx(std::exp(-0.5 * std::pow(d[i] / (2.0 / 3.0), 2))));
    }
}

TEST_CASE("samplers are deterministic per sample index")
{
    const auto ph = small_phantom();
    for (auto kind : {SamplerKind::McDropout, SamplerKind::FullyBayesian, SamplerKind::Probabilistic,
                      SamplerKind::Hierarchical}) {
        CAPTURE(to_string(kind));
        SamplerConfig cfg;
        cfg.kind = kind;
        cfg.n_samples = 4;
        cfg.seed = 17;
        const auto stack = sample_stack(ph, cfg, "x");
        REQUIRE(stack.size() == 4);
        CHECK(draw_sample(ph, cfg, 2) == stack.samples()[2]);
        CHECK(stack.samples()[0] != stack.samples()[1]);
        cfg.seed = 18;
        CHECK(draw_sample(ph, cfg, 2) != stack.samples()[2]);
        CHECK(parse_sampler_kind(to_string(kind)) == kind);
    }
    CHECK(thrown_code([] { parse_sampler_kind("bogus"); }) == Errc::InvalidConfig);
}

TEST_CASE("zero stochasticity reproduces the truth")
{
    const auto ph = small_phantom();
    SamplerConfig cfg;
    cfg.dropout_rate = 0.0;
    CHECK(draw_sample(ph, cfg, 0) == ph.truth);
    cfg.kind = SamplerKind::Probabilistic;
    cfg.latent_std = 0.0;
    CHECK(draw_sample(ph, cfg, 0) == ph.truth);
}

TEST_CASE("sampler validation")
{
    SamplerConfig cfg;
    cfg.n_samples = 1;
    CHECK(thrown_code([&] { cfg.validate(); }) == Errc::InvalidConfig);
    cfg = {};
    cfg.dropout_rate = 1.0;
    CHECK(thrown_code([&] { cfg.validate(); }) == Errc::InvalidConfig);
    cfg = {};
    cfg.noise_std = 0.0;
    CHECK(thrown_code([&] { cfg.validate(); }) == Errc::InvalidConfig);
}

TEST_CASE("cohort planning")
{
    auto cfg = default_cohort_config({24, 48, 32}, {6, 4, 4});
    cfg.n_subjects = 40;
    cfg.seed = 3;
    const auto plans = plan_cohort(cfg);
    REQUIRE(plans.size() == 40);
    int diabetic = 0;
    for (const auto& p : plans)
        diabetic += p.diabetes;
    CHECK(diabetic == std::lround(40 * 109.0 / 308.0));
    CHECK(plans[0].subject_id == "sub0001");
    CHECK(plans[39].subject_id == "sub0040");

    const auto again = plan_cohort(cfg);
    CHECK(again[7].planted_volume_mm3 == plans[7].planted_volume_mm3);
    CHECK(again[7].sampler.seed == plans[7].sampler.seed);

    const auto subject = realize_subject(plans[5], cfg);
    const auto rec = skeleton_record(plans[5], subject.true_volume_mm3);
    CHECK(rec.volume_mm3 == subject.true_volume_mm3);
    CHECK(rec.true_volume_mm3 == subject.true_volume_mm3);
    // rasterized volume tracks the planted one
    CHECK(subject.true_volume_mm3 == doctest::Approx(plans[5].planted_volume_mm3).epsilon(0.05));

    auto too_big = cfg;
    too_big.effect.beta0 *= 20.0;
    CHECK(thrown_code([&] { plan_cohort(too_big); }) == Errc::InfeasibleEffect);
    auto too_few = cfg;
    too_few.n_subjects = 5;
    CHECK(thrown_code([&] { plan_cohort(too_few); }) == Errc::InvalidConfig);
}

TEST_CASE("default mean volume scales with the field of view")
{
    CHECK(default_mean_volume(kDefaultDims, kDefaultSpacing) == doctest::Approx(1.5e6));
    CHECK(default_mean_volume({53, 256, 144}, {6, 4, 4}) == doctest::Approx(1.2e7));
}

TEST_CASE("difficulty raises the stochasticity of diabetics")
{
    auto cfg = default_cohort_config({24, 48, 32}, {6, 4, 4});
    cfg.n_subjects = 20;
    cfg.diabetic_difficulty = 2.0;
    for (const auto& p : plan_cohort(cfg)) {
        if (p.diabetes)
            CHECK(p.sampler.dropout_rate == doctest::Approx(0.4));
        else
            CHECK(p.sampler.dropout_rate == doctest::Approx(0.2));
    }
}
