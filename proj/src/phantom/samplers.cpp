#include "biouncert/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <random>
#include <vector>

#include "biouncert/error.hpp"
#include "biouncert/random.hpp"

namespace biouncert::phantom {

namespace {

// Latent-to-shape gains. Global affine: voxel shift and log-scale per unit latent.
constexpr double kShiftGainVox = 0.5;
constexpr double kLogScaleGain = 0.02;
// Hierarchical finer scales: relative radius amplitude and angular width of
// the radial-basis bumps at scale 1; each further scale halves the amplitude,
// quarters the width and doubles the number of bumps.
constexpr double kBulgeAmplitude = 0.04;
constexpr double kBulgeWidth = 0.5;
constexpr int kBulgeCount = 8;
constexpr double kJitterAmplitude = 0.02;
constexpr double kJitterWidth = 0.08;
constexpr int kJitterCount = 32;
// Bumps further than this many kernel widths away contribute below 1e-5 of their amplitude.
constexpr double kKernelCutoff = 12.0;

// Fixed projection from latent space to `outputs` shape parameters; rows have unit norm.
std::vector<double> latent_projection(int outputs, int latent_dim, int scale)
{
    constexpr double kGolden = 2.399963229728653;
    std::vector<double> p(static_cast<std::size_t>(outputs) * latent_dim);
    for (int m = 0; m < outputs; ++m) {
        double norm = 0.0;
        for (int j = 0; j < latent_dim; ++j) {
            const double v = std::cos(kGolden * (m + 1) * (j + 1) + 0.7 * scale + 0.3 * m);
            p[static_cast<std::size_t>(m) * latent_dim + j] = v;
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (int j = 0; j < latent_dim; ++j)
            p[static_cast<std::size_t>(m) * latent_dim + j] /= norm;
    }
    return p;
}

std::vector<double> project(const std::vector<double>& proj, const std::vector<double>& z, int outputs)
{
    const int d = static_cast<int>(z.size());
    std::vector<double> out(outputs, 0.0);
    for (int m = 0; m < outputs; ++m) {
        for (int j = 0; j < d; ++j)
            out[m] += proj[static_cast<std::size_t>(m) * d + j] * z[j];
    }
    return out;
}

std::vector<double> draw_latent(Rng& rng, int dim, double stddev)
{
    std::vector<double> z(dim, 0.0);
    if (stddev <= 0.0)
        return z;
    std::normal_distribution<double> n(0.0, stddev);
    for (auto& v : z)
        v = n(rng);
    return z;
}

// Quasi-uniform unit directions (Fibonacci sphere), offset per scale.
std::vector<Vec3> sphere_directions(int count, int scale)
{
    std::vector<Vec3> dirs(count);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double t = 1.0 - 2.0 * (i + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - t * t));
        const double phi = golden * i + 0.9 * scale;
        dirs[i] = Vec3{t, r * std::cos(phi), r * std::sin(phi)};
    }
    return dirs;
}

struct Bumps {
    std::vector<Vec3> directions;
    std::vector<double> amplitudes;
    double width = 1.0;
};

// Boundary radius R(u) of the perturbed shape, tabulated on a latitude-longitude
// grid over directions u = (cos t, sin t cos p, sin t sin p) and read back bilinearly.
class RadiusTable {
public:
    static constexpr int kTheta = 64;
    static constexpr int kPhi = 128;

    explicit RadiusTable(const std::vector<Bumps>& bumps) : r_(static_cast<std::size_t>(kTheta + 1) * kPhi)
    {
        for (int i = 0; i <= kTheta; ++i) {
            const double t = std::numbers::pi * i / kTheta;
            for (int j = 0; j < kPhi; ++j) {
                const double p = 2.0 * std::numbers::pi * j / kPhi;
                const Vec3 u{std::cos(t), std::sin(t) * std::cos(p), std::sin(t) * std::sin(p)};
                double bound = 1.0;
                for (const auto& b : bumps) {
                    for (std::size_t m = 0; m < b.directions.size(); ++m) {
                        const auto& d = b.directions[m];
                        const double k = (1.0 - (u[0] * d[0] + u[1] * d[1] + u[2] * d[2])) / b.width;
                        if (k < kKernelCutoff)
                            bound += b.amplitudes[m] * std::exp(-k);
                    }
                }
                r_[static_cast<std::size_t>(i) * kPhi + j] = std::max(bound, 0.5);
            }
        }
        const auto [lo, hi] = std::minmax_element(r_.begin(), r_.end());
        min_ = *lo;
        max_ = *hi;
    }

    double min() const noexcept { return min_; }
    double max() const noexcept { return max_; }

    // q != 0, rho = |q|.
    double at(const Vec3& q, double rho) const
    {
        const double t = std::acos(std::clamp(q[0] / rho, -1.0, 1.0)) * kTheta / std::numbers::pi;
        double p = std::atan2(q[2], q[1]);
        if (p < 0.0)
            p += 2.0 * std::numbers::pi;
        p *= kPhi / (2.0 * std::numbers::pi);
        const int i0 = std::min(static_cast<int>(t), kTheta - 1);
        const int j0 = static_cast<int>(p) % kPhi;
        const int j1 = (j0 + 1) % kPhi;
        const double ft = t - i0;
        const double fp = p - std::floor(p);
        auto v = [&](int i, int j) { return r_[static_cast<std::size_t>(i) * kPhi + j]; };
        const double a = v(i0, j0) * (1.0 - fp) + v(i0, j1) * fp;
        const double b = v(i0 + 1, j0) * (1.0 - fp) + v(i0 + 1, j1) * fp;
        return a * (1.0 - ft) + b * ft;
    }

private:
    std::vector<double> r_;
    double min_ = 1.0;
    double max_ = 1.0;
};

// Star-shaped perturbed ellipsoid: voxel inside iff |q| <= R(q/|q|) with
// q the offset normalized by the perturbed radii.
LabelVolume rasterize_star(const Phantom& ph, Vec3 center, Vec3 radii, const std::vector<Bumps>& bumps)
{
    const Dims& dims = ph.truth.dims();
    std::optional<RadiusTable> table;
    if (!bumps.empty())
        table.emplace(bumps);
    const double r_min = table ? table->min() : 1.0;
    const double r_max = table ? table->max() : 1.0;
    int lo[3], hi[3];
    for (int k = 0; k < 3; ++k) {
        const double reach = radii[k] * r_max + 1.0;
        lo[k] = std::max(0, static_cast<int>(std::floor(center[k] - reach)));
        hi[k] = std::min(dims[k] - 1, static_cast<int>(std::ceil(center[k] + reach)));
    }
    std::vector<Label> labels(dims.voxel_count(), kBackground);
    for (int z = lo[0]; z <= hi[0]; ++z) {
        for (int y = lo[1]; y <= hi[1]; ++y) {
            for (int x = lo[2]; x <= hi[2]; ++x) {
                const Vec3 q{(z - center[0]) / radii[0], (y - center[1]) / radii[1], (x - center[2]) / radii[2]};
                const double rho = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
                bool inside = rho <= r_min;
                if (!inside && rho <= r_max)
                    inside = rho <= table->at(q, rho);
                if (inside)
                    labels[ph.truth.index(z, y, x)] = ph.organ_label;
            }
        }
    }
    return LabelVolume(dims, ph.truth.spacing(), std::move(labels));
}

void global_affine(const std::vector<double>& z, int scale, const Phantom& ph, Vec3& center, Vec3& radii)
{
    const int d = static_cast<int>(z.size());
    const auto y = project(latent_projection(6, d, scale), z, 6);
    for (int k = 0; k < 3; ++k) {
        center[k] = ph.center_vox[k] + kShiftGainVox * y[k];
        radii[k] = ph.radii_vox[k] * std::exp(kLogScaleGain * y[3 + k]);
    }
}

LabelVolume sample_mc_dropout(const Phantom& ph, std::span<const double> dist, const SamplerConfig& cfg, Rng& rng)
{
    std::vector<Label> labels(ph.truth.labels().begin(), ph.truth.labels().end());
    std::bernoulli_distribution flip(cfg.dropout_rate);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (std::abs(dist[i]) <= cfg.boundary_band_vox && flip(rng))
            labels[i] = labels[i] == ph.organ_label ? kBackground : ph.organ_label;
    }
    return LabelVolume(ph.truth.dims(), ph.truth.spacing(), std::move(labels));
}

// Same law as sample_reparam, but voxels whose logit cannot change sign
// (|mu| beyond 40 noise standard deviations) skip the draw.
LabelVolume sample_fully_bayesian(const LogitField& f, double noise_std, Rng& rng)
{
    std::normal_distribution<double> eps(0.0, noise_std);
    std::vector<Label> labels(f.mu.size(), kBackground);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double reach = 40.0 * noise_std * f.sigma[i];
        const double g = std::abs(f.mu[i]) > reach ? f.mu[i] : f.mu[i] + eps(rng) * f.sigma[i];
        if (g > 0.0)
            labels[i] = f.organ_label;
    }
    return LabelVolume(f.dims, f.spacing, std::move(labels));
}

LabelVolume sample_probabilistic(const Phantom& ph, const SamplerConfig& cfg, Rng& rng)
{
    const auto z = draw_latent(rng, cfg.latent_dim, cfg.latent_std);
    Vec3 center, radii;
    global_affine(z, 0, ph, center, radii);
    return rasterize_star(ph, center, radii, {});
}

LabelVolume sample_hierarchical(const Phantom& ph, const SamplerConfig& cfg, Rng& rng)
{
    // One latent vector per scale, coarse to fine.
    const auto z0 = draw_latent(rng, cfg.latent_dim, cfg.latent_std);
    Vec3 center, radii;
    global_affine(z0, 0, ph, center, radii);
    std::vector<Bumps> bumps;
    for (int s = 1; s < cfg.n_scales; ++s) {
        const auto z = draw_latent(rng, cfg.latent_dim, cfg.latent_std);
        Bumps b;
        int count;
        double amplitude;
        if (s == 1) {
            count = kBulgeCount;
            amplitude = kBulgeAmplitude;
            b.width = kBulgeWidth;
        } else {
            const int finer = s - 2;
            count = kJitterCount << finer;
            amplitude = kJitterAmplitude / static_cast<double>(1 << finer);
            b.width = kJitterWidth / static_cast<double>(1 << (2 * finer));
        }
        b.directions = sphere_directions(count, s);
        b.amplitudes = project(latent_projection(count, cfg.latent_dim, s), z, count);
        for (auto& a : b.amplitudes)
            a *= amplitude;
        bumps.push_back(std::move(b));
    }
    return rasterize_star(ph, center, radii, bumps);
}

} // namespace

std::string_view to_string(SamplerKind kind) noexcept
{
    switch (kind) {
    case SamplerKind::McDropout: return "mc-dropout";
    case SamplerKind::FullyBayesian: return "fully-bayesian";
    case SamplerKind::Probabilistic: return "probabilistic";
    case SamplerKind::Hierarchical: return "hierarchical";
    }
    return "unknown";
}

std::string_view display_name(SamplerKind kind) noexcept
{
    switch (kind) {
    case SamplerKind::McDropout: return "MC Dropout";
    case SamplerKind::FullyBayesian: return "Fully-Bayesian";
    case SamplerKind::Probabilistic: return "Probabilistic";
    case SamplerKind::Hierarchical: return "Hierarchical";
    }
    return "unknown";
}

SamplerKind parse_sampler_kind(std::string_view text)
{
    for (auto k : {SamplerKind::McDropout, SamplerKind::FullyBayesian, SamplerKind::Probabilistic,
                   SamplerKind::Hierarchical}) {
        if (to_string(k) == text)
            return k;
    }
    throw Error(Errc::InvalidConfig, "unknown sampler '" + std::string(text) + "'");
}

void SamplerConfig::validate() const
{
    if (n_samples < 2)
        throw Error(Errc::InvalidConfig, "n_samples must be at least 2");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw Error(Errc::InvalidConfig, "dropout_rate must lie in [0,1)");
    if (!(noise_std > 0.0))
        throw Error(Errc::InvalidConfig, "noise_std must be positive");
    if (latent_dim < 1)
        throw Error(Errc::InvalidConfig, "latent_dim must be at least 1");
    if (n_scales < 1)
        throw Error(Errc::InvalidConfig, "n_scales must be at least 1");
    if (!(boundary_band_vox > 0.0))
        throw Error(Errc::InvalidConfig, "boundary_band_vox must be positive");
    if (!(latent_std >= 0.0))
        throw Error(Errc::InvalidConfig, "latent_std must be nonnegative");
    if (!(logit_sharpness > 0.0))
        throw Error(Errc::InvalidConfig, "logit_sharpness must be positive");
}

namespace {

// `dist` and `field` are per-subject precomputations shared by all samples.
LabelVolume draw_with(const Phantom& ph, const SamplerConfig& cfg, int sample_index, std::span<const double> dist,
                      const LogitField* field)
{
    const std::uint64_t stream = derive_seed(cfg.seed, {static_cast<std::uint64_t>(sample_index)});
    Rng rng(stream);
    switch (cfg.kind) {
    case SamplerKind::McDropout:
        return sample_mc_dropout(ph, dist, cfg, rng);
    case SamplerKind::FullyBayesian:
        return sample_fully_bayesian(*field, cfg.noise_std, rng);
    case SamplerKind::Probabilistic:
        return sample_probabilistic(ph, cfg, rng);
    case SamplerKind::Hierarchical:
        return sample_hierarchical(ph, cfg, rng);
    }
    throw Error(Errc::InvalidConfig, "unknown sampler kind");
}

bool needs_distance(SamplerKind kind)
{
    return kind == SamplerKind::McDropout || kind == SamplerKind::FullyBayesian;
}

// Beyond three noise bands sigma is below exp(-40), so neither sampler needs exact values there.
std::vector<double> sampler_distance(const Phantom& ph, const SamplerConfig& cfg)
{
    return signed_distance_field(ph, 3.0 * cfg.boundary_band_vox + 2.0);
}

} // namespace

LabelVolume draw_sample(const Phantom& ph, const SamplerConfig& cfg, int sample_index)
{
    cfg.validate();
    std::vector<double> dist;
    std::optional<LogitField> field;
    if (needs_distance(cfg.kind))
        dist = sampler_distance(ph, cfg);
    if (cfg.kind == SamplerKind::FullyBayesian)
        field = phantom_logits(ph, dist, cfg.logit_sharpness, cfg.boundary_band_vox);
    return draw_with(ph, cfg, sample_index, dist, field ? &*field : nullptr);
}

SampleStack sample_stack(const Phantom& ph, const SamplerConfig& cfg, std::string subject_id)
{
    cfg.validate();
    std::vector<double> dist;
    std::optional<LogitField> field;
    if (needs_distance(cfg.kind))
        dist = sampler_distance(ph, cfg);
    if (cfg.kind == SamplerKind::FullyBayesian)
        field = phantom_logits(ph, dist, cfg.logit_sharpness, cfg.boundary_band_vox);
    std::vector<LabelVolume> samples;
    samples.reserve(static_cast<std::size_t>(cfg.n_samples));
    for (int s = 0; s < cfg.n_samples; ++s)
        samples.push_back(draw_with(ph, cfg, s, dist, field ? &*field : nullptr));
    return SampleStack(std::move(subject_id), std::move(samples), ph.organ_label);
}

} // namespace biouncert::phantom
