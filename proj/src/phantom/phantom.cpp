#include "biouncert/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "biouncert/error.hpp"
#include "biouncert/random.hpp"

namespace biouncert::phantom {

namespace {

constexpr int kMaxBisection = 200;

// Coordinates are bounded by the grid, so plain sums of squares cannot overflow.
double robust_length(double a, double b)
{
    return std::sqrt(a * a + b * b);
}

double robust_length(double a, double b, double c)
{
    return std::sqrt(a * a + b * b + c * c);
}

// Root of F(s) = sum (n_i / (s + r_i))^2 - 1 in [s0, s1], F(s0) >= 0 >= F(s1).
// F is convex and decreasing there, so Newton steps from s0 approach the root
// monotonically from the left; bisection finishes if Newton stalls.
template <std::size_t K>
double secular_root(const std::array<double, K>& n, const std::array<double, K>& r, double s0, double s1)
{
    auto eval = [&](double s, double& deriv) {
        double f = -1.0;
        deriv = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            const double ratio = n[i] / (s + r[i]);
            f += ratio * ratio;
            deriv -= 2.0 * ratio * ratio / (s + r[i]);
        }
        return f;
    };
    double s = s0;
    for (int it = 0; it < 80; ++it) {
        double deriv = 0.0;
        const double f = eval(s, deriv);
        if (f <= 0.0)
            return s;
        if (!(deriv < 0.0))
            break;
        const double next = s - f / deriv;
        if (!(next > s) || next >= s1)
            break;
        if (next - s <= 1e-15 * (1.0 + std::abs(s)))
            return next;
        s = next;
    }
    s0 = s;
    for (int i = 0; i < kMaxBisection; ++i) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1)
            break;
        double deriv = 0.0;
        const double g = eval(s, deriv);
        if (g > 0.0)
            s0 = s;
        else if (g < 0.0)
            s1 = s;
        else
            break;
    }
    return s;
}

double ellipse_root(double r0, double z0, double z1, double g)
{
    const double s0 = z1 - 1.0;
    const double s1 = g < 0.0 ? 0.0 : robust_length(r0 * z0, z1) - 1.0;
    return secular_root<2>({r0 * z0, z1}, {r0, 1.0}, s0, s1);
}

// e0 >= e1 > 0, y0, y1 >= 0.
double distance_to_ellipse(double e0, double e1, double y0, double y1)
{
    if (y1 > 0.0) {
        if (y0 > 0.0) {
            const double z0 = y0 / e0;
            const double z1 = y1 / e1;
            const double g = z0 * z0 + z1 * z1 - 1.0;
            if (g == 0.0)
                return 0.0;
            const double r0 = (e0 / e1) * (e0 / e1);
            const double sbar = ellipse_root(r0, z0, z1, g);
            const double x0 = r0 * y0 / (sbar + r0);
            const double x1 = y1 / (sbar + 1.0);
            return robust_length(x0 - y0, x1 - y1);
        }
        return std::abs(y1 - e1);
    }
    const double numer0 = e0 * y0;
    const double denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0) {
        const double xde0 = numer0 / denom0;
        const double x0 = e0 * xde0;
        const double x1 = e1 * std::sqrt(1.0 - xde0 * xde0);
        return robust_length(x0 - y0, x1);
    }
    return std::abs(y0 - e0);
}

double ellipsoid_root(double r0, double r1, double z0, double z1, double z2, double g)
{
    const double s0 = z2 - 1.0;
    const double s1 = g < 0.0 ? 0.0 : robust_length(r0 * z0, r1 * z1, z2) - 1.0;
    return secular_root<3>({r0 * z0, r1 * z1, z2}, {r0, r1, 1.0}, s0, s1);
}

// Unsigned distance; e0 >= e1 >= e2 > 0 and y0, y1, y2 >= 0.
double distance_to_ellipsoid(double e0, double e1, double e2, double y0, double y1, double y2)
{
    if (y2 > 0.0) {
        if (y1 > 0.0) {
            if (y0 > 0.0) {
                const double z0 = y0 / e0;
                const double z1 = y1 / e1;
                const double z2 = y2 / e2;
                const double g = z0 * z0 + z1 * z1 + z2 * z2 - 1.0;
                if (g == 0.0)
                    return 0.0;
                const double r0 = (e0 / e2) * (e0 / e2);
                const double r1 = (e1 / e2) * (e1 / e2);
                const double sbar = ellipsoid_root(r0, r1, z0, z1, z2, g);
                const double x0 = r0 * y0 / (sbar + r0);
                const double x1 = r1 * y1 / (sbar + r1);
                const double x2 = y2 / (sbar + 1.0);
                return robust_length(x0 - y0, x1 - y1, x2 - y2);
            }
            return distance_to_ellipse(e1, e2, y1, y2);
        }
        if (y0 > 0.0)
            return distance_to_ellipse(e0, e2, y0, y2);
        return std::abs(y2 - e2);
    }
    const double denom0 = e0 * e0 - e2 * e2;
    const double denom1 = e1 * e1 - e2 * e2;
    const double e0y0 = e0 * y0;
    const double e1y1 = e1 * y1;
    if (e0y0 < denom0 && e1y1 < denom1) {
        const double xde0 = e0y0 / denom0;
        const double xde1 = e1y1 / denom1;
        const double discr = 1.0 - xde0 * xde0 - xde1 * xde1;
        if (discr > 0.0) {
            const double x0 = e0 * xde0;
            const double x1 = e1 * xde1;
            const double x2 = e2 * std::sqrt(discr);
            return robust_length(x0 - y0, x1 - y1, x2);
        }
    }
    return distance_to_ellipse(e0, e1, y0, y1);
}

} // namespace

double ellipsoid_signed_distance(Vec3 offset, Vec3 semi_axes)
{
    for (double a : semi_axes) {
        if (!(a > 0.0))
            throw Error(Errc::InvalidConfig, "ellipsoid semi-axes must be positive");
    }
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return semi_axes[a] > semi_axes[b]; });
    const double e0 = semi_axes[order[0]], e1 = semi_axes[order[1]], e2 = semi_axes[order[2]];
    const double y0 = std::abs(offset[order[0]]), y1 = std::abs(offset[order[1]]), y2 = std::abs(offset[order[2]]);
    const double q = (y0 / e0) * (y0 / e0) + (y1 / e1) * (y1 / e1) + (y2 / e2) * (y2 / e2);
    const double d = distance_to_ellipsoid(e0, e1, e2, y0, y1, y2);
    return q <= 1.0 ? d : -d;
}

LabelVolume rasterize_ellipsoid(Dims dims, Spacing spacing, Vec3 center, Vec3 radii, Label organ_label)
{
    validate_geometry(dims, spacing);
    std::vector<Label> labels(dims.voxel_count(), kBackground);
    std::size_t i = 0;
    for (int z = 0; z < dims.nz; ++z) {
        const double dz = (z - center[0]) / radii[0];
        for (int y = 0; y < dims.ny; ++y) {
            const double dy = (y - center[1]) / radii[1];
            for (int x = 0; x < dims.nx; ++x, ++i) {
                const double dx = (x - center[2]) / radii[2];
                if (dz * dz + dy * dy + dx * dx <= 1.0)
                    labels[i] = organ_label;
            }
        }
    }
    return LabelVolume(dims, spacing, std::move(labels));
}

Phantom make_phantom(Dims dims, Spacing spacing, Vec3 center, Vec3 radii, Label organ_label, std::uint64_t seed)
{
    validate_geometry(dims, spacing);
    if (organ_label == kBackground)
        throw Error(Errc::InvalidConfig, "organ label must be nonzero");
    for (int axis = 0; axis < 3; ++axis) {
        if (!(radii[axis] > 0.0) || !std::isfinite(center[axis]))
            throw Error(Errc::InvalidConfig, "radii must be positive and centre finite");
        if (center[axis] - radii[axis] < -0.5 || center[axis] + radii[axis] > dims[axis] - 0.5)
            throw Error(Errc::OutOfBounds, "axis " + std::to_string(axis) + ": centre " + std::to_string(center[axis])
                                               + " +/- radius " + std::to_string(radii[axis]) + " leaves the grid");
    }
    return Phantom{rasterize_ellipsoid(dims, spacing, center, radii, organ_label), center, radii, organ_label, seed};
}

std::vector<double> signed_distance_field(const Phantom& ph)
{
    return signed_distance_field(ph, std::numeric_limits<double>::infinity());
}

std::vector<double> signed_distance_field(const Phantom& ph, double exact_within)
{
    const Dims& dims = ph.truth.dims();
    const Spacing& sp = ph.truth.spacing();
    const double unit = std::min({sp.sz, sp.sy, sp.sx});
    const Vec3 semi{ph.radii_vox[0] * sp.sz, ph.radii_vox[1] * sp.sy, ph.radii_vox[2] * sp.sx};
    // sqrt(q) is a norm, so a point on the ellipsoid scaled by s lies at least
    // |s - 1| * (smallest semi-axis) from the surface.
    const double min_semi_vox = std::min({semi[0], semi[1], semi[2]}) / unit;
    std::vector<double> out(dims.voxel_count());
    std::size_t i = 0;
    for (int z = 0; z < dims.nz; ++z) {
        const double qz = (z - ph.center_vox[0]) / ph.radii_vox[0];
        for (int y = 0; y < dims.ny; ++y) {
            const double qy = (y - ph.center_vox[1]) / ph.radii_vox[1];
            for (int x = 0; x < dims.nx; ++x, ++i) {
                const double qx = (x - ph.center_vox[2]) / ph.radii_vox[2];
                const double s = std::sqrt(qz * qz + qy * qy + qx * qx);
                const double bound = std::abs(s - 1.0) * min_semi_vox;
                if (bound >= exact_within) {
                    out[i] = s <= 1.0 ? bound : -bound;
                    continue;
                }
                const Vec3 offset{(z - ph.center_vox[0]) * sp.sz, (y - ph.center_vox[1]) * sp.sy,
                                  (x - ph.center_vox[2]) * sp.sx};
                out[i] = ellipsoid_signed_distance(offset, semi) / unit;
            }
        }
    }
    return out;
}

void LogitField::validate() const
{
    validate_geometry(dims, spacing);
    if (mu.size() != dims.voxel_count() || sigma.size() != dims.voxel_count())
        throw Error(Errc::InvalidVolume, "logit field size does not match dims");
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!std::isfinite(mu[i]))
            throw Error(Errc::InvalidVolume, "mu must be finite");
        if (!(sigma[i] >= 0.0) || !std::isfinite(sigma[i]))
            throw Error(Errc::InvalidVolume, "sigma must be finite and nonnegative");
    }
}

LogitField phantom_logits(const Phantom& ph, double sharpness, double noise_band)
{
    return phantom_logits(ph, signed_distance_field(ph), sharpness, noise_band);
}

LogitField phantom_logits(const Phantom& ph, std::span<const double> dist, double sharpness, double noise_band)
{
    if (!(sharpness > 0.0))
        throw Error(Errc::InvalidConfig, "sharpness must be positive");
    if (!(noise_band > 0.0))
        throw Error(Errc::InvalidConfig, "noise band must be positive");
    LogitField field;
    field.dims = ph.truth.dims();
    field.spacing = ph.truth.spacing();
    field.organ_label = ph.organ_label;
    if (dist.size() != ph.truth.size())
        throw Error(Errc::InvalidVolume, "distance field size does not match phantom");
    const double width = noise_band / 3.0;
    field.mu.resize(dist.size());
    field.sigma.resize(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) {
        field.mu[i] = sharpness * dist[i];
        const double u = dist[i] / width;
        field.sigma[i] = std::exp(-0.5 * u * u);
    }
    return field;
}

std::vector<double> draw_reparam(const LogitField& field, double noise_std, std::uint64_t seed)
{
    if (!(noise_std > 0.0))
        throw Error(Errc::InvalidConfig, "noise_std must be positive");
    Rng rng(seed);
    std::normal_distribution<double> eps(0.0, noise_std);
    std::vector<double> g(field.mu.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = field.mu[i] + eps(rng) * field.sigma[i];
    return g;
}

LabelVolume sample_reparam(const LogitField& field, double noise_std, std::uint64_t seed)
{
    const auto g = draw_reparam(field, noise_std, seed);
    std::vector<Label> labels(g.size(), kBackground);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] > 0.0)
            labels[i] = field.organ_label;
    }
    return LabelVolume(field.dims, field.spacing, std::move(labels));
}

} // namespace biouncert::phantom
