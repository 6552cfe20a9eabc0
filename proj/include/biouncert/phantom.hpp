#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "biouncert/label_volume.hpp"

namespace biouncert::phantom {

using Vec3 = std::array<double, 3>; // (z, y, x)

/// Ground-truth organ: an axis-aligned ellipsoid rasterized on voxel centres.
struct Phantom {
    LabelVolume truth;
    Vec3 center_vox;
    Vec3 radii_vox;
    Label organ_label;
    std::uint64_t seed;
};

/// Voxel (z,y,x) is foreground iff sum(((p - c) / r)^2) <= 1 in voxel coordinates.
/// Throws OutOfBounds unless c - r >= -0.5 and c + r <= dim - 0.5 on every axis.
Phantom make_phantom(Dims dims, Spacing spacing, Vec3 center_vox, Vec3 radii_vox, Label organ_label,
                     std::uint64_t seed);

LabelVolume rasterize_ellipsoid(Dims dims, Spacing spacing, Vec3 center_vox, Vec3 radii_vox, Label organ_label);

/// Euclidean distance from `offset` (point minus centre) to the surface of an
/// ellipsoid with the given semi-axes, both in the same physical units.
/// Positive inside, negative outside, zero on the surface.
double ellipsoid_signed_distance(Vec3 offset, Vec3 semi_axes);

/// Per-voxel signed distance to the phantom surface, measured in mm and
/// expressed in units of the smallest voxel spacing. Positive inside.
std::vector<double> signed_distance_field(const Phantom& phantom);
/// Narrow-band variant: exact wherever |d| < exact_within voxels. Elsewhere the
/// value carries the right sign and is a lower bound on |d| that is itself
/// at least exact_within, so thresholds below exact_within see the same answer.
std::vector<double> signed_distance_field(const Phantom& phantom, double exact_within);

/// Per-voxel mean logit and noise scale of a stochastic segmenter.
struct LogitField {
    Dims dims;
    Spacing spacing;
    Label organ_label = 1;
    std::vector<double> mu;
    std::vector<double> sigma;

    void validate() const;
};

/// mu = sharpness * signed distance (positive inside); sigma = exp(-d^2 / (2 (noise_band/3)^2)),
/// peaking at 1 on the surface and negligible beyond noise_band voxels.
LogitField phantom_logits(const Phantom& phantom, double sharpness, double noise_band);
/// Same, reusing a precomputed signed_distance_field.
LogitField phantom_logits(const Phantom& phantom, std::span<const double> distance, double sharpness,
                          double noise_band);

/// One realization g = mu + eps * sigma, eps ~ Normal(0, noise_std) i.i.d. per voxel.
std::vector<double> draw_reparam(const LogitField& field, double noise_std, std::uint64_t seed);

/// Thresholds draw_reparam at zero: organ label iff g > 0.
LabelVolume sample_reparam(const LogitField& field, double noise_std, std::uint64_t seed);

} // namespace biouncert::phantom
