#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace biouncert {

/// Grid extent in voxels, z-major (slowest) to x (fastest).
struct Dims {
    int nz = 0;
    int ny = 0;
    int nx = 0;

    std::size_t voxel_count() const noexcept
    {
        return static_cast<std::size_t>(nz) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nx);
    }
    int operator[](int axis) const noexcept { return axis == 0 ? nz : (axis == 1 ? ny : nx); }
    bool operator==(const Dims&) const = default;
};

/// Voxel spacing in millimetres, same axis order as Dims.
struct Spacing {
    double sz = 1.0;
    double sy = 1.0;
    double sx = 1.0;

    double voxel_volume_mm3() const noexcept { return sz * sy * sx; }
    double operator[](int axis) const noexcept { return axis == 0 ? sz : (axis == 1 ? sy : sx); }
    bool operator==(const Spacing&) const = default;
};

// 53 x 256 x 144 voxels at 3 x 2 x 2 mm, the whole-body MRI resampling grid.
inline constexpr Dims kDefaultDims{53, 256, 144};
inline constexpr Spacing kDefaultSpacing{3.0, 2.0, 2.0};

using Label = std::uint8_t;
inline constexpr Label kBackground = 0;

/// A 3-D grid of unsigned 8-bit labels. Immutable once constructed.
class LabelVolume {
public:
    LabelVolume(Dims dims, Spacing spacing);
    LabelVolume(Dims dims, Spacing spacing, std::vector<Label> labels);

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    std::span<const Label> labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }

    std::size_t index(int z, int y, int x) const noexcept
    {
        return (static_cast<std::size_t>(z) * dims_.ny + static_cast<std::size_t>(y)) * dims_.nx
            + static_cast<std::size_t>(x);
    }
    Label at(int z, int y, int x) const noexcept { return labels_[index(z, y, x)]; }
    Label operator[](std::size_t i) const noexcept { return labels_[i]; }

    std::size_t count(Label label) const noexcept;

    bool same_geometry(const LabelVolume& other) const noexcept
    {
        return dims_ == other.dims_ && spacing_ == other.spacing_;
    }
    bool operator==(const LabelVolume& other) const = default;

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<Label> labels_;
};

void validate_geometry(const Dims& dims, const Spacing& spacing);

/// The N Monte-Carlo segmentation samples of one subject for one organ label.
class SampleStack {
public:
    SampleStack(std::string subject_id, std::vector<LabelVolume> samples, Label organ_label);

    const std::string& subject_id() const noexcept { return subject_id_; }
    const std::vector<LabelVolume>& samples() const noexcept { return samples_; }
    Label organ_label() const noexcept { return organ_label_; }
    std::size_t size() const noexcept { return samples_.size(); }
    const Dims& dims() const noexcept { return samples_.front().dims(); }
    const Spacing& spacing() const noexcept { return samples_.front().spacing(); }

private:
    std::string subject_id_;
    std::vector<LabelVolume> samples_;
    Label organ_label_;
};

} // namespace biouncert
