#include "biouncert/label_volume.hpp"

#include <algorithm>
#include <cmath>

#include "biouncert/error.hpp"

namespace biouncert {

void validate_geometry(const Dims& dims, const Spacing& spacing)
{
    if (dims.nz <= 0 || dims.ny <= 0 || dims.nx <= 0)
        throw Error(Errc::InvalidVolume, "dims must be positive");
    for (int axis = 0; axis < 3; ++axis) {
        if (!(spacing[axis] > 0.0) || !std::isfinite(spacing[axis]))
            throw Error(Errc::InvalidVolume, "spacing must be positive and finite");
    }
}

LabelVolume::LabelVolume(Dims dims, Spacing spacing)
    : dims_(dims), spacing_(spacing)
{
    validate_geometry(dims_, spacing_);
    labels_.assign(dims_.voxel_count(), kBackground);
}

LabelVolume::LabelVolume(Dims dims, Spacing spacing, std::vector<Label> labels)
    : dims_(dims), spacing_(spacing), labels_(std::move(labels))
{
    validate_geometry(dims_, spacing_);
    if (labels_.size() != dims_.voxel_count())
        throw Error(Errc::PayloadLength,
                    "expected " + std::to_string(dims_.voxel_count()) + " labels, got "
                        + std::to_string(labels_.size()));
}

std::size_t LabelVolume::count(Label label) const noexcept
{
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

SampleStack::SampleStack(std::string subject_id, std::vector<LabelVolume> samples, Label organ_label)
    : subject_id_(std::move(subject_id)), samples_(std::move(samples)), organ_label_(organ_label)
{
    if (samples_.size() < 2)
        throw Error(Errc::InvalidStack, "a sample stack needs at least two samples");
    if (organ_label_ == kBackground)
        throw Error(Errc::InvalidStack, "organ label 0 is reserved for background");
    for (const auto& s : samples_) {
        if (!s.same_geometry(samples_.front()))
            throw Error(Errc::InvalidStack, "samples of subject '" + subject_id_ + "' differ in dims or spacing");
    }
}

} // namespace biouncert
