#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "biouncert/label_volume.hpp"

namespace biouncert::metrics {

struct IouResult {
    double value = 0.0;
    bool degenerate = false; // no sample contains the organ; value is 0
};

/// |intersection of (S_i == o)| / |union of (S_i == o)| over all samples of the stack.
IouResult stack_iou(const SampleStack& stack);

/// IoU of two masks for one label; empty union gives 0.
double pair_iou(const LabelVolume& a, const LabelVolume& b, Label organ_label);

/// Foreground voxel count times voxel volume, in mm^3.
double volume_of(const LabelVolume& vol, Label organ_label);

struct CvResult {
    double cv = 0.0;
    double inv_cv = 0.0;        // +inf when cv == 0
    bool inv_cv_infinite = false;
    double mean_volume = 0.0;
};

/// sqrt(sum (V_i - mu)^2 / (N mu^2)), population normalization.
/// Throws UndefinedCv when the mean volume is zero.
CvResult coefficient_of_variation(std::span<const double> volumes);
CvResult stack_cv(const SampleStack& stack);

/// 2|P n T| / (|P| + |T|); 1 when both masks are empty. Throws DimsMismatch.
double dice(const LabelVolume& pred, const LabelVolume& truth, Label organ_label);

/// -p log2 p - (1-p) log2 (1-p), with H(0) = H(1) = 0.
double binary_entropy_bits(double p);

struct UncertaintyMap {
    Dims dims;
    Spacing spacing;
    std::vector<double> values; // in [0, 1]
};

/// Per voxel: binary entropy (bits) of the fraction of samples labelling it as organ.
UncertaintyMap uncertainty_map(const SampleStack& stack);

/// Majority vote per voxel; an exact tie (even N) goes to foreground.
LabelVolume consensus_mask(const SampleStack& stack);

struct ConfidenceReport {
    std::string subject_id;
    double iou = 0.0;
    bool iou_degenerate = false;
    double cv = 0.0;
    double inv_cv = 0.0;
    bool inv_cv_infinite = false;
    std::vector<double> volumes_mm3;
    double mean_volume_mm3 = 0.0;
    double consensus_volume_mm3 = 0.0;
};

ConfidenceReport confidence_report(const SampleStack& stack);

// "bfv1": the blv1 header with magic "bfv1", then little-endian float32 values.
void write_uncertainty_map(const UncertaintyMap& map, const std::filesystem::path& path);
void write_uncertainty_map(const UncertaintyMap& map, std::ostream& out);
UncertaintyMap read_uncertainty_map(const std::filesystem::path& path);
UncertaintyMap read_uncertainty_map(std::istream& in);

} // namespace biouncert::metrics
