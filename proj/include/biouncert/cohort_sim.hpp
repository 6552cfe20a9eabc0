#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "biouncert/cohort.hpp"
#include "biouncert/label_volume.hpp"
#include "biouncert/phantom.hpp"
#include "biouncert/samplers.hpp"

namespace biouncert::phantom {

/// Planted coefficients of the linear volume model
///   V = beta0 + beta_age*A + beta_sex*S + beta_bmi*B + beta_diabetes*D + N(0, noise_sd^2)
/// in mm^3 and raw covariate units.
struct EffectSpec {
    double beta0 = 0.0;
    double beta_age = 0.0;
    double beta_sex = 0.0;
    double beta_bmi = 0.0;
    double beta_diabetes = 0.0;
    double noise_sd = 0.0;
};

struct CovariateModel {
    double age_mean = 60.0;
    double age_sd = 10.0;
    double bmi_mean = 28.0;
    double bmi_sd = 4.0;
    double male_fraction = 0.5;
};

/// Liver-like defaults scaled to a mean volume: age -0.2%/year, male +10%,
/// BMI +1.33%/unit, diabetes +10%, residual sd 20% of the mean.
EffectSpec default_effect_spec(double mean_volume_mm3, const CovariateModel& covariates = {},
                               double diabetic_fraction = 109.0 / 308.0);

/// Mean volume giving the same organ-to-field-of-view ratio as a 1.5 l liver
/// on the default 53x256x144 grid at 3x2x2 mm.
double default_mean_volume(Dims dims, Spacing spacing);

struct CohortSimConfig {
    int n_subjects = 308;
    double diabetic_fraction = 109.0 / 308.0;
    EffectSpec effect;
    CovariateModel covariates;
    Dims dims = kDefaultDims;
    Spacing spacing = kDefaultSpacing;
    Label organ_label = 1;
    SamplerConfig sampler;
    // Per-subject multiplier on the sampler's stochasticity knob:
    // exp(difficulty_log_sd * N(0,1)), times diabetic_difficulty for diabetics.
    double difficulty_log_sd = 0.0;
    double diabetic_difficulty = 1.0;
    std::uint64_t seed = 0;
    unsigned jobs = 0;

    void validate() const;
};

/// Default config on the given grid with default_effect_spec(default_mean_volume(...)).
CohortSimConfig default_cohort_config(Dims dims = kDefaultDims, Spacing spacing = kDefaultSpacing);

/// Everything about one subject that does not need a voxel grid.
struct SubjectPlan {
    std::size_t index = 0;
    std::string subject_id;
    double age_years = 0.0;
    int sex = 0;
    double bmi = 0.0;
    int diabetes = 0;
    double planted_volume_mm3 = 0.0;
    Vec3 center_vox{};
    Vec3 radii_vox{};
    double difficulty = 1.0;
    SamplerConfig sampler; // seeded per subject, knob scaled by difficulty
};

struct SimulatedSubject {
    SubjectPlan plan;
    Phantom phantom;
    SampleStack stack;
    double true_volume_mm3 = 0.0; // rasterized truth
};

/// Draws covariates, diabetes labels (exactly round(n * fraction) diabetics) and
/// planted volumes, and converts volumes into ellipsoid radii.
/// Throws InfeasibleEffect when a planted volume is non-positive or does not fit the grid.
std::vector<SubjectPlan> plan_cohort(const CohortSimConfig& cfg);

/// Rasterizes the phantom and draws its sample stack.
SimulatedSubject realize_subject(const SubjectPlan& plan, const CohortSimConfig& cfg);

/// Cohort skeleton: covariates, volume_mm3 = true_volume_mm3 = rasterized truth volume,
/// confidence 1 (IoU). Confidence columns are filled in later from the stacks.
SubjectRecord skeleton_record(const SubjectPlan& plan, double true_volume_mm3);

struct SimulatedCohort {
    std::vector<SimulatedSubject> subjects;
    Cohort cohort;
    EffectSpec planted;
};

/// plan_cohort + realize_subject for every subject (parallel over cfg.jobs).
/// Keeps all stacks in memory; use plan/realize directly for large grids.
SimulatedCohort simulate_cohort(const CohortSimConfig& cfg);

} // namespace biouncert::phantom
