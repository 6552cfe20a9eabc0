#pragma once

#include <cstdint>

#include "biouncert/cohort.hpp"
#include "biouncert/cohort_sim.hpp"

namespace biouncert::eval {

/// Biomarker-level cohort generator: planted volumes plus a segmentation
/// corruption whose size follows a per-subject uncertainty u in [floor, floor + range].
///
///   u      = floor + range * x^shape,  x ~ U(0,1), shape depending on diabetes
///   V_obs  = V (1 - bias u^2) + noise u^2 V_mean N(0,1)
///   IoU    = 1 - u
///   sample volumes V_k = V_obs (1 + spread u N(0,1)), k = 1..n_samples, give CV.
///
/// Smaller shapes put more mass at high uncertainty, so diabetics with a
/// smaller shape are segmented worse on average.
struct CorruptionScenario {
    int n_subjects = 308;
    int n_diabetic = 109;
    phantom::EffectSpec effect;
    phantom::CovariateModel covariates;
    double uncertainty_floor = 0.02;
    double uncertainty_range = 0.6;
    double shape_nondiabetic = 3.0;
    double shape_diabetic = 1.5;
    double bias = 0.8;
    double noise = 0.5;
    double cv_spread = 0.3;
    int n_samples = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ScenarioCohort {
    Cohort cohort;              // volume_mm3 = V_obs, true_volume_mm3 = V
    double planted_beta4 = 0.0; // raw units
    /// planted_beta4 / population sd of the true volumes: the diabetes
    /// coefficient a fit on z-scored volumes estimates.
    double planted_beta4_standardized = 0.0;
};

/// Replicate `replicate` of the scenario, drawn from the stream (seed, replicate).
ScenarioCohort make_scenario_cohort(const CorruptionScenario& scenario, int replicate);

/// Liver-like planted model with diabetics segmented worse and large-uncertainty
/// subjects shrunk and noisy: weighting by confidence should recover beta_4 better.
CorruptionScenario group_corruption_scenario(std::uint64_t seed = 0);
/// Volume alone separates the classes weakly; confidence differs between classes.
CorruptionScenario informative_confidence_scenario(std::uint64_t seed = 0);
/// Balanced classes, no volume effect, identical uncertainty distributions.
CorruptionScenario chance_scenario(std::uint64_t seed = 0);

} // namespace biouncert::eval
