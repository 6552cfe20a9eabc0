#include "biouncert/cohort_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>

#include "biouncert/error.hpp"
#include "biouncert/parallel.hpp"
#include "biouncert/random.hpp"

namespace biouncert::phantom {

namespace {

// Largest semi-axis as a fraction of the grid half-extent. Leaves room for
// sampler perturbations (shift, scale, bulges) inside the grid.
constexpr double kMaxFill = 0.85;

std::string subject_name(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sub%04zu", index + 1);
    return buf;
}

} // namespace

EffectSpec default_effect_spec(double mean_volume, const CovariateModel& cov, double diabetic_fraction)
{
    EffectSpec e;
    e.beta_age = -0.002 * mean_volume;
    e.beta_sex = 0.10 * mean_volume;
    e.beta_bmi = 0.0133 * mean_volume;
    e.beta_diabetes = 0.10 * mean_volume;
    e.noise_sd = 0.20 * mean_volume;
    e.beta0 = mean_volume - e.beta_age * cov.age_mean - e.beta_sex * cov.male_fraction - e.beta_bmi * cov.bmi_mean
        - e.beta_diabetes * diabetic_fraction;
    return e;
}

double default_mean_volume(Dims dims, Spacing spacing)
{
    auto extent = [](Dims d, Spacing s) { return d.nz * s.sz * d.ny * s.sy * d.nx * s.sx; };
    return 1.5e6 * extent(dims, spacing) / extent(kDefaultDims, kDefaultSpacing);
}

CohortSimConfig default_cohort_config(Dims dims, Spacing spacing)
{
    CohortSimConfig cfg;
    cfg.dims = dims;
    cfg.spacing = spacing;
    cfg.effect = default_effect_spec(default_mean_volume(dims, spacing), cfg.covariates, cfg.diabetic_fraction);
    return cfg;
}

void CohortSimConfig::validate() const
{
    if (n_subjects < 10)
        throw Error(Errc::InvalidConfig, "n_subjects must be at least 10");
    if (!(diabetic_fraction > 0.0 && diabetic_fraction < 1.0))
        throw Error(Errc::InvalidConfig, "diabetic_fraction must lie in (0,1)");
    if (!(effect.noise_sd >= 0.0))
        throw Error(Errc::InvalidConfig, "noise_sd must be nonnegative");
    if (!(difficulty_log_sd >= 0.0) || !(diabetic_difficulty > 0.0))
        throw Error(Errc::InvalidConfig, "difficulty parameters must be nonnegative / positive");
    if (organ_label == kBackground)
        throw Error(Errc::InvalidConfig, "organ label must be nonzero");
    validate_geometry(dims, spacing);
    sampler.validate();
}

std::vector<SubjectPlan> plan_cohort(const CohortSimConfig& cfg)
{
    cfg.validate();
    const auto n = static_cast<std::size_t>(cfg.n_subjects);
    const auto n_diabetic = static_cast<std::size_t>(std::llround(cfg.diabetic_fraction * cfg.n_subjects));

    Rng label_rng = make_rng(cfg.seed, {0});
    std::vector<int> diabetes(n, 0);
    std::fill(diabetes.begin(), diabetes.begin() + static_cast<std::ptrdiff_t>(n_diabetic), 1);
    std::shuffle(diabetes.begin(), diabetes.end(), label_rng);

    // Semi-axes proportional to the grid half-extents: volume = (4/3) pi alpha^3 prod(E/2).
    const Dims& d = cfg.dims;
    const double half_box = (d.nz * cfg.spacing.sz / 2.0) * (d.ny * cfg.spacing.sy / 2.0) * (d.nx * cfg.spacing.sx / 2.0);

    std::vector<SubjectPlan> plans(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = make_rng(cfg.seed, {1, i});
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        SubjectPlan& p = plans[i];
        p.index = i;
        p.subject_id = subject_name(i);
        p.diabetes = diabetes[i];
        p.age_years = cfg.covariates.age_mean + cfg.covariates.age_sd * normal(rng);
        p.sex = unit(rng) < cfg.covariates.male_fraction ? 1 : 0;
        p.bmi = cfg.covariates.bmi_mean + cfg.covariates.bmi_sd * normal(rng);
        const auto& e = cfg.effect;
        p.planted_volume_mm3 = e.beta0 + e.beta_age * p.age_years + e.beta_sex * p.sex + e.beta_bmi * p.bmi
            + e.beta_diabetes * p.diabetes + e.noise_sd * normal(rng);
        if (!(p.planted_volume_mm3 > 0.0))
            throw Error(Errc::InfeasibleEffect, "subject " + p.subject_id + " has planted volume "
                                                    + std::to_string(p.planted_volume_mm3) + " mm^3 (radii would be negative)");
        const double alpha = std::cbrt(p.planted_volume_mm3 / (4.0 / 3.0 * std::numbers::pi * half_box));
        if (alpha > kMaxFill)
            throw Error(Errc::InfeasibleEffect, "subject " + p.subject_id + " volume "
                                                    + std::to_string(p.planted_volume_mm3) + " mm^3 does not fit the grid");
        for (int k = 0; k < 3; ++k) {
            p.center_vox[k] = (d[k] - 1) / 2.0;
            p.radii_vox[k] = alpha * d[k] / 2.0;
        }
        p.difficulty = std::exp(cfg.difficulty_log_sd * normal(rng)) * (p.diabetes ? cfg.diabetic_difficulty : 1.0);

        p.sampler = cfg.sampler;
        p.sampler.seed = derive_seed(cfg.seed, {2, i});
        p.sampler.dropout_rate = std::min(0.45, cfg.sampler.dropout_rate * p.difficulty);
        p.sampler.noise_std = cfg.sampler.noise_std * p.difficulty;
        p.sampler.latent_std = cfg.sampler.latent_std * p.difficulty;
    }
    return plans;
}

SimulatedSubject realize_subject(const SubjectPlan& plan, const CohortSimConfig& cfg)
{
    Phantom ph = make_phantom(cfg.dims, cfg.spacing, plan.center_vox, plan.radii_vox, cfg.organ_label,
                              plan.sampler.seed);
    SampleStack stack = sample_stack(ph, plan.sampler, plan.subject_id);
    const double volume = static_cast<double>(ph.truth.count(cfg.organ_label)) * cfg.spacing.voxel_volume_mm3();
    return SimulatedSubject{plan, std::move(ph), std::move(stack), volume};
}

SubjectRecord skeleton_record(const SubjectPlan& plan, double true_volume_mm3)
{
    SubjectRecord r;
    r.subject_id = plan.subject_id;
    r.age_years = plan.age_years;
    r.sex = plan.sex;
    r.bmi = plan.bmi;
    r.diabetes = plan.diabetes;
    r.volume_mm3 = true_volume_mm3;
    r.confidence = 1.0;
    r.confidence_kind = ConfidenceKind::IoU;
    r.true_volume_mm3 = true_volume_mm3;
    return r;
}

SimulatedCohort simulate_cohort(const CohortSimConfig& cfg)
{
    const auto plans = plan_cohort(cfg);
    std::vector<std::optional<SimulatedSubject>> slots(plans.size());
    parallel_for(plans.size(), cfg.jobs, [&](std::size_t i) { slots[i] = realize_subject(plans[i], cfg); });

    SimulatedCohort out;
    std::vector<SubjectRecord> records;
    for (auto& s : slots) {
        records.push_back(skeleton_record(s->plan, s->true_volume_mm3));
        out.subjects.push_back(std::move(*s));
    }
    out.cohort = Cohort(std::move(records));
    out.planted = cfg.effect;
    return out;
}

} // namespace biouncert::phantom
