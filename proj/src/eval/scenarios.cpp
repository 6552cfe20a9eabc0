#include "biouncert/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "biouncert/confidence.hpp"
#include "biouncert/error.hpp"
#include "biouncert/random.hpp"

namespace biouncert::eval {

void CorruptionScenario::validate() const
{
    auto bad = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
    if (n_subjects < 4)
        bad("n_subjects must be at least 4");
    if (n_diabetic < 1 || n_diabetic >= n_subjects)
        bad("n_diabetic must lie in [1, n_subjects)");
    if (!(uncertainty_floor >= 0.0) || !(uncertainty_range >= 0.0) || uncertainty_floor + uncertainty_range > 1.0)
        bad("uncertainty floor + range must lie in [0,1]");
    if (!(shape_nondiabetic > 0.0) || !(shape_diabetic > 0.0))
        bad("uncertainty shapes must be positive");
    if (!(bias >= 0.0) || bias > 1.0 || !(noise >= 0.0) || !(cv_spread >= 0.0))
        bad("bias must lie in [0,1]; noise and cv_spread must be nonnegative");
    if (n_samples < 2)
        bad("n_samples must be at least 2");
    if (!(effect.noise_sd >= 0.0))
        bad("effect noise_sd must be nonnegative");
}

ScenarioCohort make_scenario_cohort(const CorruptionScenario& sc, int replicate)
{
    sc.validate();
    Rng rng = make_rng(sc.seed, {static_cast<std::uint64_t>(replicate)});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto n = static_cast<std::size_t>(sc.n_subjects);
    std::vector<int> diabetes(n, 0);
    std::fill(diabetes.begin(), diabetes.begin() + sc.n_diabetic, 1);
    std::shuffle(diabetes.begin(), diabetes.end(), rng);

    const auto& e = sc.effect;
    const auto& cov = sc.covariates;
    const double diabetic_share = static_cast<double>(sc.n_diabetic) / static_cast<double>(n);
    const double mean_volume = e.beta0 + e.beta_age * cov.age_mean + e.beta_sex * cov.male_fraction
        + e.beta_bmi * cov.bmi_mean + e.beta_diabetes * diabetic_share;
    if (!(mean_volume > 0.0))
        throw Error(Errc::InfeasibleEffect, "planted mean volume must be positive");

    std::vector<SubjectRecord> records;
    records.reserve(n);
    std::vector<double> truth(n);
    std::vector<double> sample_volumes(static_cast<std::size_t>(sc.n_samples));
    for (std::size_t i = 0; i < n; ++i) {
        SubjectRecord r;
        char id[32];
        std::snprintf(id, sizeof(id), "sub%04zu", i + 1);
        r.subject_id = id;
        r.age_years = cov.age_mean + cov.age_sd * normal(rng);
        r.sex = unit(rng) < cov.male_fraction ? 1 : 0;
        r.bmi = cov.bmi_mean + cov.bmi_sd * normal(rng);
        r.diabetes = diabetes[i];
        const double v_true = e.beta0 + e.beta_age * r.age_years + e.beta_sex * r.sex + e.beta_bmi * r.bmi
            + e.beta_diabetes * r.diabetes + e.noise_sd * normal(rng);

        const double shape = r.diabetes ? sc.shape_diabetic : sc.shape_nondiabetic;
        const double u = sc.uncertainty_floor + sc.uncertainty_range * std::pow(unit(rng), shape);
        double v_obs = v_true * (1.0 - sc.bias * u * u) + sc.noise * u * u * mean_volume * normal(rng);
        // a segmentation never measures less than a sliver of the organ
        v_obs = std::max(v_obs, 0.05 * mean_volume);

        for (auto& v : sample_volumes)
            v = std::max(v_obs * (1.0 + sc.cv_spread * u * normal(rng)), 0.0);
        const auto cv = metrics::coefficient_of_variation(sample_volumes);

        truth[i] = v_true;
        r.volume_mm3 = v_obs;
        r.true_volume_mm3 = v_true;
        r.iou = 1.0 - u;
        r.cv = cv.cv;
        r.inv_cv = cv.inv_cv;
        r.mean_volume_mm3 = cv.mean_volume;
        r.confidence = *r.iou;
        r.confidence_kind = ConfidenceKind::IoU;
        records.push_back(std::move(r));
    }

    const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : truth)
        ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));

    ScenarioCohort out;
    out.cohort = Cohort(std::move(records));
    out.planted_beta4 = e.beta_diabetes;
    out.planted_beta4_standardized = sd > 0.0 ? e.beta_diabetes / sd : 0.0;
    return out;
}

CorruptionScenario group_corruption_scenario(std::uint64_t seed)
{
    CorruptionScenario sc;
    sc.effect = phantom::default_effect_spec(1.5e6, sc.covariates,
                                             static_cast<double>(sc.n_diabetic) / sc.n_subjects);
    sc.seed = seed;
    return sc;
}

CorruptionScenario informative_confidence_scenario(std::uint64_t seed)
{
    CorruptionScenario sc;
    sc.effect.beta0 = 1.5e6;
    sc.effect.beta_diabetes = 1.0e5;
    sc.effect.noise_sd = 3.0e5;
    sc.shape_diabetic = 1.0;
    sc.shape_nondiabetic = 3.0;
    sc.bias = 0.3;
    sc.noise = 0.0;
    sc.seed = seed;
    return sc;
}

CorruptionScenario chance_scenario(std::uint64_t seed)
{
    CorruptionScenario sc;
    sc.n_diabetic = sc.n_subjects / 2;
    sc.effect.beta0 = 1.5e6;
    sc.effect.noise_sd = 3.0e5;
    sc.shape_diabetic = 3.0;
    sc.shape_nondiabetic = 3.0;
    sc.bias = 0.3;
    sc.noise = 0.0;
    sc.seed = seed;
    return sc;
}

} // namespace biouncert::eval
