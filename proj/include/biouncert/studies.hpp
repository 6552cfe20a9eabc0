#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biouncert/cohort.hpp"
#include "biouncert/cohort_sim.hpp"
#include "biouncert/confidence.hpp"
#include "biouncert/design.hpp"
#include "biouncert/model_fit.hpp"
#include "biouncert/regression.hpp"
#include "biouncert/report.hpp"
#include "biouncert/splits.hpp"

namespace biouncert::eval {

// ---- Dice ----

struct DiceSummary {
    double mean = 0.0;
    double std = 0.0; // population
    std::vector<double> per_subject;
};

DiceSummary summarize_dice(std::vector<double> per_subject);

/// Dice of each stack's consensus mask against the truth with the same subject id.
/// Throws IdMismatch when the id sets differ.
DiceSummary dice_study(std::span<const SampleStack> stacks, const std::map<std::string, LabelVolume>& truths);

// ---- cohort assembly ----

enum class VolumeSource { Consensus, Mean };

VolumeSource parse_volume_source(std::string_view text);
std::string_view to_string(VolumeSource source) noexcept;

/// Fills the confidence columns of `record` from a stack's confidence report and
/// sets volume_mm3 from the chosen biomarker. The generic confidence becomes the IoU.
SubjectRecord with_confidence(SubjectRecord record, const metrics::ConfidenceReport& report, VolumeSource source);

/// Column label of a model cell, e.g. "Base", "Variable IoU", "Instance CV^-1".
std::string cell_label(stats::GroupVariant variant, ConfidenceKind kind);
std::string cell_label(stats::ClfVariant variant, ConfidenceKind kind);

// ---- group analysis ----

struct GroupStudyOptions {
    std::vector<stats::GroupVariant> variants{stats::GroupVariant::Base, stats::GroupVariant::Variable,
                                              stats::GroupVariant::Instance};
    std::vector<ConfidenceKind> kinds{ConfidenceKind::IoU, ConfidenceKind::InvCV};
    bool standardize = true; // z-score age, BMI and volume on the cohort
    std::optional<double> inv_cv_cap; // default: 99th percentile of the finite values
    bool include_manual = true;       // fit on true_volume_mm3 when every row has it
    stats::LinearFitOptions fit{.drop_aliased = true};
};

struct GroupCell {
    std::string label;
    stats::GroupModelSpec spec;
    std::optional<double> beta4;
    std::optional<ModelFit> fit;
    std::string failure;
};

struct GroupStudyResult {
    std::vector<GroupCell> cells; // Base once, then each other variant per kind
    std::optional<GroupCell> manual;
    std::optional<double> planted_beta4;
    double inv_cv_cap = 1.0;

    /// Planted value when given, else the Manual fit.
    std::optional<double> reference() const;
    /// Successful cell indices ordered by |beta4 - reference|, ties by position.
    std::vector<std::size_t> ranking() const;
};

/// Coefficient of diabetes in each requested model, fitted on the whole cohort.
/// `planted_beta4` is the planted coefficient on the fitted scale, when known.
GroupStudyResult group_study(const Cohort& cohort, const GroupStudyOptions& options,
                             std::optional<double> planted_beta4 = std::nullopt);

// ---- classification ----

struct ClfStudyOptions {
    std::vector<stats::ClfVariant> variants{stats::ClfVariant::Base, stats::ClfVariant::Variable,
                                            stats::ClfVariant::Interaction, stats::ClfVariant::Instance};
    std::vector<ConfidenceKind> kinds{ConfidenceKind::IoU, ConfidenceKind::InvCV};
    SplitSpec split;
    bool standardize = true; // z-score volume (and covariates) with training-split statistics
    bool with_covariates = false;
    std::optional<double> inv_cv_cap;
    bool include_manual = true;
    unsigned jobs = 0;
    stats::LogisticOptions fit{.drop_aliased = true};
};

struct ClfCell {
    std::string label;
    stats::ClfModelSpec spec;
    std::vector<double> accuracies; // one per repeat, in repeat order
    std::optional<double> mean_accuracy;
    int unconverged_fits = 0;
    std::string failure;
};

struct ClfStudyResult {
    std::vector<ClfCell> cells;
    std::optional<ClfCell> manual;
    int resampled_splits = 0; // total extra draws over all repeats
    double inv_cv_cap = 1.0;
};

/// Repeated random splits: fit on train, accuracy at threshold 0.5 on test,
/// mean over repeats. Results do not depend on options.jobs.
ClfStudyResult classification_study(const Cohort& cohort, const ClfStudyOptions& options);

// ---- report tables ----

ReportTable group_table(const std::vector<std::pair<std::string, GroupStudyResult>>& rows);
ReportTable classification_table(const std::vector<std::pair<std::string, ClfStudyResult>>& rows);
ReportTable dice_table(const std::vector<std::pair<std::string, DiceSummary>>& rows);

// ---- end to end ----

struct EvaluateConfig {
    phantom::CohortSimConfig cohort;
    std::vector<phantom::SamplerKind> samplers{phantom::SamplerKind::McDropout, phantom::SamplerKind::FullyBayesian,
                                               phantom::SamplerKind::Probabilistic,
                                               phantom::SamplerKind::Hierarchical};
    VolumeSource volume_source = VolumeSource::Consensus;
    GroupStudyOptions group;
    ClfStudyOptions classification;
};

/// Coarser grid with the default field of view, for desk-scale runs.
Dims evaluate_default_dims() noexcept;
Spacing evaluate_default_spacing() noexcept;

struct EvaluateResult {
    StudyReport report;
    std::vector<std::pair<std::string, Cohort>> cohorts; // per sampler display name
};

/// Simulates one cohort per sampler (same subjects, different segmentation
/// models), measures confidence, and runs the Dice, group and classification studies.
/// Stacks are streamed, so memory stays at one stack per worker.
EvaluateResult evaluate(const EvaluateConfig& config);

/// Builds the cohort of one sampler by realizing every planned subject.
/// `dice_out`, when given, receives consensus-vs-truth Dice per subject.
Cohort simulate_confidence_cohort(const phantom::CohortSimConfig& config, VolumeSource source,
                                  std::vector<double>* dice_out = nullptr);

} // namespace biouncert::eval
