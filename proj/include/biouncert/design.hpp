#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "biouncert/cohort.hpp"
#include "biouncert/model_fit.hpp"

namespace biouncert::stats {

/// Regression design: one row per subject, named columns, response and row weights.
struct DesignMatrix {
    ModelKind kind = ModelKind::GroupBase;
    std::vector<std::string> columns;
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd weights;
    std::vector<std::string> row_ids;

    Eigen::Index rows() const noexcept { return x.rows(); }
    Eigen::Index cols() const noexcept { return x.cols(); }

    /// Unique column names, an all-ones "intercept" column when present,
    /// finite entries, nonnegative weights and at least as many positive-weight
    /// rows as columns.
    void validate() const;
};

enum class GroupVariant { Base, Variable, Instance };
enum class ClfVariant { Base, Variable, Interaction, Instance };

std::string_view to_string(GroupVariant v) noexcept;
std::string_view to_string(ClfVariant v) noexcept;
GroupVariant parse_group_variant(std::string_view text);
ClfVariant parse_clf_variant(std::string_view text);

struct GroupModelSpec {
    GroupVariant variant = GroupVariant::Base;
    ConfidenceKind confidence_kind = ConfidenceKind::IoU;
};

struct ClfModelSpec {
    ClfVariant variant = ClfVariant::Base;
    ConfidenceKind confidence_kind = ConfidenceKind::IoU;
    bool with_covariates = false; // add age, sex, BMI next to the volume
};

ModelKind model_kind(const GroupModelSpec& spec) noexcept;
ModelKind model_kind(const ClfModelSpec& spec) noexcept;

/// Volume ~ intercept + age + sex + bmi + diabetes (+ confidence); Instance puts
/// the confidence into the weights. Throws MissingConfidence when a variant
/// needs a confidence a record lacks, InvalidValue for non-finite confidences.
DesignMatrix build_design(const Cohort& cohort, const GroupModelSpec& spec);

/// Diabetes ~ intercept (+ age + sex + bmi) + volume (+ confidence (+ v_times_c)).
DesignMatrix build_design(const Cohort& cohort, const ClfModelSpec& spec);

/// Linear-interpolated 99th percentile of the finite CV^-1 values; 1 when none are finite.
double default_inv_cv_cap(const Cohort& cohort);

/// Clips CV^-1 confidences (dedicated column and the generic column when its
/// kind is InvCV) to `cap`, replacing infinities.
Cohort clip_inv_cv(const Cohort& cohort, double cap);

} // namespace biouncert::stats
