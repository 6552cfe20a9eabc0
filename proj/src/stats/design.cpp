#include "biouncert/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "biouncert/error.hpp"

namespace biouncert::stats {

namespace {

double required_confidence(const SubjectRecord& r, ConfidenceKind kind)
{
    const auto c = confidence_of(r, kind);
    if (!c)
        throw Error(Errc::MissingConfidence,
                    "subject '" + r.subject_id + "' has no " + std::string(to_string(kind)) + " confidence");
    if (!std::isfinite(*c) || *c < 0.0)
        throw Error(Errc::InvalidValue, "subject '" + r.subject_id + "' has non-finite or negative "
                                            + std::string(to_string(kind)) + " confidence; clip CV^-1 first");
    return *c;
}

DesignMatrix allocate(ModelKind kind, const Cohort& cohort, std::vector<std::string> columns)
{
    DesignMatrix d;
    d.kind = kind;
    d.columns = std::move(columns);
    const auto n = static_cast<Eigen::Index>(cohort.size());
    d.x.resize(n, static_cast<Eigen::Index>(d.columns.size()));
    d.y.resize(n);
    d.weights = Eigen::VectorXd::Ones(n);
    for (const auto& r : cohort.records())
        d.row_ids.push_back(r.subject_id);
    return d;
}

} // namespace

void DesignMatrix::validate() const
{
    std::set<std::string> unique(columns.begin(), columns.end());
    if (unique.size() != columns.size())
        throw Error(Errc::ColumnMismatch, "design column names must be unique");
    if (static_cast<Eigen::Index>(columns.size()) != x.cols())
        throw Error(Errc::ColumnMismatch, "design has " + std::to_string(x.cols()) + " columns but "
                                              + std::to_string(columns.size()) + " names");
    if (y.size() != x.rows() || weights.size() != x.rows())
        throw Error(Errc::ColumnMismatch, "response/weights length does not match the design rows");
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] == "intercept" && !(x.col(static_cast<Eigen::Index>(j)).array() == 1.0).all())
            throw Error(Errc::InvalidValue, "intercept column must be all ones");
    }
    if (!x.allFinite() || !y.allFinite() || !weights.allFinite())
        throw Error(Errc::InvalidValue, "design contains non-finite values");
    if ((weights.array() < 0.0).any())
        throw Error(Errc::InvalidValue, "weights must be nonnegative");
    const auto positive = (weights.array() > 0.0).count();
    if (positive == 0)
        throw Error(Errc::AllWeightsZero, "every row has weight zero");
    if (positive < x.cols())
        throw Error(Errc::SingularDesign, std::to_string(positive) + " rows with positive weight for "
                                              + std::to_string(x.cols()) + " columns");
}

std::string_view to_string(GroupVariant v) noexcept
{
    switch (v) {
    case GroupVariant::Base: return "base";
    case GroupVariant::Variable: return "variable";
    case GroupVariant::Instance: return "instance";
    }
    return "unknown";
}

std::string_view to_string(ClfVariant v) noexcept
{
    switch (v) {
    case ClfVariant::Base: return "base";
    case ClfVariant::Variable: return "variable";
    case ClfVariant::Interaction: return "interaction";
    case ClfVariant::Instance: return "instance";
    }
    return "unknown";
}

GroupVariant parse_group_variant(std::string_view text)
{
    for (auto v : {GroupVariant::Base, GroupVariant::Variable, GroupVariant::Instance}) {
        if (to_string(v) == text)
            return v;
    }
    throw Error(Errc::InvalidConfig, "unknown group-analysis variant '" + std::string(text) + "'");
}

ClfVariant parse_clf_variant(std::string_view text)
{
    for (auto v : {ClfVariant::Base, ClfVariant::Variable, ClfVariant::Interaction, ClfVariant::Instance}) {
        if (to_string(v) == text)
            return v;
    }
    throw Error(Errc::InvalidConfig, "unknown classification variant '" + std::string(text) + "'");
}

ModelKind model_kind(const GroupModelSpec& spec) noexcept
{
    switch (spec.variant) {
    case GroupVariant::Base: return ModelKind::GroupBase;
    case GroupVariant::Variable: return ModelKind::GroupVariable;
    case GroupVariant::Instance: return ModelKind::GroupInstance;
    }
    return ModelKind::GroupBase;
}

ModelKind model_kind(const ClfModelSpec& spec) noexcept
{
    switch (spec.variant) {
    case ClfVariant::Base: return ModelKind::ClfBase;
    case ClfVariant::Variable: return ModelKind::ClfVariable;
    case ClfVariant::Interaction: return ModelKind::ClfInteraction;
    case ClfVariant::Instance: return ModelKind::ClfInstance;
    }
    return ModelKind::ClfBase;
}

DesignMatrix build_design(const Cohort& cohort, const GroupModelSpec& spec)
{
    std::vector<std::string> cols{"intercept", "age", "sex", "bmi", "diabetes"};
    if (spec.variant == GroupVariant::Variable)
        cols.push_back("confidence");
    DesignMatrix d = allocate(model_kind(spec), cohort, std::move(cols));
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const auto& r = cohort[static_cast<std::size_t>(i)];
        d.x(i, 0) = 1.0;
        d.x(i, 1) = r.age_years;
        d.x(i, 2) = r.sex;
        d.x(i, 3) = r.bmi;
        d.x(i, 4) = r.diabetes;
        if (spec.variant == GroupVariant::Variable)
            d.x(i, 5) = required_confidence(r, spec.confidence_kind);
        else if (spec.variant == GroupVariant::Instance)
            d.weights(i) = required_confidence(r, spec.confidence_kind);
        d.y(i) = r.volume_mm3;
    }
    return d;
}

DesignMatrix build_design(const Cohort& cohort, const ClfModelSpec& spec)
{
    std::vector<std::string> cols{"intercept"};
    if (spec.with_covariates)
        cols.insert(cols.end(), {"age", "sex", "bmi"});
    cols.push_back("volume");
    if (spec.variant == ClfVariant::Variable || spec.variant == ClfVariant::Interaction)
        cols.push_back("confidence");
    if (spec.variant == ClfVariant::Interaction)
        cols.push_back("v_times_c");
    DesignMatrix d = allocate(model_kind(spec), cohort, std::move(cols));
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const auto& r = cohort[static_cast<std::size_t>(i)];
        Eigen::Index j = 0;
        d.x(i, j++) = 1.0;
        if (spec.with_covariates) {
            d.x(i, j++) = r.age_years;
            d.x(i, j++) = r.sex;
            d.x(i, j++) = r.bmi;
        }
        d.x(i, j++) = r.volume_mm3;
        if (spec.variant != ClfVariant::Base) {
            const double c = required_confidence(r, spec.confidence_kind);
            if (spec.variant == ClfVariant::Instance) {
                d.weights(i) = c;
            } else {
                d.x(i, j++) = c;
                if (spec.variant == ClfVariant::Interaction)
                    d.x(i, j++) = r.volume_mm3 * c;
            }
        }
        d.y(i) = r.diabetes;
    }
    return d;
}

double default_inv_cv_cap(const Cohort& cohort)
{
    std::vector<double> finite;
    for (const auto& r : cohort.records()) {
        if (auto c = confidence_of(r, ConfidenceKind::InvCV); c && std::isfinite(*c))
            finite.push_back(*c);
    }
    if (finite.empty())
        return 1.0;
    std::sort(finite.begin(), finite.end());
    const double h = 0.99 * static_cast<double>(finite.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, finite.size() - 1);
    return finite[lo] + (h - static_cast<double>(lo)) * (finite[hi] - finite[lo]);
}

Cohort clip_inv_cv(const Cohort& cohort, double cap)
{
    if (!(cap > 0.0) || !std::isfinite(cap))
        throw Error(Errc::InvalidConfig, "CV^-1 cap must be positive and finite");
    if (!cohort.standardization().empty())
        throw Error(Errc::InvalidConfig, "clip confidences before standardizing");
    std::vector<SubjectRecord> records = cohort.records();
    for (auto& r : records) {
        if (r.inv_cv)
            r.inv_cv = std::min(*r.inv_cv, cap);
        if (r.confidence_kind == ConfidenceKind::InvCV)
            r.confidence = std::min(r.confidence, cap);
    }
    return Cohort(std::move(records));
}

} // namespace biouncert::stats
