#include "biouncert/studies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "biouncert/error.hpp"
#include "biouncert/parallel.hpp"

namespace biouncert::eval {

namespace {

const std::vector<std::string> kGroupZColumns{"age", "bmi", "volume_mm3"};

std::string_view kind_suffix(ConfidenceKind kind) noexcept
{
    return kind == ConfidenceKind::IoU ? "IoU" : "CV^-1";
}

bool uses_inv_cv(bool any_confidence_variant, const std::vector<ConfidenceKind>& kinds)
{
    return any_confidence_variant && std::find(kinds.begin(), kinds.end(), ConfidenceKind::InvCV) != kinds.end();
}

// Cohort with the measured volume replaced by the true volume, or nullopt when
// some subject has no true volume.
std::optional<Cohort> truth_cohort(const Cohort& cohort)
{
    std::vector<SubjectRecord> records = cohort.records();
    for (auto& r : records) {
        if (!r.true_volume_mm3)
            return std::nullopt;
        r.volume_mm3 = *r.true_volume_mm3;
    }
    return Cohort(std::move(records));
}

double population_sd(const std::vector<double>& v)
{
    if (v.empty())
        return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

GroupCell fit_group_cell(const Cohort& cohort, std::string label, const stats::GroupModelSpec& spec,
                         const stats::LinearFitOptions& options)
{
    GroupCell cell;
    cell.label = std::move(label);
    cell.spec = spec;
    try {
        const auto design = stats::build_design(cohort, spec);
        auto fit = spec.variant == stats::GroupVariant::Instance ? stats::fit_wls(design, options)
                                                                 : stats::fit_ols(design, options);
        const auto b = fit.find("diabetes");
        if (!b || !std::isfinite(*b))
            cell.failure = "diabetes coefficient is aliased";
        else
            cell.beta4 = *b;
        cell.fit = std::move(fit);
    } catch (const std::exception& e) {
        cell.failure = e.what();
    }
    return cell;
}

} // namespace

// ---- Dice ----

DiceSummary summarize_dice(std::vector<double> per_subject)
{
    DiceSummary s;
    s.per_subject = std::move(per_subject);
    if (s.per_subject.empty())
        return s;
    s.mean = std::accumulate(s.per_subject.begin(), s.per_subject.end(), 0.0)
        / static_cast<double>(s.per_subject.size());
    s.std = population_sd(s.per_subject);
    return s;
}

DiceSummary dice_study(std::span<const SampleStack> stacks, const std::map<std::string, LabelVolume>& truths)
{
    if (stacks.size() != truths.size())
        throw Error(Errc::IdMismatch, std::to_string(stacks.size()) + " stacks but " + std::to_string(truths.size())
                                          + " truth masks");
    std::vector<double> values;
    values.reserve(stacks.size());
    for (const auto& stack : stacks) {
        const auto it = truths.find(stack.subject_id());
        if (it == truths.end())
            throw Error(Errc::IdMismatch, "no truth mask for subject '" + stack.subject_id() + "'");
        values.push_back(metrics::dice(metrics::consensus_mask(stack), it->second, stack.organ_label()));
    }
    return summarize_dice(std::move(values));
}

// ---- cohort assembly ----

VolumeSource parse_volume_source(std::string_view text)
{
    if (text == "consensus")
        return VolumeSource::Consensus;
    if (text == "mean")
        return VolumeSource::Mean;
    throw Error(Errc::InvalidValue, "unknown volume source '" + std::string(text) + "'");
}

std::string_view to_string(VolumeSource source) noexcept
{
    return source == VolumeSource::Consensus ? "consensus" : "mean";
}

SubjectRecord with_confidence(SubjectRecord record, const metrics::ConfidenceReport& report, VolumeSource source)
{
    record.iou = report.iou;
    record.cv = report.cv;
    record.inv_cv = report.inv_cv_infinite ? std::numeric_limits<double>::infinity() : report.inv_cv;
    record.mean_volume_mm3 = report.mean_volume_mm3;
    record.volume_mm3 = source == VolumeSource::Consensus ? report.consensus_volume_mm3 : report.mean_volume_mm3;
    record.confidence = report.iou;
    record.confidence_kind = ConfidenceKind::IoU;
    return record;
}

std::string cell_label(stats::GroupVariant variant, ConfidenceKind kind)
{
    if (variant == stats::GroupVariant::Base)
        return "Base";
    return std::string(variant == stats::GroupVariant::Variable ? "Variable " : "Instance ")
        + std::string(kind_suffix(kind));
}

std::string cell_label(stats::ClfVariant variant, ConfidenceKind kind)
{
    switch (variant) {
    case stats::ClfVariant::Base: return "Base";
    case stats::ClfVariant::Variable: return "Variable " + std::string(kind_suffix(kind));
    case stats::ClfVariant::Interaction: return "Interaction " + std::string(kind_suffix(kind));
    case stats::ClfVariant::Instance: return "Instance " + std::string(kind_suffix(kind));
    }
    return {};
}

// ---- group analysis ----

std::optional<double> GroupStudyResult::reference() const
{
    if (planted_beta4)
        return planted_beta4;
    if (manual && manual->beta4)
        return manual->beta4;
    return std::nullopt;
}

std::vector<std::size_t> GroupStudyResult::ranking() const
{
    std::vector<std::size_t> order;
    const auto ref = reference();
    if (!ref)
        return order;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].beta4)
            order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(*cells[a].beta4 - *ref) < std::abs(*cells[b].beta4 - *ref);
    });
    return order;
}

GroupStudyResult group_study(const Cohort& cohort, const GroupStudyOptions& options,
                             std::optional<double> planted_beta4)
{
    if (options.variants.empty())
        throw Error(Errc::InvalidConfig, "no group variants requested");
    if (options.kinds.empty())
        throw Error(Errc::InvalidConfig, "no confidence kinds requested");
    GroupStudyResult result;
    result.planted_beta4 = planted_beta4;

    const bool any_conf = std::any_of(options.variants.begin(), options.variants.end(),
                                      [](auto v) { return v != stats::GroupVariant::Base; });
    Cohort work = cohort;
    if (uses_inv_cv(any_conf, options.kinds)) {
        result.inv_cv_cap = options.inv_cv_cap.value_or(stats::default_inv_cv_cap(cohort));
        work = stats::clip_inv_cv(cohort, result.inv_cv_cap);
    }
    if (options.standardize)
        work = standardize(work, kGroupZColumns);

    for (auto variant : options.variants) {
        if (variant == stats::GroupVariant::Base) {
            result.cells.push_back(fit_group_cell(work, cell_label(variant, ConfidenceKind::IoU),
                                                  {variant, ConfidenceKind::IoU}, options.fit));
            continue;
        }
        for (auto kind : options.kinds)
            result.cells.push_back(fit_group_cell(work, cell_label(variant, kind), {variant, kind}, options.fit));
    }

    if (options.include_manual) {
        if (auto truth = truth_cohort(cohort)) {
            try {
                if (options.standardize)
                    *truth = standardize(*truth, kGroupZColumns);
                result.manual = fit_group_cell(*truth, "Manual", {stats::GroupVariant::Base, ConfidenceKind::IoU},
                                               options.fit);
            } catch (const std::exception& e) {
                GroupCell failed;
                failed.label = "Manual";
                failed.failure = e.what();
                result.manual = std::move(failed);
            }
        }
    }
    return result;
}

// ---- classification ----

namespace {

struct PreparedSplit {
    Cohort train;
    Cohort test;
};

PreparedSplit prepare(const Cohort& source, const Split& split, const ClfStudyOptions& options)
{
    PreparedSplit p{source.subset(split.train), source.subset(split.test)};
    if (options.standardize) {
        std::vector<std::string> cols{"volume_mm3"};
        if (options.with_covariates) {
            cols.push_back("age");
            cols.push_back("bmi");
        }
        p.train = standardize(p.train, cols);
        p.test = apply_standardization(p.test, p.train.standardization());
    }
    return p;
}

} // namespace

ClfStudyResult classification_study(const Cohort& cohort, const ClfStudyOptions& options)
{
    options.split.validate();
    if (options.variants.empty())
        throw Error(Errc::InvalidConfig, "no classification variants requested");
    if (options.kinds.empty())
        throw Error(Errc::InvalidConfig, "no confidence kinds requested");
    ClfStudyResult result;

    const bool any_conf = std::any_of(options.variants.begin(), options.variants.end(),
                                      [](auto v) { return v != stats::ClfVariant::Base; });
    Cohort work = cohort;
    if (uses_inv_cv(any_conf, options.kinds)) {
        result.inv_cv_cap = options.inv_cv_cap.value_or(stats::default_inv_cv_cap(cohort));
        work = stats::clip_inv_cv(cohort, result.inv_cv_cap);
    }

    std::vector<ClfCell> cells;
    for (auto variant : options.variants) {
        const std::vector<ConfidenceKind> kinds
            = variant == stats::ClfVariant::Base ? std::vector<ConfidenceKind>{ConfidenceKind::IoU} : options.kinds;
        for (auto kind : kinds) {
            ClfCell c;
            c.label = cell_label(variant, kind);
            c.spec = {variant, kind, options.with_covariates};
            cells.push_back(std::move(c));
        }
    }
    std::optional<Cohort> truth;
    if (options.include_manual)
        truth = truth_cohort(cohort);
    const std::size_t n_model_cells = cells.size();
    if (truth) {
        ClfCell c;
        c.label = "Manual";
        c.spec = {stats::ClfVariant::Base, ConfidenceKind::IoU, options.with_covariates};
        cells.push_back(std::move(c));
    }

    std::vector<int> labels;
    labels.reserve(cohort.size());
    for (const auto& r : cohort.records())
        labels.push_back(r.diabetes);

    const auto repeats = static_cast<std::size_t>(options.split.n_repeats);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> acc(repeats, std::vector<double>(cells.size(), nan));
    std::vector<std::vector<std::string>> failures(repeats, std::vector<std::string>(cells.size()));
    std::vector<std::vector<char>> unconverged(repeats, std::vector<char>(cells.size(), 0));
    std::vector<int> resamples(repeats, 0);

    parallel_for(repeats, options.jobs, [&](std::size_t r) {
        Split split;
        try {
            split = draw_split(labels, options.split, static_cast<int>(r));
        } catch (const std::exception& e) {
            for (auto& f : failures[r])
                f = e.what();
            return;
        }
        resamples[r] = split.resamples;

        auto run_cells = [&](const Cohort& source, std::size_t first, std::size_t last) {
            std::optional<PreparedSplit> prepared;
            try {
                prepared = prepare(source, split, options);
            } catch (const std::exception& e) {
                for (std::size_t c = first; c < last; ++c)
                    failures[r][c] = e.what();
                return;
            }
            for (std::size_t c = first; c < last; ++c) {
                try {
                    const auto train = stats::build_design(prepared->train, cells[c].spec);
                    const auto fit = stats::fit_logistic(train, options.fit);
                    const auto test = stats::build_design(prepared->test, cells[c].spec);
                    acc[r][c] = stats::accuracy(stats::predict_proba(fit, test), test.y);
                    unconverged[r][c] = fit.converged ? 0 : 1;
                } catch (const std::exception& e) {
                    failures[r][c] = e.what();
                }
            }
        };
        run_cells(work, 0, n_model_cells);
        if (truth)
            run_cells(*truth, n_model_cells, cells.size());
    });

    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto& cell = cells[c];
        cell.accuracies.reserve(repeats);
        for (std::size_t r = 0; r < repeats; ++r) {
            if (!failures[r][c].empty() && cell.failure.empty())
                cell.failure = "repeat " + std::to_string(r) + ": " + failures[r][c];
            cell.accuracies.push_back(acc[r][c]);
            cell.unconverged_fits += unconverged[r][c];
        }
        if (cell.failure.empty()) {
            cell.mean_accuracy
                = std::accumulate(cell.accuracies.begin(), cell.accuracies.end(), 0.0) / static_cast<double>(repeats);
        }
    }
    result.resampled_splits = std::accumulate(resamples.begin(), resamples.end(), 0);
    if (truth) {
        result.manual = std::move(cells.back());
        cells.pop_back();
    }
    result.cells = std::move(cells);
    return result;
}

// ---- report tables ----

namespace {

std::size_t ensure_column(ReportTable& t, const std::string& name, bool reference)
{
    if (auto j = t.column_index(name))
        return *j;
    t.columns.push_back({name, reference});
    for (auto& row : t.rows)
        row.cells.resize(t.columns.size());
    return t.columns.size() - 1;
}

ReportCell to_cell(const std::optional<double>& value, const std::string& failure)
{
    ReportCell c;
    if (!failure.empty())
        c.failure = failure;
    else
        c.value = value;
    return c;
}

void set_cell(ReportTable& t, ReportRow& row, const std::string& column, bool reference, ReportCell cell)
{
    const auto j = ensure_column(t, column, reference);
    row.cells.resize(t.columns.size());
    row.cells[j] = std::move(cell);
}

// Reference columns go last, in insertion order.
void move_references_last(ReportTable& t)
{
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < t.columns.size(); ++j)
        if (!t.columns[j].reference)
            order.push_back(j);
    for (std::size_t j = 0; j < t.columns.size(); ++j)
        if (t.columns[j].reference)
            order.push_back(j);
    std::vector<ReportColumn> cols;
    for (auto j : order)
        cols.push_back(t.columns[j]);
    for (auto& row : t.rows) {
        row.cells.resize(t.columns.size());
        std::vector<ReportCell> cells;
        for (auto j : order)
            cells.push_back(row.cells[j]);
        row.cells = std::move(cells);
    }
    t.columns = std::move(cols);
}

} // namespace

ReportTable group_table(const std::vector<std::pair<std::string, GroupStudyResult>>& rows)
{
    ReportTable t;
    t.title = "Diabetes coefficient";
    t.metric = "beta_4";
    t.best = BestRule::ClosestToReference;
    bool all_planted = !rows.empty();
    for (const auto& [label, res] : rows) {
        ReportRow row;
        row.label = label;
        t.rows.push_back(row);
        auto& r = t.rows.back();
        for (const auto& c : res.cells)
            set_cell(t, r, c.label, false, to_cell(c.beta4, c.failure));
        if (res.manual)
            set_cell(t, r, "Manual", true, to_cell(res.manual->beta4, res.manual->failure));
        if (res.planted_beta4)
            set_cell(t, r, "Planted", true, to_cell(res.planted_beta4, {}));
        else
            all_planted = false;
    }
    for (auto& row : t.rows)
        row.cells.resize(t.columns.size());
    move_references_last(t);
    t.target = all_planted ? "Planted" : (t.column_index("Manual") ? "Manual" : "");
    return t;
}

ReportTable classification_table(const std::vector<std::pair<std::string, ClfStudyResult>>& rows)
{
    ReportTable t;
    t.title = "Diabetes classification accuracy";
    t.metric = "mean accuracy";
    t.best = BestRule::Maximum;
    for (const auto& [label, res] : rows) {
        ReportRow row;
        row.label = label;
        t.rows.push_back(row);
        auto& r = t.rows.back();
        for (const auto& c : res.cells)
            set_cell(t, r, c.label, false, to_cell(c.mean_accuracy, c.failure));
        if (res.manual)
            set_cell(t, r, "Manual", true, to_cell(res.manual->mean_accuracy, res.manual->failure));
    }
    for (auto& row : t.rows)
        row.cells.resize(t.columns.size());
    move_references_last(t);
    return t;
}

ReportTable dice_table(const std::vector<std::pair<std::string, DiceSummary>>& rows)
{
    ReportTable t;
    t.title = "Consensus Dice";
    t.metric = "dice";
    t.best = BestRule::None;
    t.columns = {{"Mean", false}, {"Std", false}};
    for (const auto& [label, s] : rows) {
        ReportRow row;
        row.label = label;
        row.cells = {to_cell(s.mean, {}), to_cell(s.std, {})};
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---- end to end ----

Dims evaluate_default_dims() noexcept
{
    return {27, 128, 72};
}

Spacing evaluate_default_spacing() noexcept
{
    return {6.0, 4.0, 4.0};
}

Cohort simulate_confidence_cohort(const phantom::CohortSimConfig& config, VolumeSource source,
                                  std::vector<double>* dice_out)
{
    const auto plans = phantom::plan_cohort(config);
    std::vector<std::optional<SubjectRecord>> records(plans.size());
    std::vector<double> dice(plans.size(), 0.0);
    parallel_for(plans.size(), config.jobs, [&](std::size_t i) {
        const auto subject = phantom::realize_subject(plans[i], config);
        const auto report = metrics::confidence_report(subject.stack);
        auto record = with_confidence(phantom::skeleton_record(plans[i], subject.true_volume_mm3), report, source);
        dice[i] = metrics::dice(metrics::consensus_mask(subject.stack), subject.phantom.truth, config.organ_label);
        record.dice = dice[i];
        records[i] = std::move(record);
    });
    std::vector<SubjectRecord> out;
    out.reserve(records.size());
    for (auto& r : records)
        out.push_back(std::move(*r));
    if (dice_out)
        *dice_out = std::move(dice);
    return Cohort(std::move(out));
}

EvaluateResult evaluate(const EvaluateConfig& config)
{
    config.cohort.validate();
    if (config.samplers.empty())
        throw Error(Errc::InvalidConfig, "no samplers requested");

    EvaluateResult result;
    std::vector<std::pair<std::string, DiceSummary>> dice_rows;
    std::vector<std::pair<std::string, GroupStudyResult>> group_rows;
    std::vector<std::pair<std::string, ClfStudyResult>> clf_rows;
    for (auto kind : config.samplers) {
        auto cfg = config.cohort;
        cfg.sampler.kind = kind;
        std::vector<double> dice;
        auto cohort = simulate_confidence_cohort(cfg, config.volume_source, &dice);
        const std::string name(phantom::display_name(kind));

        double planted = cfg.effect.beta_diabetes;
        if (config.group.standardize) {
            const double sd = population_sd(cohort.column("true_volume_mm3"));
            planted = sd > 0.0 ? planted / sd : 0.0;
        }
        dice_rows.emplace_back(name, summarize_dice(std::move(dice)));
        group_rows.emplace_back(name, group_study(cohort, config.group, planted));
        auto clf = config.classification;
        clf.jobs = cfg.jobs;
        clf_rows.emplace_back(name, classification_study(cohort, clf));
        result.cohorts.emplace_back(name, std::move(cohort));
    }
    result.report.tables.push_back(dice_table(dice_rows));
    result.report.tables.push_back(group_table(group_rows));
    result.report.tables.push_back(classification_table(clf_rows));
    return result;
}

} // namespace biouncert::eval
