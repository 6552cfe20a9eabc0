#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"

#include "biouncert/cohort_sim.hpp"
#include "biouncert/report.hpp"
#include "biouncert/scenarios.hpp"
#include "biouncert/splits.hpp"
#include "biouncert/studies.hpp"

using namespace biouncert;
using namespace biouncert::eval;
using testing::thrown_code;

namespace {

// Exact linear volume model with no residual, random covariates and confidences.
Cohort noise_free_cohort(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> age(60, 10), bmi(28, 4);
    std::uniform_real_distribution<double> conf(0.5, 0.99), icv(2.0, 40.0);
    std::vector<SubjectRecord> rs;
    for (int i = 0; i < n; ++i) {
        SubjectRecord r;
        r.subject_id = "s" + std::to_string(i);
        r.age_years = age(rng);
        r.sex = static_cast<int>(rng() % 2);
        r.bmi = bmi(rng);
        r.diabetes = i % 3 == 0;
        r.volume_mm3 = 1.5e6 - 3000 * r.age_years + 1.5e5 * r.sex + 2e4 * r.bmi + 1.5e5 * r.diabetes;
        r.true_volume_mm3 = r.volume_mm3;
        r.iou = conf(rng);
        r.confidence = *r.iou;
        r.inv_cv = icv(rng);
        rs.push_back(r);
    }
    return Cohort(std::move(rs));
}

std::vector<int> labels_of(const Cohort& c)
{
    std::vector<int> y;
    for (const auto& r : c.records())
        y.push_back(r.diabetes);
    return y;
}

LabelVolume strip(std::size_t on, std::size_t length = 10)
{
    std::vector<Label> v(length, 0);
    std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(on), Label{1});
    return {Dims{1, 1, static_cast<int>(length)}, Spacing{1, 1, 1}, std::move(v)};
}

} // namespace

TEST_CASE("train count rounds half up")
{
    CHECK(train_count(153, 0.5) == 77);
    CHECK(153 - train_count(153, 0.5) == 76);
    CHECK(train_count(154, 0.5) == 77);
    CHECK(train_count(10, 0.7) == 7);
    CHECK(train_count(5, 0.5) == 3);
}

TEST_CASE("splits are deterministic, disjoint and stratified")
{
    std::vector<int> y(308, 0);
    std::fill(y.begin(), y.begin() + 109, 1);
    SplitSpec spec;
    spec.seed = 77;
    for (int r = 0; r < 20; ++r) {
        const auto s = draw_split(y, spec, r);
        CHECK(s.train == draw_split(y, spec, r).train);
        CHECK(std::is_sorted(s.train.begin(), s.train.end()));
        CHECK(std::is_sorted(s.test.begin(), s.test.end()));
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        all.insert(s.test.begin(), s.test.end());
        CHECK(all.size() == 308);
        CHECK(s.train.size() + s.test.size() == 308);
        const auto pos = std::count_if(s.train.begin(), s.train.end(), [&](std::size_t i) { return y[i] == 1; });
        CHECK(pos == 55);
        CHECK(s.train.size() - static_cast<std::size_t>(pos) == 100);
    }
    CHECK(draw_split(y, spec, 0).train != draw_split(y, spec, 1).train);

    // the training share of each class is within one of the nominal fraction
    std::vector<int> odd(31, 0);
    for (std::size_t i = 0; i < odd.size(); i += 3)
        odd[i] = 1;
    spec.train_fraction = 0.6;
    const auto s = draw_split(odd, spec, 3);
    const auto pos = std::count_if(s.train.begin(), s.train.end(), [&](std::size_t i) { return odd[i] == 1; });
    CHECK(std::abs(static_cast<double>(pos) - 0.6 * 11) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.train.size() - static_cast<std::size_t>(pos)) - 0.6 * 20) <= 1.0);

    const std::vector<int> one_class(20, 1);
    CHECK(thrown_code([&] { draw_split(one_class, spec, 0); }) == Errc::DegenerateSplit);
    spec.train_fraction = 1.0;
    CHECK(thrown_code([&] { spec.validate(); }) == Errc::InvalidConfig);
}

TEST_CASE("unstratified splits redraw single-class training sets")
{
    std::vector<int> y(40, 0);
    y[0] = y[1] = 1;
    SplitSpec spec;
    spec.stratified = false;
    spec.train_fraction = 0.2;
    spec.seed = 2;
    for (int r = 0; r < 30; ++r) {
        try {
            const auto s = draw_split(y, spec, r);
            CHECK(s.train.size() == 8);
            const bool has_pos = std::any_of(s.train.begin(), s.train.end(), [&](std::size_t i) { return y[i]; });
            CHECK(has_pos);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::DegenerateSplit);
        }
    }
}

TEST_CASE("Dice summary and study")
{
    const auto s = summarize_dice({0.8, 1.0});
    CHECK(s.mean == doctest::Approx(0.9));
    CHECK(s.std == doctest::Approx(0.1));

    // consensus of {4,5,6} voxels is the first 5; truth has 5 and 4 voxels
    std::vector<SampleStack> stacks;
    stacks.emplace_back("a", std::vector<LabelVolume>{strip(4), strip(5), strip(6)}, 1);
    stacks.emplace_back("b", std::vector<LabelVolume>{strip(4), strip(5), strip(6)}, 1);
    std::map<std::string, LabelVolume> truth{{"a", strip(5)}, {"b", strip(4)}};
    const auto d = dice_study(stacks, truth);
    REQUIRE(d.per_subject.size() == 2);
    CHECK(d.per_subject[0] == doctest::Approx(1.0));
    CHECK(d.per_subject[1] == doctest::Approx(8.0 / 9.0));
    CHECK(d.mean == doctest::Approx((1.0 + 8.0 / 9.0) / 2));

    truth.erase("b");
    truth.emplace("c", strip(4));
    CHECK(thrown_code([&] { dice_study(stacks, truth); }) == Errc::IdMismatch);
}

TEST_CASE("noise-free cohort: every group model recovers the Manual coefficient")
{
    const auto c = noise_free_cohort(120, 4);
    const auto res = group_study(c, GroupStudyOptions{});
    REQUIRE(res.manual);
    REQUIRE(res.manual->beta4);
    REQUIRE(res.cells.size() == 5);
    for (const auto& cell : res.cells) {
        CAPTURE(cell.label);
        REQUIRE(cell.beta4);
        CHECK(*cell.beta4 == doctest::Approx(*res.manual->beta4).epsilon(1e-6).scale(1.0));
    }
    CHECK(res.reference() == res.manual->beta4);

    // on the z-scored scale the coefficient is the raw one over the volume sd
    double mean = 0, ss = 0;
    for (const auto& r : c.records())
        mean += r.volume_mm3;
    mean /= static_cast<double>(c.size());
    for (const auto& r : c.records())
        ss += (r.volume_mm3 - mean) * (r.volume_mm3 - mean);
    CHECK(*res.manual->beta4 == doctest::Approx(1.5e5 / std::sqrt(ss / static_cast<double>(c.size()))));

    GroupStudyOptions raw;
    raw.standardize = false;
    const auto unscaled = group_study(c, raw, 1.5e5);
    CHECK(*unscaled.cells[0].beta4 == doctest::Approx(1.5e5));
    CHECK(unscaled.reference() == 1.5e5);
}

TEST_CASE("group table structure")
{
    const auto c = noise_free_cohort(60, 5);
    auto with_planted = group_study(c, GroupStudyOptions{}, 0.5);
    const auto t = group_table({{"MC Dropout", with_planted}, {"Hierarchical", with_planted}});
    std::vector<std::string> names;
    for (const auto& col : t.columns)
        names.push_back(col.name);
    CHECK(names
          == std::vector<std::string>{"Base", "Variable IoU", "Variable CV^-1", "Instance IoU", "Instance CV^-1",
                                      "Manual", "Planted"});
    CHECK(t.columns[5].reference);
    CHECK(t.columns[6].reference);
    CHECK_FALSE(t.columns[0].reference);
    CHECK(t.target == "Planted");
    CHECK(t.best == BestRule::ClosestToReference);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1].label == "Hierarchical");

    const auto without = group_table({{"X", group_study(c, GroupStudyOptions{})}});
    CHECK(without.target == "Manual");
    CHECK_FALSE(without.column_index("Planted"));
}

TEST_CASE("classification accuracies are well formed")
{
    const auto sc = make_scenario_cohort(informative_confidence_scenario(3), 0);
    ClfStudyOptions opt;
    opt.split.n_repeats = 40;
    opt.split.seed = 9;
    opt.jobs = 1;
    const auto res = classification_study(sc.cohort, opt);
    REQUIRE(res.cells.size() == 7);
    REQUIRE(res.manual);
    const std::vector<std::string> expected{"Base",           "Variable IoU",      "Variable CV^-1",
                                            "Interaction IoU", "Interaction CV^-1", "Instance IoU",
                                            "Instance CV^-1"};
    for (std::size_t k = 0; k < res.cells.size(); ++k) {
        const auto& cell = res.cells[k];
        CAPTURE(cell.label);
        CHECK(cell.label == expected[k]);
        CHECK(cell.failure.empty());
        REQUIRE(cell.accuracies.size() == 40);
        for (double a : cell.accuracies) {
            CHECK(a >= 0.0);
            CHECK(a <= 1.0);
            // 54 + 99 test subjects
            CHECK(std::abs(a * 153 - std::round(a * 153)) < 1e-9);
        }
        const double m = std::accumulate(cell.accuracies.begin(), cell.accuracies.end(), 0.0) / 40.0;
        CHECK(*cell.mean_accuracy == doctest::Approx(m).epsilon(1e-12));
    }

    opt.jobs = 3;
    const auto threaded = classification_study(sc.cohort, opt);
    for (std::size_t k = 0; k < res.cells.size(); ++k)
        CHECK(threaded.cells[k].accuracies == res.cells[k].accuracies);

    const auto table = classification_table({{"Probabilistic", res}});
    std::vector<std::string> names;
    for (const auto& col : table.columns)
        names.push_back(col.name);
    auto with_manual = expected;
    with_manual.push_back("Manual");
    CHECK(names == with_manual);
    CHECK(table.best == BestRule::Maximum);
    const auto best = table.best_cell(table.rows[0]);
    REQUIRE(best);
    CHECK_FALSE(table.columns[*best].reference);
}

TEST_CASE("separable volumes classify perfectly")
{
    std::vector<SubjectRecord> rs;
    for (int i = 0; i < 40; ++i) {
        SubjectRecord r;
        r.subject_id = "s" + std::to_string(i);
        r.diabetes = i % 2;
        r.volume_mm3 = r.diabetes ? 2000.0 + i : 1000.0 + i;
        r.iou = 0.9;
        r.confidence = 0.9;
        r.inv_cv = 10.0;
        rs.push_back(r);
    }
    ClfStudyOptions opt;
    opt.variants = {stats::ClfVariant::Base};
    opt.split.n_repeats = 10;
    opt.include_manual = false;
    const auto res = classification_study(Cohort(rs), opt);
    REQUIRE(res.cells.size() == 1);
    CHECK(*res.cells[0].mean_accuracy == 1.0);
    CHECK(res.cells[0].unconverged_fits == 10);
}

TEST_CASE("a single-class cohort fails every cell without throwing")
{
    auto c = noise_free_cohort(30, 1).records();
    for (auto& r : c)
        r.diabetes = 0;
    ClfStudyOptions opt;
    opt.split.n_repeats = 3;
    const auto res = classification_study(Cohort(c), opt);
    for (const auto& cell : res.cells) {
        CHECK_FALSE(cell.mean_accuracy);
        CHECK(cell.failure.rfind("repeat 0: degenerate split", 0) == 0);
    }
    const auto table = classification_table({{"X", res}});
    CHECK(StudyReport{{table}}.any_failed());
}

TEST_CASE("report rendering")
{
    StudyReport empty;
    CHECK(render_report(empty, ReportFormat::Csv) == "table,row,column,value,status\n");
    CHECK(render_report(empty, ReportFormat::Markdown).empty());
    CHECK(parse_json_report(render_report(empty, ReportFormat::Json)).tables.empty());

    ReportTable t;
    t.title = "T";
    t.metric = "m";
    t.columns = {{"A", false}};
    t.rows = {{"r", {{0.123456789, ""}}}};
    StudyReport one{{t}};
    const auto csv = render_report(one, ReportFormat::Csv);
    CHECK(csv == "table,row,column,value,status\nT,r,A,0.123457,ok\n");
    const auto md = render_report(one, ReportFormat::Markdown);
    CHECK(std::count(md.begin(), md.end(), '\n') == 7);
    CHECK(md.find("| r | 0.123457 |") != std::string::npos);

    t.rows[0].cells[0] = {std::nullopt, "singular design, rank 2 < 3"};
    const auto failed = render_report(StudyReport{{t}}, ReportFormat::Csv);
    CHECK(failed.find("T,r,A,,failed: singular design; rank 2 < 3") != std::string::npos);
    CHECK(StudyReport{{t}}.any_failed());
    CHECK_FALSE(one.any_failed());

    CHECK(format_sig6(1234567.0) == "1.23457e+06");
    CHECK(parse_report_format("md") == ReportFormat::Markdown);
    CHECK(thrown_code([] { parse_report_format("xml"); }) == Errc::InvalidConfig);
}

TEST_CASE("best cell rules")
{
    ReportTable t;
    t.columns = {{"A", false}, {"B", false}, {"Ref", true}};
    t.rows = {{"r", {{1.0, ""}, {3.0, ""}, {2.9, ""}}}};
    t.best = BestRule::Maximum;
    CHECK(t.best_cell(t.rows[0]) == 1u);
    t.best = BestRule::ClosestToReference;
    CHECK(t.best_cell(t.rows[0]) == 1u);
    t.rows[0].cells[2].value = 1.2;
    CHECK(t.best_cell(t.rows[0]) == 0u);
    t.best = BestRule::None;
    CHECK_FALSE(t.best_cell(t.rows[0]));
    // failed cells are never highlighted
    t.best = BestRule::Maximum;
    t.rows[0].cells[1].failure = "x";
    CHECK(t.best_cell(t.rows[0]) == 0u);
}

TEST_CASE("JSON and Markdown reports round trip at six significant digits")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> v(-2.0, 2.0);
    StudyReport rep;
    for (int k = 0; k < 3; ++k) {
        ReportTable t;
        t.title = "Table " + std::to_string(k);
        t.metric = "metric";
        t.best = k == 0 ? BestRule::Maximum : (k == 1 ? BestRule::ClosestToReference : BestRule::None);
        t.columns = {{"Base", false}, {"Variable IoU", false}, {"Manual", true}};
        if (k == 1)
            t.target = "Manual";
        for (int r = 0; r < 4; ++r) {
            ReportRow row{"row " + std::to_string(r), {}};
            for (int c = 0; c < 3; ++c)
                row.cells.push_back({std::pow(10.0, r - 2) * v(rng), ""});
            t.rows.push_back(row);
        }
        t.rows[2].cells[1] = {std::nullopt, "fit failed"};
        rep.tables.push_back(t);
    }

    const auto json = parse_json_report(render_report(rep, ReportFormat::Json));
    const auto md = parse_markdown_report(render_report(rep, ReportFormat::Markdown));
    for (const auto* back : {&json, &md}) {
        REQUIRE(back->tables.size() == 3);
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& a = rep.tables[k];
            const auto& b = back->tables[k];
            CHECK(b.title == a.title);
            CHECK(b.metric == a.metric);
            CHECK(b.best == a.best);
            CHECK(b.target == a.target);
            REQUIRE(b.columns.size() == a.columns.size());
            CHECK(b.columns[2].reference);
            REQUIRE(b.rows.size() == a.rows.size());
            for (std::size_t r = 0; r < a.rows.size(); ++r) {
                CHECK(b.rows[r].label == a.rows[r].label);
                for (std::size_t c = 0; c < 3; ++c) {
                    const auto& x = a.rows[r].cells[c];
                    const auto& y = b.rows[r].cells[c];
                    CHECK(y.failed() == x.failed());
                    if (x.value) {
                        REQUIRE(y.value);
                        CHECK(format_sig6(*y.value) == format_sig6(*x.value));
                    }
                }
                CHECK(b.best_cell(b.rows[r]) == a.best_cell(a.rows[r]));
            }
        }
    }
    // JSON keeps full precision
    CHECK(*json.tables[0].rows[0].cells[0].value == *rep.tables[0].rows[0].cells[0].value);
}

TEST_CASE("scenario cohorts")
{
    const auto sc = group_corruption_scenario(5);
    const auto a = make_scenario_cohort(sc, 2);
    const auto b = make_scenario_cohort(sc, 2);
    CHECK(a.cohort.records() == b.cohort.records());
    CHECK(make_scenario_cohort(sc, 3).cohort.records() != a.cohort.records());
    REQUIRE(a.cohort.size() == 308);
    const auto y = labels_of(a.cohort);
    CHECK(std::count(y.begin(), y.end(), 1) == 109);
    CHECK(a.planted_beta4 == sc.effect.beta_diabetes);
    for (const auto& r : a.cohort.records()) {
        CHECK(*r.iou >= 1.0 - sc.uncertainty_floor - sc.uncertainty_range - 1e-12);
        CHECK(*r.iou <= 1.0 - sc.uncertainty_floor + 1e-12);
        CHECK(r.volume_mm3 > 0.0);
        REQUIRE(r.true_volume_mm3);
        CHECK(*r.inv_cv > 0.0);
    }

    auto bad = sc;
    bad.n_diabetic = 400;
    CHECK(thrown_code([&] { bad.validate(); }) == Errc::InvalidConfig);
}

TEST_CASE("more dropout lowers consensus Dice")
{
    auto cfg = phantom::default_cohort_config({20, 40, 28}, {6, 4, 4});
    cfg.n_subjects = 10;
    cfg.seed = 6;
    cfg.sampler.n_samples = 6;
    auto mean_dice = [&](double rate) {
        cfg.sampler.dropout_rate = rate;
        std::vector<double> d;
        simulate_confidence_cohort(cfg, VolumeSource::Consensus, &d);
        return summarize_dice(d).mean;
    };
    const double low = mean_dice(0.1);
    const double high = mean_dice(0.3);
    CHECK(high < low);
    CHECK(low > 0.9);
}
