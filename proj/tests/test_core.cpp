#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

#include "biouncert/cohort.hpp"
#include "biouncert/model_fit.hpp"
#include "biouncert/parallel.hpp"
#include "biouncert/random.hpp"
#include "biouncert/volume_io.hpp"

using namespace biouncert;
using testing::thrown_code;

TEST_CASE("label volume geometry and payload checks")
{
    const Dims d{2, 3, 4};
    LabelVolume v(d, {3, 2, 2});
    CHECK(v.size() == 24);
    CHECK(v.count(0) == 24);
    CHECK(v.spacing().voxel_volume_mm3() == doctest::Approx(12.0));

    std::vector<Label> labels(24, 0);
    labels[v.index(1, 2, 3)] = 5;
    LabelVolume w(d, {3, 2, 2}, labels);
    CHECK(w.at(1, 2, 3) == 5);
    CHECK(w[23] == 5);
    CHECK(w.count(5) == 1);

    CHECK(thrown_code([&] { LabelVolume(d, {1, 1, 1}, std::vector<Label>(23)); }) == Errc::PayloadLength);
    CHECK(thrown_code([] { LabelVolume({0, 1, 1}, {1, 1, 1}); }) == Errc::InvalidVolume);
    CHECK(thrown_code([] { LabelVolume({1, 1, 1}, {1, -1, 1}); }) == Errc::InvalidVolume);
    CHECK(thrown_code([] { LabelVolume({1, 1, 1}, {1, std::nan(""), 1}); }) == Errc::InvalidVolume);
}

TEST_CASE("sample stack requirements")
{
    const LabelVolume a({2, 2, 2}, {1, 1, 1});
    const LabelVolume b({2, 2, 3}, {1, 1, 1});
    CHECK_NOTHROW(SampleStack("s", {a, a}, 1));
    CHECK(thrown_code([&] { SampleStack("s", {a}, 1); }) == Errc::InvalidStack);
    CHECK(thrown_code([&] { SampleStack("s", {a, a}, 0); }) == Errc::InvalidStack);
    CHECK(thrown_code([&] { SampleStack("s", {a, b}, 1); }) == Errc::InvalidStack);
}

TEST_CASE("blv1 round trip is exact")
{
    std::mt19937_64 rng(3);
    const auto v = testing::random_volume(rng, {3, 5, 7}, 0.4, 2);
    std::stringstream ss;
    write_label_volume(v, ss);
    const auto back = read_label_volume(ss);
    CHECK(back == v);

    std::stringstream again;
    write_label_volume(back, again);
    std::stringstream first;
    write_label_volume(v, first);
    CHECK(first.str() == again.str());
    CHECK(first.str().rfind("{\"magic\":\"blv1\"", 0) == 0);
}

TEST_CASE("blv1 rejects malformed input")
{
    const LabelVolume v({2, 2, 2}, {1, 1, 1});
    std::stringstream ok;
    write_label_volume(v, ok);
    const std::string good = ok.str();

    auto read = [](const std::string& text) {
        std::stringstream s(text);
        return read_label_volume(s);
    };
    CHECK(thrown_code([&] { read(good.substr(0, good.size() - 1)); }) == Errc::PayloadLength);
    CHECK(thrown_code([&] { read(good + "x"); }) == Errc::PayloadLength);
    CHECK(thrown_code([&] { read("not json\n"); }) == Errc::MalformedHeader);
    CHECK(thrown_code([&] { read("{\"magic\":\"blv1\"}"); }) == Errc::MalformedHeader);

    std::string v2 = good;
    v2.replace(v2.find("blv1"), 4, "blv2");
    CHECK(thrown_code([&] { read(v2); }) == Errc::UnsupportedVersion);

    std::string other = good;
    other.replace(other.find("blv1"), 4, "abcd");
    CHECK(thrown_code([&] { read(other); }) == Errc::MalformedHeader);

    CHECK(thrown_code([&] { read("{\"magic\":\"blv1\",\"dims\":[0,1,1],\"spacing_mm\":[1,1,1]}\n"); })
          == Errc::MalformedHeader);
    CHECK(thrown_code([&] { read(std::string(5000, ' ')); }) == Errc::MalformedHeader);
}

TEST_CASE("seed derivation is deterministic and path sensitive")
{
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 20; ++a)
        for (std::uint64_t b = 0; b < 20; ++b)
            seen.insert(derive_seed(42, {a, b}));
    CHECK(seen.size() == 400);
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}

TEST_CASE("parallel_for fills slots independently of the job count")
{
    auto run = [](unsigned jobs) {
        std::vector<std::uint64_t> out(257);
        parallel_for(out.size(), jobs, [&](std::size_t i) {
            auto rng = make_rng(9, {i});
            out[i] = rng();
        });
        return out;
    };
    const auto one = run(1);
    CHECK(run(4) == one);
    CHECK(run(0) == one);

    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 7)
                                         throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}

namespace {

SubjectRecord record(std::string id, double age, int sex, double bmi, int diabetes, double volume, double conf)
{
    SubjectRecord r;
    r.subject_id = std::move(id);
    r.age_years = age;
    r.sex = sex;
    r.bmi = bmi;
    r.diabetes = diabetes;
    r.volume_mm3 = volume;
    r.confidence = conf;
    return r;
}

} // namespace

TEST_CASE("cohort CSV round trip keeps every value exactly")
{
    auto a = record("a", 61.123456789012345, 1, 27.5, 0, 1.5e6 + 0.1, 0.875);
    a.iou = 0.875;
    a.cv = 0.0816496580927726;
    a.inv_cv = std::numeric_limits<double>::infinity();
    auto b = record("b", 45.0, 0, 31.25, 1, 1.2e6, 0.5);
    b.iou = 0.5;
    b.cv = 0.1;
    b.inv_cv = 10.0;
    b.true_volume_mm3 = 1.25e6;
    const Cohort c({a, b});

    std::stringstream ss;
    write_cohort_csv(c, ss);
    const auto back = read_cohort_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == c[0]);
    CHECK(back[1] == c[1]);
    CHECK(std::isinf(*back[0].inv_cv));
    CHECK(ss.str().rfind("subject_id,age,sex,bmi,diabetes,volume_mm3,confidence,confidence_kind,", 0) == 0);
}

TEST_CASE("cohort CSV validation")
{
    const std::string header = "subject_id,age,sex,bmi,diabetes,volume_mm3,confidence,confidence_kind\n";
    auto parse = [](const std::string& text) {
        std::stringstream s(text);
        return read_cohort_csv(s);
    };
    CHECK_NOTHROW(parse(header + "a,50,1,25,0,1000,0.9,iou\n"));
    CHECK(thrown_code([&] { parse(header + "a,50,2,25,0,1000,0.9,iou\n"); }) == Errc::InvalidValue);
    CHECK(thrown_code([&] { parse(header + "a,fifty,1,25,0,1000,0.9,iou\n"); }) == Errc::NonNumeric);
    CHECK(thrown_code([&] { parse(header + "a,50,1,25,0,1000,0.9,iou\na,51,1,25,0,1000,0.9,iou\n"); })
          == Errc::DuplicateId);
    CHECK(thrown_code([&] { parse("subject_id,age\na,1\n"); }) == Errc::MissingColumn);
    CHECK(thrown_code([&] { parse("subject_id,age,sex,bmi,diabetes,volume_mm3,confidence,confidence_kind,zzz\n"); })
          == Errc::UnknownColumn);
    CHECK(thrown_code([&] { parse(header + "a,50,1,25,0,1000,1.5,iou\n"); }) == Errc::InvalidValue);
    CHECK_NOTHROW(parse(header + "a,50,1,25,0,1000,inf,invcv\n"));
}

TEST_CASE("standardization uses population std and freezes")
{
    const Cohort c({record("a", 40, 0, 20, 0, 100, 1), record("b", 50, 1, 30, 1, 200, 1),
                    record("c", 60, 0, 40, 0, 300, 1)});
    const auto z = standardize(c, {"age", "volume_mm3"});
    const double sd = std::sqrt(200.0 / 3.0);
    CHECK(z[0].age_years == doctest::Approx(-10.0 / sd));
    CHECK(z[2].age_years == doctest::Approx(10.0 / sd));
    CHECK(z.standardization().at("volume_mm3").mean == doctest::Approx(200.0));
    CHECK(z[1].bmi == 30.0);

    CHECK(thrown_code([&] { standardize(z, {"age"}); }) == Errc::InvalidConfig);
    CHECK(thrown_code([&] { standardize(c, {"confidence"}); }) == Errc::ZeroVariance);
    CHECK(thrown_code([&] { standardize(c, {"sex"}); }) == Errc::InvalidConfig);

    const Cohort other({record("d", 70, 0, 20, 0, 400, 1)});
    const auto applied = apply_standardization(other, z.standardization());
    CHECK(applied[0].age_years == doctest::Approx(20.0 / sd));
    CHECK(applied[0].volume_mm3 == doctest::Approx(200.0 / std::sqrt(20000.0 / 3.0)));

    const std::vector<std::size_t> idx{2, 0};
    const auto sub = z.subset(idx);
    CHECK(sub[0].subject_id == "c");
    CHECK(sub.standardization().size() == 2);
}

TEST_CASE("confidence lookup prefers the dedicated column")
{
    auto r = record("a", 1, 0, 1, 0, 1, 0.7);
    CHECK(confidence_of(r, ConfidenceKind::IoU) == 0.7);
    CHECK_FALSE(confidence_of(r, ConfidenceKind::InvCV).has_value());
    r.iou = 0.6;
    r.inv_cv = 12.0;
    CHECK(confidence_of(r, ConfidenceKind::IoU) == 0.6);
    CHECK(confidence_of(r, ConfidenceKind::InvCV) == 12.0);
}

TEST_CASE("format_exact round trips")
{
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) {
        const auto s = format_exact(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_exact(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("model fit JSON round trip with aliased coefficient")
{
    ModelFit f;
    f.model_kind = ModelKind::ClfInteraction;
    f.coefficients = {{"intercept", 0.25}, {"volume", -1.5}, {"confidence", std::nan("")}};
    f.std_errors = {0.1, 0.2, std::nan("")};
    f.aliased = {"confidence"};
    f.converged = true;
    f.iterations = 6;
    const auto j = to_json(f);
    CHECK(j["coefficients"]["confidence"].is_null());
    const auto back = fit_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.model_kind == ModelKind::ClfInteraction);
    CHECK(back.coefficient("volume") == -1.5);
    CHECK(std::isnan(back.coefficient("confidence")));
    CHECK(back.converged);
    CHECK(back.iterations == 6);
    CHECK(thrown_code([&] { (void)back.coefficient("age"); }) == Errc::ColumnMismatch);
}
