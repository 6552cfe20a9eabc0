#include "biouncert/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "biouncert/cohort.hpp"
#include "biouncert/cohort_sim.hpp"
#include "biouncert/confidence.hpp"
#include "biouncert/error.hpp"
#include "biouncert/parallel.hpp"
#include "biouncert/random.hpp"
#include "biouncert/report.hpp"
#include "biouncert/studies.hpp"
#include "biouncert/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace biouncert::cli {

namespace {

// Argument problems found after CLI11 parsing; mapped to exit 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& text, Parse parse, const char* what)
{
    std::vector<T> out;
    for (const auto& item : split_list(text)) {
        try {
            const T v = parse(item);
            if (std::find(out.begin(), out.end(), v) == out.end())
                out.push_back(v);
        } catch (const Error& e) {
            throw UsageError(std::string(what) + ": " + e.what());
        }
    }
    if (out.empty())
        throw UsageError(std::string(what) + " list is empty");
    return out;
}

template <class T>
std::array<T, 3> parse_triple(const std::string& text, const char* what)
{
    const auto items = split_list(text);
    if (items.size() != 3)
        throw UsageError(std::string(what) + " needs three comma-separated values, got '" + text + "'");
    std::array<T, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        const char* b = items[i].data();
        const char* e = b + items[i].size();
        auto [ptr, ec] = std::from_chars(b, e, out[i]);
        if (ec != std::errc() || ptr != e)
            throw UsageError(std::string(what) + ": '" + items[i] + "' is not a number");
    }
    return out;
}

Dims parse_dims(const std::string& text)
{
    const auto v = parse_triple<std::int64_t>(text, "--dims");
    for (auto d : v)
        if (d < 1 || d > 4096)
            throw UsageError("--dims entries must lie in [1, 4096]");
    return {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
}

Spacing parse_spacing(const std::string& text)
{
    const auto v = parse_triple<double>(text, "--spacing");
    return {v[0], v[1], v[2]};
}

std::string join_dims(const Dims& d)
{
    return std::to_string(d.nz) + "," + std::to_string(d.ny) + "," + std::to_string(d.nx);
}

std::string join_spacing(const Spacing& s)
{
    return format_exact(s.sz) + "," + format_exact(s.sy) + "," + format_exact(s.sx);
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error(Errc::Io, "cannot write '" + path.string() + "'");
    f << text;
    if (!f)
        throw Error(Errc::Io, "write failed for '" + path.string() + "'");
}

ordered_json read_json(const fs::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(Errc::Io, "cannot read '" + path.string() + "'");
    try {
        return ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidValue, "'" + path.string() + "': " + e.what());
    }
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw Error(Errc::Io, "cannot create directory '" + dir.string() + "'");
}

// ---- shared option groups ----

struct ReportOptions {
    std::string format = "md";
    std::string out;

    void add(CLI::App* app)
    {
        app->add_option("--format", format, "Report format: md, csv or json")
            ->check(CLI::IsMember({"md", "markdown", "csv", "json"}));
        app->add_option("--out", out, "Report file (default: standard output)");
    }

    int emit(const eval::StudyReport& report, std::ostream& stdout_stream) const
    {
        const auto text = eval::render_report(report, eval::parse_report_format(format));
        if (out.empty() || out == "-") {
            stdout_stream << text;
        } else {
            const fs::path p(out);
            if (p.has_parent_path())
                ensure_dir(p.parent_path());
            write_text(p, text);
        }
        return report.any_failed() ? kCellFailed : kOk;
    }
};

struct SamplerOptions {
    std::string kind = "mc-dropout";
    phantom::SamplerConfig cfg;

    void add(CLI::App* app, bool single_kind)
    {
        if (single_kind)
            app->add_option("--sampler", kind, "mc-dropout, fully-bayesian, probabilistic or hierarchical");
        app->add_option("--samples", cfg.n_samples, "Segmentation samples per subject");
        app->add_option("--dropout-rate", cfg.dropout_rate, "MC dropout flip probability in the boundary band");
        app->add_option("--band", cfg.boundary_band_vox, "Boundary band half-width in voxels");
        app->add_option("--noise-std", cfg.noise_std, "Std of the reparameterization noise");
        app->add_option("--sharpness", cfg.logit_sharpness, "Logit mean per voxel of signed distance");
        app->add_option("--latent-dim", cfg.latent_dim, "Latent dimension of the probabilistic samplers");
        app->add_option("--latent-std", cfg.latent_std, "Std of each latent coordinate");
        app->add_option("--scales", cfg.n_scales, "Number of scales of the hierarchical sampler");
    }
};

struct CohortOptions {
    int subjects = 308;
    std::string dims;
    std::string spacing;
    double diabetic_fraction = 109.0 / 308.0;
    double difficulty_log_sd = 0.0;
    double diabetic_difficulty = 1.0;

    void add(CLI::App* app, const char* dims_default, const char* spacing_default)
    {
        dims = dims_default;
        spacing = spacing_default;
        app->add_option("--subjects", subjects, "Number of subjects");
        app->add_option("--dims", dims, "Grid size nz,ny,nx");
        app->add_option("--spacing", spacing, "Voxel spacing in mm: sz,sy,sx");
        app->add_option("--diabetic-fraction", diabetic_fraction, "Fraction of diabetic subjects");
        app->add_option("--difficulty-log-sd", difficulty_log_sd,
                        "Log-sd of the per-subject segmentation difficulty");
        app->add_option("--diabetic-difficulty", diabetic_difficulty,
                        "Extra difficulty multiplier for diabetic subjects");
    }

    phantom::CohortSimConfig build(const SamplerOptions& sampler, std::uint64_t seed, unsigned jobs) const
    {
        const Dims d = parse_dims(dims);
        const Spacing s = parse_spacing(spacing);
        auto cfg = phantom::default_cohort_config(d, s);
        cfg.n_subjects = subjects;
        cfg.diabetic_fraction = diabetic_fraction;
        cfg.effect = phantom::default_effect_spec(phantom::default_mean_volume(d, s), cfg.covariates,
                                                  diabetic_fraction);
        cfg.difficulty_log_sd = difficulty_log_sd;
        cfg.diabetic_difficulty = diabetic_difficulty;
        cfg.sampler = sampler.cfg;
        try {
            cfg.sampler.kind = phantom::parse_sampler_kind(sampler.kind);
        } catch (const Error& e) {
            throw UsageError(std::string("--sampler: ") + e.what());
        }
        cfg.seed = seed;
        cfg.jobs = jobs;
        return cfg;
    }
};

// ---- simulate ----

struct SimulateCmd {
    CLI::App* app = nullptr;
    std::string out;
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    SamplerOptions sampler;
    CohortOptions cohort;

    void add(CLI::App& root)
    {
        app = root.add_subcommand("simulate", "Simulate phantom cohorts and their segmentation sample stacks");
        app->add_option("--out", out, "Output directory")->required();
        app->add_option("--seed", seed, "Root seed (default: BIOUNCERT_SEED or 0)");
        app->add_option("--jobs", jobs, "Worker threads (0: all)");
        sampler.add(app, true);
        cohort.add(app, "53,256,144", "3,2,2");
    }

    int run(std::ostream& out_stream) const
    {
        phantom::CohortSimConfig cfg;
        std::vector<phantom::SubjectPlan> plans;
        try {
            cfg = cohort.build(sampler, seed, jobs);
            cfg.validate();
            plans = phantom::plan_cohort(cfg);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }

        const fs::path root(out);
        ensure_dir(root);
        ensure_dir(root / "subjects");
        for (const auto& p : plans)
            ensure_dir(root / "subjects" / p.subject_id);

        std::vector<SubjectRecord> records(plans.size());
        std::vector<double> true_volumes(plans.size());
        parallel_for(plans.size(), cfg.jobs, [&](std::size_t i) {
            const auto& plan = plans[i];
            const auto subject = phantom::realize_subject(plan, cfg);
            const fs::path dir = root / "subjects" / plan.subject_id;
            ordered_json stack;
            stack["subject_id"] = plan.subject_id;
            stack["organ_label"] = cfg.organ_label;
            stack["samples"] = ordered_json::array();
            for (std::size_t k = 0; k < subject.stack.size(); ++k) {
                char name[32];
                std::snprintf(name, sizeof(name), "sample_%02zu.blv1", k);
                write_label_volume(subject.stack.samples()[k], dir / name);
                stack["samples"].push_back(name);
            }
            write_label_volume(subject.phantom.truth, dir / "truth.blv1");
            stack["truth"] = "truth.blv1";
            write_text(dir / "stack.json", stack.dump(2) + "\n");
            true_volumes[i] = subject.true_volume_mm3;
            records[i] = phantom::skeleton_record(plan, subject.true_volume_mm3);
        });

        ordered_json truth;
        truth["effect"] = {{"beta0", cfg.effect.beta0},
                           {"beta_age", cfg.effect.beta_age},
                           {"beta_sex", cfg.effect.beta_sex},
                           {"beta_bmi", cfg.effect.beta_bmi},
                           {"beta_diabetes", cfg.effect.beta_diabetes},
                           {"noise_sd", cfg.effect.noise_sd}};
        truth["subjects"] = ordered_json::array();
        for (std::size_t i = 0; i < plans.size(); ++i) {
            const auto& p = plans[i];
            truth["subjects"].push_back({{"subject_id", p.subject_id},
                                         {"diabetes", p.diabetes},
                                         {"planted_volume_mm3", p.planted_volume_mm3},
                                         {"true_volume_mm3", true_volumes[i]},
                                         {"center_vox", p.center_vox},
                                         {"radii_vox", p.radii_vox},
                                         {"difficulty", p.difficulty}});
        }
        write_text(root / "truth.json", truth.dump(2) + "\n");
        write_cohort_csv(Cohort(std::move(records)), root / "cohort.csv");

        ordered_json manifest;
        manifest["format"] = "biouncert-simulation";
        manifest["version"] = 1;
        manifest["seed"] = cfg.seed;
        manifest["n_subjects"] = cfg.n_subjects;
        manifest["organ_label"] = cfg.organ_label;
        manifest["dims"] = {cfg.dims.nz, cfg.dims.ny, cfg.dims.nx};
        manifest["spacing_mm"] = {cfg.spacing.sz, cfg.spacing.sy, cfg.spacing.sx};
        manifest["sampler"] = {{"kind", std::string(phantom::to_string(cfg.sampler.kind))},
                               {"n_samples", cfg.sampler.n_samples},
                               {"dropout_rate", cfg.sampler.dropout_rate},
                               {"boundary_band_vox", cfg.sampler.boundary_band_vox},
                               {"noise_std", cfg.sampler.noise_std},
                               {"logit_sharpness", cfg.sampler.logit_sharpness},
                               {"latent_dim", cfg.sampler.latent_dim},
                               {"latent_std", cfg.sampler.latent_std},
                               {"n_scales", cfg.sampler.n_scales}};
        manifest["diabetic_fraction"] = cfg.diabetic_fraction;
        manifest["difficulty_log_sd"] = cfg.difficulty_log_sd;
        manifest["diabetic_difficulty"] = cfg.diabetic_difficulty;
        manifest["cohort"] = "cohort.csv";
        manifest["truth"] = "truth.json";
        manifest["subjects"] = ordered_json::array();
        for (const auto& p : plans)
            manifest["subjects"].push_back(
                {{"subject_id", p.subject_id}, {"stack", "subjects/" + p.subject_id + "/stack.json"}});
        write_text(root / "manifest.json", manifest.dump(2) + "\n");

        out_stream << "simulated " << plans.size() << " subjects into " << root.string() << "\n";
        return kOk;
    }
};

// ---- confidence ----

struct ConfidenceCmd {
    CLI::App* app = nullptr;
    std::string in;
    std::string out;
    std::string cohort_path;
    std::string volume = "consensus";
    bool emit_uncertainty = false;
    unsigned jobs = 0;

    void add(CLI::App& root)
    {
        app = root.add_subcommand("confidence", "Compute IoU, CV and CV^-1 of every sample stack");
        app->add_option("--in", in, "Simulation directory holding manifest.json")->required();
        app->add_option("--out", out, "Output directory for cohort.csv")->required();
        app->add_option("--cohort", cohort_path, "Cohort CSV to augment (default: the manifest's cohort)");
        app->add_option("--volume", volume, "Volume biomarker: consensus or mean")
            ->check(CLI::IsMember({"consensus", "mean"}));
        app->add_flag("--emit-uncertainty", emit_uncertainty, "Write one bfv1 uncertainty map per subject");
        app->add_option("--jobs", jobs, "Worker threads (0: all)");
    }

    int run(std::ostream& out_stream) const
    {
        const auto source = eval::parse_volume_source(volume);
        const fs::path root(in);
        const auto manifest = read_json(root / "manifest.json");
        const fs::path cohort_file
            = cohort_path.empty() ? root / manifest.value("cohort", std::string("cohort.csv")) : fs::path(cohort_path);
        const Cohort skeleton = read_cohort_csv(cohort_file);

        std::map<std::string, fs::path> stacks;
        for (const auto& s : manifest.at("subjects"))
            stacks.emplace(s.at("subject_id").get<std::string>(), root / s.at("stack").get<std::string>());
        for (const auto& r : skeleton.records()) {
            if (!stacks.count(r.subject_id))
                throw Error(Errc::IdMismatch, "no sample stack for subject '" + r.subject_id + "'");
        }

        const fs::path out_dir(out);
        ensure_dir(out_dir);
        if (emit_uncertainty)
            ensure_dir(out_dir / "uncertainty");

        std::vector<SubjectRecord> records(skeleton.size());
        parallel_for(skeleton.size(), jobs, [&](std::size_t i) {
            const auto& base = skeleton[i];
            const fs::path stack_file = stacks.at(base.subject_id);
            const auto desc = read_json(stack_file);
            const auto label = desc.at("organ_label").get<int>();
            if (label < 1 || label > 255)
                throw Error(Errc::InvalidStack, "organ label out of range in '" + stack_file.string() + "'");
            std::vector<LabelVolume> samples;
            for (const auto& name : desc.at("samples"))
                samples.push_back(read_label_volume(stack_file.parent_path() / name.get<std::string>()));
            if (samples.size() < 2)
                throw Error(Errc::InvalidStack, "subject '" + base.subject_id + "' has fewer than 2 samples");
            const SampleStack stack(base.subject_id, std::move(samples), static_cast<Label>(label));

            auto record = eval::with_confidence(base, metrics::confidence_report(stack), source);
            if (desc.contains("truth")) {
                const auto truth = read_label_volume(stack_file.parent_path() / desc["truth"].get<std::string>());
                record.dice = metrics::dice(metrics::consensus_mask(stack), truth, stack.organ_label());
            }
            if (emit_uncertainty)
                metrics::write_uncertainty_map(metrics::uncertainty_map(stack),
                                               out_dir / "uncertainty" / (base.subject_id + ".bfv1"));
            records[i] = std::move(record);
        });
        write_cohort_csv(Cohort(std::move(records)), out_dir / "cohort.csv");
        out_stream << "wrote " << (out_dir / "cohort.csv").string() << "\n";
        return kOk;
    }
};

// ---- group-analysis ----

struct GroupCmd {
    CLI::App* app = nullptr;
    std::string cohort_path;
    std::string label = "cohort";
    std::string variants = "base,variable,instance";
    std::string kinds = "iou,invcv";
    bool no_standardize = false;
    bool no_manual = false;
    double inv_cv_cap = 0.0;
    double planted_beta4 = 0.0;
    std::string fits_out;
    ReportOptions report;

    void add(CLI::App& root)
    {
        app = root.add_subcommand("group-analysis", "Estimate the diabetes coefficient with each volume model");
        app->add_option("--cohort", cohort_path, "Cohort CSV with confidence columns")->required();
        app->add_option("--label", label, "Row label in the report");
        app->add_option("--variants", variants, "Comma list of base, variable, instance");
        app->add_option("--kinds", kinds, "Comma list of iou, invcv");
        app->add_flag("--no-standardize", no_standardize, "Fit on raw age, BMI and volume");
        app->add_flag("--no-manual", no_manual, "Skip the fit on true volumes");
        app->add_option("--inv-cv-cap", inv_cv_cap, "Cap for CV^-1 (default: 99th percentile)")
            ->check(CLI::PositiveNumber);
        app->add_option("--planted-beta4", planted_beta4, "Known diabetes coefficient on the fitted scale");
        app->add_option("--fits-out", fits_out, "Write every fitted model as JSON to this file");
        report.add(app);
    }

    int run(std::ostream& out_stream) const
    {
        eval::GroupStudyOptions opts;
        opts.variants = parse_list<stats::GroupVariant>(variants, stats::parse_group_variant, "--variants");
        opts.kinds = parse_list<ConfidenceKind>(kinds, parse_confidence_kind, "--kinds");
        opts.standardize = !no_standardize;
        opts.include_manual = !no_manual;
        if (app->count("--inv-cv-cap"))
            opts.inv_cv_cap = inv_cv_cap;
        std::optional<double> planted;
        if (app->count("--planted-beta4"))
            planted = planted_beta4;

        const auto cohort = read_cohort_csv(fs::path(cohort_path));
        const auto result = eval::group_study(cohort, opts, planted);
        if (!fits_out.empty()) {
            ordered_json fits = ordered_json::array();
            for (const auto& c : result.cells) {
                if (c.fit)
                    fits.push_back({{"label", c.label}, {"fit", to_json(*c.fit)}});
            }
            if (result.manual && result.manual->fit)
                fits.push_back({{"label", "Manual"}, {"fit", to_json(*result.manual->fit)}});
            write_text(fits_out, fits.dump(2) + "\n");
        }
        eval::StudyReport rep;
        rep.tables.push_back(eval::group_table({{label, result}}));
        return report.emit(rep, out_stream);
    }
};

// ---- classify ----

struct SplitOptions {
    int repeats = 1000;
    double train_frac = 0.5;
    bool stratified = true;

    void add(CLI::App* app)
    {
        app->add_option("--repeats", repeats, "Random train/test splits");
        app->add_option("--train-frac", train_frac, "Training fraction of each split");
        app->add_flag("--stratified,!--no-stratified", stratified, "Keep the class ratio in every split");
    }
};

struct ClassifyCmd {
    CLI::App* app = nullptr;
    std::string cohort_path;
    std::string label = "cohort";
    std::string variants = "base,variable,interaction,instance";
    std::string kinds = "iou,invcv";
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    bool no_standardize = false;
    bool no_manual = false;
    bool with_covariates = false;
    double inv_cv_cap = 0.0;
    SplitOptions split;
    ReportOptions report;

    void add(CLI::App& root)
    {
        app = root.add_subcommand("classify", "Diabetes classification accuracy over repeated random splits");
        app->add_option("--cohort", cohort_path, "Cohort CSV with confidence columns")->required();
        app->add_option("--label", label, "Row label in the report");
        app->add_option("--variants", variants, "Comma list of base, variable, interaction, instance");
        app->add_option("--kinds", kinds, "Comma list of iou, invcv");
        app->add_option("--seed", seed, "Split seed (default: BIOUNCERT_SEED or 0)");
        app->add_option("--jobs", jobs, "Worker threads (0: all)");
        app->add_flag("--no-standardize", no_standardize, "Use raw volumes");
        app->add_flag("--no-manual", no_manual, "Skip the model on true volumes");
        app->add_flag("--with-covariates", with_covariates, "Add age, sex and BMI to every model");
        app->add_option("--inv-cv-cap", inv_cv_cap, "Cap for CV^-1 (default: 99th percentile)")
            ->check(CLI::PositiveNumber);
        split.add(app);
        report.add(app);
    }

    eval::ClfStudyOptions options() const
    {
        eval::ClfStudyOptions opts;
        opts.variants = parse_list<stats::ClfVariant>(variants, stats::parse_clf_variant, "--variants");
        opts.kinds = parse_list<ConfidenceKind>(kinds, parse_confidence_kind, "--kinds");
        opts.split.n_repeats = split.repeats;
        opts.split.train_fraction = split.train_frac;
        opts.split.stratified = split.stratified;
        opts.split.seed = seed;
        opts.standardize = !no_standardize;
        opts.include_manual = !no_manual;
        opts.with_covariates = with_covariates;
        opts.jobs = jobs;
        if (app->count("--inv-cv-cap"))
            opts.inv_cv_cap = inv_cv_cap;
        try {
            opts.split.validate();
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        return opts;
    }

    int run(std::ostream& out_stream) const
    {
        const auto opts = options();
        const auto cohort = read_cohort_csv(fs::path(cohort_path));
        const auto result = eval::classification_study(cohort, opts);
        eval::StudyReport rep;
        rep.tables.push_back(eval::classification_table({{label, result}}));
        return report.emit(rep, out_stream);
    }
};

// ---- evaluate ----

struct EvaluateCmd {
    CLI::App* app = nullptr;
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    std::string samplers = "mc-dropout,fully-bayesian,probabilistic,hierarchical";
    std::string volume = "consensus";
    std::string cohort_dir;
    std::string clf_variants = "base,variable,interaction,instance";
    bool with_covariates = false;
    SamplerOptions sampler;
    CohortOptions cohort;
    SplitOptions split;
    ReportOptions report;

    void add(CLI::App& root)
    {
        app = root.add_subcommand("evaluate", "Simulate, measure confidence and run every study for each sampler");
        app->add_option("--seed", seed, "Root seed (default: BIOUNCERT_SEED or 0)");
        app->add_option("--jobs", jobs, "Worker threads (0: all)");
        app->add_option("--samplers", samplers, "Comma list of samplers");
        app->add_option("--volume", volume, "Volume biomarker: consensus or mean")
            ->check(CLI::IsMember({"consensus", "mean"}));
        app->add_option("--cohort-dir", cohort_dir, "Also write each sampler's cohort CSV here");
        app->add_option("--clf-variants", clf_variants, "Classification variants");
        app->add_flag("--with-covariates", with_covariates, "Add age, sex and BMI to the classifiers");
        sampler.add(app, false);
        const auto dims = eval::evaluate_default_dims();
        const auto spacing = eval::evaluate_default_spacing();
        cohort.add(app, "", "");
        cohort.dims = join_dims(dims);
        cohort.spacing = join_spacing(spacing);
        split.add(app);
        report.add(app);
    }

    int run(std::ostream& out_stream) const
    {
        eval::EvaluateConfig cfg;
        try {
            cfg.cohort = cohort.build(sampler, seed, jobs);
            cfg.cohort.validate();
            cfg.samplers
                = parse_list<phantom::SamplerKind>(samplers, phantom::parse_sampler_kind, "--samplers");
            cfg.volume_source = eval::parse_volume_source(volume);
            cfg.classification.variants
                = parse_list<stats::ClfVariant>(clf_variants, stats::parse_clf_variant, "--clf-variants");
            cfg.classification.with_covariates = with_covariates;
            cfg.classification.split.n_repeats = split.repeats;
            cfg.classification.split.train_fraction = split.train_frac;
            cfg.classification.split.stratified = split.stratified;
            cfg.classification.split.seed = derive_seed(seed, {2});
            cfg.classification.split.validate();
            (void)phantom::plan_cohort(cfg.cohort);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        const auto result = eval::evaluate(cfg);
        if (!cohort_dir.empty()) {
            ensure_dir(cohort_dir);
            for (std::size_t i = 0; i < result.cohorts.size(); ++i) {
                write_cohort_csv(result.cohorts[i].second,
                                 fs::path(cohort_dir) / (std::string(phantom::to_string(cfg.samplers[i])) + ".csv"));
            }
        }
        return report.emit(result.report, out_stream);
    }
};

// Turns the --config JSON file into --key=value arguments placed right after
// the subcommand name, so flags given on the command line come later and win.
std::vector<std::string> expand_config(std::vector<std::string> args)
{
    std::optional<std::string> config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size())
                throw UsageError("--config needs a file");
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (!config_path)
        return args;
    if (args.size() < 2 || args[1].empty() || args[1][0] == '-')
        throw UsageError("--config must follow a subcommand");

    std::ifstream f(*config_path);
    if (!f)
        throw UsageError("cannot read config file '" + *config_path + "'");
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file '" + *config_path + "': " + e.what());
    }
    if (!cfg.is_object())
        throw UsageError("config file must hold a JSON object");

    std::vector<std::string> injected;
    for (const auto& [key, value] : cfg.items()) {
        if (key == "config" || key == "help")
            throw UsageError("config key '" + key + "' is not allowed");
        std::string text;
        if (value.is_string()) {
            text = value.get<std::string>();
        } else if (value.is_boolean()) {
            text = value.get<bool>() ? "true" : "false";
        } else if (value.is_number()) {
            text = value.dump();
        } else if (value.is_array()) {
            for (const auto& item : value) {
                if (!text.empty())
                    text += ",";
                text += item.is_string() ? item.get<std::string>() : item.dump();
            }
        } else {
            throw UsageError("config key '" + key + "' has an unsupported value");
        }
        injected.push_back("--" + key + "=" + text);
    }
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    return args;
}

void allow_config(CLI::App* app, std::string& sink)
{
    // Handled before parsing; registered so it shows up in --help.
    app->add_option("--config", sink, "JSON file of option values; command-line flags override it");
}

} // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Segmentation-uncertainty-aware imaging biomarker analysis", "biouncert"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.failure_message(CLI::FailureMessage::help);

    const std::uint64_t env_seed = seed_from_env(0);
    SimulateCmd simulate;
    ConfidenceCmd confidence;
    GroupCmd group;
    ClassifyCmd classify;
    EvaluateCmd evaluate;
    simulate.seed = classify.seed = evaluate.seed = env_seed;
    simulate.add(app);
    confidence.add(app);
    group.add(app);
    classify.add(app);
    evaluate.add(app);
    std::string config_sink;
    for (auto* sub : app.get_subcommands([](CLI::App*) { return true; }))
        allow_config(sub, config_sink);

    std::vector<std::string> args;
    try {
        args = expand_config(raw_args);
    } catch (const UsageError& e) {
        err << "biouncert: " << e.what() << "\n";
        return kUsageError;
    }
    try {
        std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
        std::reverse(reversed.begin(), reversed.end());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (simulate.app->parsed())
            return simulate.run(out);
        if (confidence.app->parsed())
            return confidence.run(out);
        if (group.app->parsed())
            return group.run(out);
        if (classify.app->parsed())
            return classify.run(out);
        if (evaluate.app->parsed())
            return evaluate.run(out);
    } catch (const UsageError& e) {
        err << "biouncert: " << e.what() << "\n";
        return kUsageError;
    } catch (const Error& e) {
        err << "biouncert: " << e.what() << "\n";
        return kRuntimeError;
    } catch (const std::exception& e) {
        err << "biouncert: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kUsageError;
}

} // namespace biouncert::cli
