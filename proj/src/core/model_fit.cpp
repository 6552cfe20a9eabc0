#include "biouncert/model_fit.hpp"

#include <array>
#include <cmath>

#include "biouncert/error.hpp"

namespace biouncert {

namespace {

constexpr std::array<std::pair<ModelKind, std::string_view>, 7> kKindNames = {{
    {ModelKind::GroupBase, "GroupBase"},
    {ModelKind::GroupVariable, "GroupVariable"},
    {ModelKind::GroupInstance, "GroupInstance"},
    {ModelKind::ClfBase, "ClfBase"},
    {ModelKind::ClfVariable, "ClfVariable"},
    {ModelKind::ClfInteraction, "ClfInteraction"},
    {ModelKind::ClfInstance, "ClfInstance"},
}};

// JSON has no NaN; aliased coefficients travel as null.
nlohmann::ordered_json number_or_null(double v)
{
    if (std::isnan(v))
        return nullptr;
    return v;
}

double number_from(const nlohmann::json& j)
{
    return j.is_null() ? std::nan("") : j.get<double>();
}

} // namespace

std::string_view to_string(ModelKind kind) noexcept
{
    for (const auto& [k, name] : kKindNames) {
        if (k == kind)
            return name;
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view text)
{
    for (const auto& [k, name] : kKindNames) {
        if (name == text)
            return k;
    }
    throw Error(Errc::InvalidValue, "unknown model kind '" + std::string(text) + "'");
}

bool is_classification(ModelKind kind) noexcept
{
    return kind == ModelKind::ClfBase || kind == ModelKind::ClfVariable || kind == ModelKind::ClfInteraction
        || kind == ModelKind::ClfInstance;
}

std::optional<double> ModelFit::find(std::string_view name) const noexcept
{
    for (const auto& [n, v] : coefficients) {
        if (n == name)
            return v;
    }
    return std::nullopt;
}

double ModelFit::coefficient(std::string_view name) const
{
    if (auto v = find(name))
        return *v;
    throw Error(Errc::ColumnMismatch, "fit has no coefficient '" + std::string(name) + "'");
}

std::vector<std::string> ModelFit::names() const
{
    std::vector<std::string> out;
    out.reserve(coefficients.size());
    for (const auto& c : coefficients)
        out.push_back(c.first);
    return out;
}

nlohmann::ordered_json to_json(const ModelFit& fit)
{
    nlohmann::ordered_json j;
    j["model_kind"] = std::string(to_string(fit.model_kind));
    nlohmann::ordered_json coefs = nlohmann::ordered_json::object();
    for (const auto& [name, value] : fit.coefficients)
        coefs[name] = number_or_null(value);
    j["coefficients"] = coefs;
    nlohmann::ordered_json se = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < fit.coefficients.size() && i < fit.std_errors.size(); ++i)
        se[fit.coefficients[i].first] = number_or_null(fit.std_errors[i]);
    j["std_errors"] = se;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["log_likelihood_or_rss"] = number_or_null(fit.log_likelihood_or_rss);
    j["aliased"] = fit.aliased;
    j["warnings"] = fit.warnings;
    j["weights"] = fit.weights;
    return j;
}

ModelFit fit_from_json(const nlohmann::json& j)
{
    ModelFit fit;
    try {
        fit.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
        for (const auto& [name, value] : j.at("coefficients").items())
            fit.coefficients.emplace_back(name, number_from(value));
        if (j.contains("std_errors")) {
            const auto& se = j["std_errors"];
            for (const auto& c : fit.coefficients)
                fit.std_errors.push_back(se.contains(c.first) ? number_from(se[c.first]) : std::nan(""));
        }
        fit.converged = j.at("converged").get<bool>();
        fit.iterations = j.at("iterations").get<int>();
        if (j.contains("log_likelihood_or_rss"))
            fit.log_likelihood_or_rss = number_from(j["log_likelihood_or_rss"]);
        if (j.contains("aliased"))
            fit.aliased = j["aliased"].get<std::vector<std::string>>();
        if (j.contains("warnings"))
            fit.warnings = j["warnings"].get<std::vector<std::string>>();
        if (j.contains("weights"))
            fit.weights = j["weights"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidValue, std::string("model fit JSON: ") + e.what());
    }
    return fit;
}

} // namespace biouncert
