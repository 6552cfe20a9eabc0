#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace biouncert {

enum class ModelKind {
    GroupBase,
    GroupVariable,
    GroupInstance,
    ClfBase,
    ClfVariable,
    ClfInteraction,
    ClfInstance,
};

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view text);
bool is_classification(ModelKind kind) noexcept;

/// Coefficients and bookkeeping of one fitted model. Coefficients are keyed by
/// design column name ("intercept", "age", ..., "confidence", "v_times_c").
struct ModelFit {
    ModelKind model_kind = ModelKind::GroupBase;
    std::vector<std::pair<std::string, double>> coefficients;
    std::vector<double> std_errors;        // parallel to coefficients; NaN when unavailable
    std::vector<double> weights;           // per-row weights actually used
    std::vector<std::string> aliased;      // columns dropped as linearly dependent
    bool converged = false;
    int iterations = 0;
    double log_likelihood_or_rss = 0.0;    // RSS (weighted) for linear fits, log-likelihood for logistic
    std::vector<std::string> warnings;

    std::optional<double> find(std::string_view name) const noexcept;
    /// Throws ColumnMismatch when absent.
    double coefficient(std::string_view name) const;
    std::vector<std::string> names() const;
};

/// {model_kind, coefficients:{name:value}, converged, iterations, ...} at full precision.
nlohmann::ordered_json to_json(const ModelFit& fit);
ModelFit fit_from_json(const nlohmann::json& j);

} // namespace biouncert
