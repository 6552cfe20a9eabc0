#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biouncert::eval {

/// Which cell of a row is highlighted as best.
enum class BestRule { None, Maximum, ClosestToReference };

struct ReportColumn {
    std::string name;
    bool reference = false; // e.g. "Manual"; never highlighted, used as the closeness target
};

struct ReportCell {
    std::optional<double> value;
    std::string failure; // non-empty marks a failed cell

    bool failed() const noexcept { return !failure.empty(); }
};

struct ReportRow {
    std::string label;
    std::vector<ReportCell> cells; // parallel to the table's columns
};

struct ReportTable {
    std::string title;
    std::string metric;
    BestRule best = BestRule::None;
    std::vector<ReportColumn> columns;
    std::vector<ReportRow> rows;
    std::string target; // reference column used for ClosestToReference; empty picks the first with a value

    /// Index of the highlighted cell of `row`, if any.
    std::optional<std::size_t> best_cell(const ReportRow& row) const;
    std::optional<std::size_t> column_index(std::string_view name) const;
};

struct StudyReport {
    std::vector<ReportTable> tables;

    bool any_failed() const noexcept;
};

enum class ReportFormat { Csv, Json, Markdown };

ReportFormat parse_report_format(std::string_view text);
std::string_view to_string(BestRule rule) noexcept;
BestRule parse_best_rule(std::string_view text);

/// Deterministic text. CSV and Markdown print 6 significant digits, JSON full precision.
std::string render_report(const StudyReport& report, ReportFormat format);

StudyReport parse_json_report(std::string_view text);
/// Reads back render_report(..., Markdown); values carry 6 significant digits.
StudyReport parse_markdown_report(std::string_view text);

/// printf "%.6g".
std::string format_sig6(double value);

} // namespace biouncert::eval
