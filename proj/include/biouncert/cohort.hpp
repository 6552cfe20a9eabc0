#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace biouncert {

enum class ConfidenceKind { IoU, InvCV };

std::string_view to_string(ConfidenceKind kind) noexcept;
/// Accepts "iou" and "invcv" (case-insensitive).
ConfidenceKind parse_confidence_kind(std::string_view text);

/// One subject: covariates, the volume biomarker and its segmentation confidence.
/// The optional fields carry the per-measure columns written by the confidence step.
struct SubjectRecord {
    std::string subject_id;
    double age_years = 0.0;
    int sex = 0;
    double bmi = 0.0;
    int diabetes = 0;
    double volume_mm3 = 0.0;
    double confidence = 0.0;
    ConfidenceKind confidence_kind = ConfidenceKind::IoU;

    std::optional<double> iou;
    std::optional<double> cv;
    std::optional<double> inv_cv; // +inf when all sample volumes agree
    std::optional<double> mean_volume_mm3;
    std::optional<double> true_volume_mm3;
    std::optional<double> dice;

    bool operator==(const SubjectRecord&) const = default;
};

/// The confidence of `kind` for a record: the dedicated column when present,
/// else the generic confidence column when its kind matches.
std::optional<double> confidence_of(const SubjectRecord& record, ConfidenceKind kind) noexcept;

struct ColumnStats {
    double mean = 0.0;
    double std = 1.0;
};

using Standardization = std::map<std::string, ColumnStats>;

/// Columns that may be z-scored.
std::span<const std::string_view> standardizable_columns() noexcept;

/// Reads a numeric column by CSV name; nullopt when the optional field is absent.
std::optional<double> column_value(const SubjectRecord& record, std::string_view column);
void set_column_value(SubjectRecord& record, std::string_view column, double value);

class Cohort {
public:
    Cohort() = default;
    explicit Cohort(std::vector<SubjectRecord> records);

    const std::vector<SubjectRecord>& records() const noexcept { return records_; }
    const SubjectRecord& operator[](std::size_t i) const noexcept { return records_[i]; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    /// Frozen z-scoring statistics, keyed by column name.
    const Standardization& standardization() const noexcept { return stats_; }

    /// Rows at `indices`, in that order; standardization stats carry over.
    Cohort subset(std::span<const std::size_t> indices) const;

    std::vector<double> column(std::string_view name) const;

private:
    friend Cohort standardize(const Cohort&, const std::vector<std::string>&);
    friend Cohort apply_standardization(const Cohort&, const Standardization&);

    std::vector<SubjectRecord> records_;
    Standardization stats_;
};

/// z-scores `columns` with population std and freezes the stats.
/// Throws ZeroVariance for constant columns, InvalidConfig for already-frozen ones.
Cohort standardize(const Cohort& cohort, const std::vector<std::string>& columns);

/// Applies previously frozen stats (e.g. from a training split) to another cohort.
Cohort apply_standardization(const Cohort& cohort, const Standardization& stats);

Cohort read_cohort_csv(std::istream& in);
Cohort read_cohort_csv(const std::filesystem::path& path);
void write_cohort_csv(const Cohort& cohort, std::ostream& out);
void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path);

/// Shortest representation that parses back to the same double; "inf" for +infinity.
std::string format_exact(double value);

} // namespace biouncert
