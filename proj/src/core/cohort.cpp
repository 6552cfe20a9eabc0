#include "biouncert/cohort.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "biouncert/error.hpp"

namespace biouncert {

namespace {

constexpr std::array<std::string_view, 8> kRequiredColumns = {
    "subject_id", "age", "sex", "bmi", "diabetes", "volume_mm3", "confidence", "confidence_kind"};

constexpr std::array<std::string_view, 6> kOptionalColumns = {
    "iou", "cv", "inv_cv", "mean_volume_mm3", "true_volume_mm3", "dice"};

constexpr std::array<std::string_view, 7> kStandardizable = {
    "age", "bmi", "volume_mm3", "confidence", "mean_volume_mm3", "true_volume_mm3", "inv_cv"};

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

double parse_number(const std::string& cell, std::string_view column, std::size_t row, bool allow_inf)
{
    const std::string text = lower(cell);
    if (allow_inf && (text == "inf" || text == "+inf" || text == "infinity"))
        return std::numeric_limits<double>::infinity();
    double value = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value))
        throw Error(Errc::NonNumeric,
                    "row " + std::to_string(row) + ", column '" + std::string(column) + "': '" + cell + "'");
    return value;
}

int parse_binary(const std::string& cell, std::string_view column, std::size_t row)
{
    const double v = parse_number(cell, column, row, false);
    if (v != 0.0 && v != 1.0)
        throw Error(Errc::InvalidValue,
                    "row " + std::to_string(row) + ", column '" + std::string(column) + "' must be 0 or 1, got '"
                        + cell + "'");
    return static_cast<int>(v);
}

void validate_record(const SubjectRecord& r, std::size_t row)
{
    auto fail = [&](const std::string& what) {
        throw Error(Errc::InvalidValue, "row " + std::to_string(row) + " ('" + r.subject_id + "'): " + what);
    };
    if (r.subject_id.empty())
        fail("empty subject_id");
    if (r.volume_mm3 < 0.0)
        fail("volume_mm3 must be nonnegative");
    if (r.confidence_kind == ConfidenceKind::IoU && !(r.confidence >= 0.0 && r.confidence <= 1.0))
        fail("IoU confidence must lie in [0,1]");
    if (r.confidence_kind == ConfidenceKind::InvCV && !(r.confidence >= 0.0))
        fail("CV^-1 confidence must be nonnegative");
    if (r.iou && !(*r.iou >= 0.0 && *r.iou <= 1.0))
        fail("iou must lie in [0,1]");
    if (r.cv && !(*r.cv >= 0.0))
        fail("cv must be nonnegative");
    if (r.inv_cv && !(*r.inv_cv >= 0.0))
        fail("inv_cv must be nonnegative");
}

template <class Record>
auto optional_field(Record& r, std::string_view column) -> decltype(&r.iou)
{
    if (column == "iou")
        return &r.iou;
    if (column == "cv")
        return &r.cv;
    if (column == "inv_cv")
        return &r.inv_cv;
    if (column == "mean_volume_mm3")
        return &r.mean_volume_mm3;
    if (column == "true_volume_mm3")
        return &r.true_volume_mm3;
    if (column == "dice")
        return &r.dice;
    return nullptr;
}

} // namespace

std::string_view to_string(ConfidenceKind kind) noexcept
{
    return kind == ConfidenceKind::IoU ? "iou" : "invcv";
}

ConfidenceKind parse_confidence_kind(std::string_view text)
{
    const std::string t = lower(text);
    if (t == "iou")
        return ConfidenceKind::IoU;
    if (t == "invcv" || t == "inv_cv" || t == "cv-1" || t == "cv^-1")
        return ConfidenceKind::InvCV;
    throw Error(Errc::InvalidValue, "unknown confidence kind '" + std::string(text) + "'");
}

std::optional<double> confidence_of(const SubjectRecord& r, ConfidenceKind kind) noexcept
{
    const auto& dedicated = kind == ConfidenceKind::IoU ? r.iou : r.inv_cv;
    if (dedicated)
        return dedicated;
    if (r.confidence_kind == kind)
        return r.confidence;
    return std::nullopt;
}

std::span<const std::string_view> standardizable_columns() noexcept
{
    return kStandardizable;
}

std::optional<double> column_value(const SubjectRecord& r, std::string_view column)
{
    if (column == "age")
        return r.age_years;
    if (column == "bmi")
        return r.bmi;
    if (column == "sex")
        return r.sex;
    if (column == "diabetes")
        return r.diabetes;
    if (column == "volume_mm3")
        return r.volume_mm3;
    if (column == "confidence")
        return r.confidence;
    if (const auto* field = optional_field(r, column))
        return *field;
    throw Error(Errc::UnknownColumn, "'" + std::string(column) + "'");
}

void set_column_value(SubjectRecord& r, std::string_view column, double value)
{
    if (column == "age")
        r.age_years = value;
    else if (column == "bmi")
        r.bmi = value;
    else if (column == "volume_mm3")
        r.volume_mm3 = value;
    else if (column == "confidence")
        r.confidence = value;
    else if (auto* field = optional_field(r, column))
        *field = value;
    else
        throw Error(Errc::UnknownColumn, "'" + std::string(column) + "' is not a writable numeric column");
}

Cohort::Cohort(std::vector<SubjectRecord> records)
    : records_(std::move(records))
{
    std::set<std::string> seen;
    for (const auto& r : records_) {
        if (!seen.insert(r.subject_id).second)
            throw Error(Errc::DuplicateId, "'" + r.subject_id + "'");
    }
}

Cohort Cohort::subset(std::span<const std::size_t> indices) const
{
    Cohort out;
    out.records_.reserve(indices.size());
    for (std::size_t i : indices)
        out.records_.push_back(records_.at(i));
    Cohort checked(std::move(out.records_));
    checked.stats_ = stats_;
    return checked;
}

std::vector<double> Cohort::column(std::string_view name) const
{
    std::vector<double> values;
    values.reserve(records_.size());
    for (const auto& r : records_) {
        auto v = column_value(r, name);
        if (!v)
            throw Error(Errc::MissingColumn, "'" + std::string(name) + "' missing for subject '" + r.subject_id + "'");
        values.push_back(*v);
    }
    return values;
}

Cohort standardize(const Cohort& cohort, const std::vector<std::string>& columns)
{
    Cohort out = cohort;
    for (const auto& name : columns) {
        if (std::find(kStandardizable.begin(), kStandardizable.end(), name) == kStandardizable.end())
            throw Error(Errc::InvalidConfig, "column '" + name + "' cannot be standardized");
        if (out.stats_.count(name) != 0)
            throw Error(Errc::InvalidConfig, "standardization of '" + name + "' is already frozen");
        const auto values = out.column(name);
        if (values.empty())
            throw Error(Errc::ZeroVariance, "column '" + name + "' is empty");
        double mean = 0.0;
        for (double v : values)
            mean += v;
        mean /= static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values)
            ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size()));
        if (!(sd > 0.0) || !std::isfinite(sd))
            throw Error(Errc::ZeroVariance, "column '" + name + "'");
        out.stats_[name] = ColumnStats{mean, sd};
        for (auto& r : out.records_)
            set_column_value(r, name, (*column_value(r, name) - mean) / sd);
    }
    return out;
}

Cohort apply_standardization(const Cohort& cohort, const Standardization& stats)
{
    Cohort out = cohort;
    for (const auto& [name, s] : stats) {
        if (out.stats_.count(name) != 0)
            throw Error(Errc::InvalidConfig, "standardization of '" + name + "' is already frozen");
        for (auto& r : out.records_) {
            auto v = column_value(r, name);
            if (!v)
                throw Error(Errc::MissingColumn, "'" + name + "' missing for subject '" + r.subject_id + "'");
            set_column_value(r, name, (*v - s.mean) / s.std);
        }
        out.stats_[name] = s;
    }
    return out;
}

Cohort read_cohort_csv(std::istream& in)
{
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!line.empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty())
        throw Error(Errc::MissingColumn, "empty CSV: no header");

    std::map<std::string, std::size_t> col_index;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string& name = header[i];
        const bool known = std::find(kRequiredColumns.begin(), kRequiredColumns.end(), name) != kRequiredColumns.end()
            || std::find(kOptionalColumns.begin(), kOptionalColumns.end(), name) != kOptionalColumns.end();
        if (!known)
            throw Error(Errc::UnknownColumn, "'" + name + "'");
        if (!col_index.emplace(name, i).second)
            throw Error(Errc::InvalidValue, "column '" + name + "' appears twice");
    }
    for (auto name : kRequiredColumns) {
        if (col_index.count(std::string(name)) == 0)
            throw Error(Errc::MissingColumn, "'" + std::string(name) + "'");
    }

    std::vector<SubjectRecord> records;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw Error(Errc::InvalidValue,
                        "row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected "
                            + std::to_string(header.size()));
        auto cell = [&](std::string_view name) -> const std::string& { return cells[col_index.at(std::string(name))]; };

        SubjectRecord r;
        r.subject_id = cell("subject_id");
        r.age_years = parse_number(cell("age"), "age", row, false);
        r.sex = parse_binary(cell("sex"), "sex", row);
        r.bmi = parse_number(cell("bmi"), "bmi", row, false);
        r.diabetes = parse_binary(cell("diabetes"), "diabetes", row);
        r.volume_mm3 = parse_number(cell("volume_mm3"), "volume_mm3", row, false);
        r.confidence_kind = parse_confidence_kind(cell("confidence_kind"));
        r.confidence = parse_number(cell("confidence"), "confidence", row, r.confidence_kind == ConfidenceKind::InvCV);
        for (auto name : kOptionalColumns) {
            auto it = col_index.find(std::string(name));
            if (it == col_index.end() || cells[it->second].empty())
                continue;
            set_column_value(r, name, parse_number(cells[it->second], name, row, name == "inv_cv"));
        }
        validate_record(r, row);
        records.push_back(std::move(r));
    }
    return Cohort(std::move(records));
}

Cohort read_cohort_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::Io, "cannot open '" + path.string() + "'");
    return read_cohort_csv(in);
}

std::string format_exact(double value)
{
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

void write_cohort_csv(const Cohort& cohort, std::ostream& out)
{
    std::vector<std::string_view> optional_present;
    for (auto name : kOptionalColumns) {
        const bool any = std::any_of(cohort.records().begin(), cohort.records().end(),
                                     [&](const SubjectRecord& r) { return column_value(r, name).has_value(); });
        if (any)
            optional_present.push_back(name);
    }

    for (std::size_t i = 0; i < kRequiredColumns.size(); ++i)
        out << (i ? "," : "") << kRequiredColumns[i];
    for (auto name : optional_present)
        out << ',' << name;
    out << '\n';

    for (const auto& r : cohort.records()) {
        out << r.subject_id << ',' << format_exact(r.age_years) << ',' << r.sex << ',' << format_exact(r.bmi) << ','
            << r.diabetes << ',' << format_exact(r.volume_mm3) << ',' << format_exact(r.confidence) << ','
            << to_string(r.confidence_kind);
        for (auto name : optional_present) {
            out << ',';
            if (auto v = column_value(r, name))
                out << format_exact(*v);
        }
        out << '\n';
    }
}

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
    write_cohort_csv(cohort, out);
    out.close();
    if (!out)
        throw Error(Errc::Io, "failed writing '" + path.string() + "'");
}

} // namespace biouncert
