#include "biouncert/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "biouncert/error.hpp"

namespace biouncert::eval {

namespace {

std::string sanitize(std::string text)
{
    for (char& c : text) {
        if (c == '|' || c == '\n' || c == '\r' || c == ',')
            c = ';';
    }
    return text;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_pipes(std::string_view line)
{
    std::vector<std::string> out;
    std::string_view body = line;
    if (!body.empty() && body.front() == '|')
        body.remove_prefix(1);
    if (!body.empty() && body.back() == '|')
        body.remove_suffix(1);
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i == body.size() || body[i] == '|') {
            out.push_back(trim(body.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

std::string render_csv(const StudyReport& report)
{
    std::ostringstream os;
    os << "table,row,column,value,status\n";
    for (const auto& t : report.tables) {
        for (const auto& row : t.rows) {
            for (std::size_t j = 0; j < t.columns.size(); ++j) {
                const auto& cell = row.cells.at(j);
                os << sanitize(t.title) << ',' << sanitize(row.label) << ',' << sanitize(t.columns[j].name) << ',';
                if (cell.value)
                    os << format_sig6(*cell.value);
                os << ',' << (cell.failed() ? "failed: " + sanitize(cell.failure) : (cell.value ? "ok" : "empty"))
                   << '\n';
            }
        }
    }
    return os.str();
}

std::string render_json(const StudyReport& report)
{
    nlohmann::ordered_json root;
    root["tables"] = nlohmann::ordered_json::array();
    for (const auto& t : report.tables) {
        nlohmann::ordered_json jt;
        jt["title"] = t.title;
        jt["metric"] = t.metric;
        jt["best"] = std::string(to_string(t.best));
        jt["target"] = t.target;
        jt["columns"] = nlohmann::ordered_json::array();
        for (const auto& c : t.columns)
            jt["columns"].push_back({{"name", c.name}, {"reference", c.reference}});
        jt["rows"] = nlohmann::ordered_json::array();
        for (const auto& row : t.rows) {
            nlohmann::ordered_json jr;
            jr["label"] = row.label;
            jr["cells"] = nlohmann::ordered_json::array();
            for (const auto& cell : row.cells) {
                nlohmann::ordered_json jc;
                jc["value"] = cell.value ? nlohmann::ordered_json(*cell.value) : nlohmann::ordered_json(nullptr);
                if (cell.failed())
                    jc["failure"] = cell.failure;
                jr["cells"].push_back(jc);
            }
            const auto best = t.best_cell(row);
            jr["best"] = best ? nlohmann::ordered_json(t.columns[*best].name) : nlohmann::ordered_json(nullptr);
            jt["rows"].push_back(jr);
        }
        root["tables"].push_back(jt);
    }
    return root.dump(2) + "\n";
}

std::string render_markdown(const StudyReport& report)
{
    std::ostringstream os;
    for (std::size_t ti = 0; ti < report.tables.size(); ++ti) {
        const auto& t = report.tables[ti];
        if (ti > 0)
            os << '\n';
        os << "## " << t.title << "\n\n";
        os << "<!-- metric: " << t.metric << "; best: " << to_string(t.best) << "; reference:";
        bool first = true;
        for (const auto& c : t.columns) {
            if (c.reference) {
                os << (first ? " " : ",") << c.name;
                first = false;
            }
        }
        if (!t.target.empty())
            os << "; target: " << t.target;
        os << " -->\n\n";
        os << "| Method |";
        for (const auto& c : t.columns)
            os << ' ' << sanitize(c.name) << " |";
        os << "\n|:--|";
        for (std::size_t j = 0; j < t.columns.size(); ++j)
            os << "--:|";
        os << '\n';
        for (const auto& row : t.rows) {
            const auto best = t.best_cell(row);
            os << "| " << sanitize(row.label) << " |";
            for (std::size_t j = 0; j < t.columns.size(); ++j) {
                const auto& cell = row.cells.at(j);
                os << ' ';
                if (cell.failed())
                    os << "failed: " << sanitize(cell.failure);
                else if (cell.value)
                    os << (best == j ? "**" : "") << format_sig6(*cell.value) << (best == j ? "**" : "");
                os << " |";
            }
            os << '\n';
        }
    }
    return os.str();
}

double parse_double(const std::string& s)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(Errc::NonNumeric, "report cell '" + s + "'");
    }
}

} // namespace

std::optional<std::size_t> ReportTable::column_index(std::string_view name) const
{
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j].name == name)
            return j;
    }
    return std::nullopt;
}

std::optional<std::size_t> ReportTable::best_cell(const ReportRow& row) const
{
    if (best == BestRule::None)
        return std::nullopt;
    std::optional<double> ref;
    if (best == BestRule::ClosestToReference) {
        for (std::size_t j = 0; j < columns.size() && j < row.cells.size(); ++j) {
            if (!target.empty() && columns[j].name != target)
                continue;
            if (columns[j].reference && row.cells[j].value && !row.cells[j].failed()) {
                ref = row.cells[j].value;
                break;
            }
        }
        if (!ref)
            return std::nullopt;
    }
    std::optional<std::size_t> best_j;
    double best_score = 0.0;
    for (std::size_t j = 0; j < columns.size() && j < row.cells.size(); ++j) {
        const auto& cell = row.cells[j];
        if (columns[j].reference || cell.failed() || !cell.value)
            continue;
        const double score = best == BestRule::Maximum ? *cell.value : -std::abs(*cell.value - *ref);
        if (!best_j || score > best_score) {
            best_j = j;
            best_score = score;
        }
    }
    return best_j;
}

bool StudyReport::any_failed() const noexcept
{
    for (const auto& t : tables) {
        for (const auto& r : t.rows) {
            for (const auto& c : r.cells) {
                if (c.failed())
                    return true;
            }
        }
    }
    return false;
}

ReportFormat parse_report_format(std::string_view text)
{
    if (text == "csv")
        return ReportFormat::Csv;
    if (text == "json")
        return ReportFormat::Json;
    if (text == "md" || text == "markdown")
        return ReportFormat::Markdown;
    throw Error(Errc::InvalidConfig, "unknown report format '" + std::string(text) + "'");
}

std::string_view to_string(BestRule rule) noexcept
{
    switch (rule) {
    case BestRule::None: return "none";
    case BestRule::Maximum: return "max";
    case BestRule::ClosestToReference: return "closest";
    }
    return "none";
}

BestRule parse_best_rule(std::string_view text)
{
    for (auto r : {BestRule::None, BestRule::Maximum, BestRule::ClosestToReference}) {
        if (to_string(r) == text)
            return r;
    }
    throw Error(Errc::InvalidValue, "unknown best rule '" + std::string(text) + "'");
}

std::string format_sig6(double value)
{
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

std::string render_report(const StudyReport& report, ReportFormat format)
{
    switch (format) {
    case ReportFormat::Csv: return render_csv(report);
    case ReportFormat::Json: return render_json(report);
    case ReportFormat::Markdown: return render_markdown(report);
    }
    return {};
}

StudyReport parse_json_report(std::string_view text)
{
    StudyReport report;
    try {
        const auto root = nlohmann::json::parse(text);
        for (const auto& jt : root.at("tables")) {
            ReportTable t;
            t.title = jt.at("title").get<std::string>();
            t.metric = jt.at("metric").get<std::string>();
            t.best = parse_best_rule(jt.at("best").get<std::string>());
            t.target = jt.value("target", std::string{});
            for (const auto& jc : jt.at("columns"))
                t.columns.push_back({jc.at("name").get<std::string>(), jc.at("reference").get<bool>()});
            for (const auto& jr : jt.at("rows")) {
                ReportRow row;
                row.label = jr.at("label").get<std::string>();
                for (const auto& jc : jr.at("cells")) {
                    ReportCell cell;
                    if (!jc.at("value").is_null())
                        cell.value = jc["value"].get<double>();
                    if (jc.contains("failure"))
                        cell.failure = jc["failure"].get<std::string>();
                    row.cells.push_back(cell);
                }
                t.rows.push_back(std::move(row));
            }
            report.tables.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::InvalidValue, std::string("report JSON: ") + e.what());
    }
    return report;
}

StudyReport parse_markdown_report(std::string_view text)
{
    StudyReport report;
    std::istringstream in{std::string(text)};
    std::string line;
    ReportTable* current = nullptr;
    bool header_seen = false;
    std::vector<std::string> reference_names;
    while (std::getline(in, line)) {
        if (line.rfind("## ", 0) == 0) {
            report.tables.emplace_back();
            current = &report.tables.back();
            current->title = trim(line.substr(3));
            header_seen = false;
            reference_names.clear();
            continue;
        }
        if (current == nullptr)
            continue;
        if (line.rfind("<!--", 0) == 0) {
            const auto body = line.substr(4, line.find("-->") - 4);
            std::istringstream fields(body);
            std::string field;
            while (std::getline(fields, field, ';')) {
                const auto colon = field.find(':');
                if (colon == std::string::npos)
                    continue;
                const auto key = trim(field.substr(0, colon));
                const auto value = trim(field.substr(colon + 1));
                if (key == "metric")
                    current->metric = value;
                else if (key == "target")
                    current->target = value;
                else if (key == "best")
                    current->best = parse_best_rule(value);
                else if (key == "reference") {
                    std::istringstream names(value);
                    std::string name;
                    while (std::getline(names, name, ','))
                        if (!trim(name).empty())
                            reference_names.push_back(trim(name));
                }
            }
            continue;
        }
        if (line.empty() || line.front() != '|')
            continue;
        const auto cells = split_pipes(line);
        if (!header_seen) {
            for (std::size_t j = 1; j < cells.size(); ++j) {
                const bool is_ref
                    = std::find(reference_names.begin(), reference_names.end(), cells[j]) != reference_names.end();
                current->columns.push_back({cells[j], is_ref});
            }
            header_seen = true;
            continue;
        }
        if (line.rfind("|:--", 0) == 0)
            continue;
        ReportRow row;
        row.label = cells.at(0);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            ReportCell cell;
            std::string v = cells[j];
            if (v.rfind("failed: ", 0) == 0) {
                cell.failure = v.substr(8);
            } else if (!v.empty()) {
                if (v.size() > 4 && v.rfind("**", 0) == 0)
                    v = v.substr(2, v.size() - 4);
                cell.value = parse_double(v);
            }
            row.cells.push_back(cell);
        }
        if (row.cells.size() != current->columns.size())
            throw Error(Errc::InvalidValue, "markdown row '" + row.label + "' has the wrong number of cells");
        current->rows.push_back(std::move(row));
    }
    return report;
}

} // namespace biouncert::eval
