#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "covariance.hpp"
#include "error.hpp"
#include "path_solver.hpp"

namespace ctlasso::io {

inline constexpr int kSchemaVersion = 1;

/// Round-trip decimal text for a double (17 significant digits).
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct NumericTable {
    std::vector<std::string> columns;
    MatrixXd values; // rows x columns

    Index column_index(const std::string& name) const
    {
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (columns[j] == name) return static_cast<Index>(j);
        throw Error(ErrorKind::parse_error, "column '" + name + "' not found");
    }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(b, e - b + 1);
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline bool parse_number(const std::string& text, double& out)
{
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

} // namespace detail

/// Parses a headered, all-numeric CSV. Errors name the offending row and column.
inline NumericTable parse_csv(std::istream& in)
{
    NumericTable table;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::parse_error, "empty CSV input");
    table.columns = detail::split_csv_line(line);
    if (table.columns.empty()) throw Error(ErrorKind::parse_error, "CSV header has no columns");

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != table.columns.size())
            throw Error(ErrorKind::parse_error, "row " + std::to_string(line_no) + " has " +
                                                    std::to_string(cells.size()) + " fields, expected " +
                                                    std::to_string(table.columns.size()));
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (!detail::parse_number(cells[j], row[j]))
                throw Error(ErrorKind::parse_error, "non-numeric value '" + cells[j] + "' in column '" +
                                                        table.columns[j] + "' at row " + std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return table;
}

inline NumericTable read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::parse_error, "cannot open '" + path + "'");
    return parse_csv(in);
}

inline nlohmann::json to_json(const VectorXd& v)
{
    nlohmann::json a = nlohmann::json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline VectorXd vector_from_json(const nlohmann::json& a)
{
    VectorXd v(static_cast<Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Index>(i)) = a[i].get<double>();
    return v;
}

inline nlohmann::json to_json(const ThresholdRule& r)
{
    return {{"kind", to_string(r.kind)}, {"nu", r.nu}, {"gamma", r.gamma}, {"lambda2", r.lambda2}};
}

inline ThresholdRule rule_from_json(const nlohmann::json& j)
{
    ThresholdRule r;
    r.kind = rule_kind_from_string(j.at("kind").get<std::string>());
    r.nu = j.at("nu").get<double>();
    r.gamma = j.at("gamma").get<double>();
    r.lambda2 = j.at("lambda2").get<double>();
    return r;
}

inline nlohmann::json to_json(const SolutionPath& path)
{
    nlohmann::json bps = nlohmann::json::array();
    for (const auto& bp : path.breakpoints) {
        bps.push_back({{"lambda", bp.lambda},
                       {"beta", to_json(bp.beta)},
                       {"active", bp.active},
                       {"global", bp.global}});
    }
    return {{"schema_version", kSchemaVersion},
            {"p", path.p},
            {"rule", to_json(path.rule)},
            {"termination", to_string(path.termination)},
            {"breakpoints", std::move(bps)}};
}

inline SolutionPath path_from_json(const nlohmann::json& j)
{
    try {
        SolutionPath path;
        path.p = j.at("p").get<Index>();
        path.rule = rule_from_json(j.at("rule"));
        path.termination = termination_from_string(j.at("termination").get<std::string>());
        for (const auto& b : j.at("breakpoints")) {
            Breakpoint bp;
            bp.lambda = b.at("lambda").get<double>();
            bp.beta = vector_from_json(b.at("beta"));
            bp.active = b.at("active").get<IndexSet>();
            bp.global = b.at("global").get<bool>();
            if (bp.beta.size() != path.p)
                throw Error(ErrorKind::parse_error, "breakpoint beta length does not match p");
            path.breakpoints.push_back(std::move(bp));
        }
        return path;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse_error, std::string("malformed path JSON: ") + e.what());
    }
}

} // namespace ctlasso::io
