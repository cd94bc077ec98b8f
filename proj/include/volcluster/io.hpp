#pragma once

// File formats.
//
// Path CSV:      header `t,price,ret,value,expectation,news_i,news_j,m,n`,
//                one row per step; an aborted path ends with `# aborted:<t>`.
// Analysis JSON: {"schema_version": 1, "summary", "acf_returns", "acf_abs",
//                "ccdf", "fit"}; absent statistics are null with a sibling
//                "<name>_error" reason. Written next to `<stem>_acf.csv`
//                (lag,acf_r,acf_abs,band) and `<stem>_ccdf.csv` (x,fraction).
// Every floating-point field is the shortest decimal that round-trips.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "volcluster/analysis.hpp"
#include "volcluster/config.hpp"
#include "volcluster/error.hpp"
#include "volcluster/simulate.hpp"
#include "volcluster/stats.hpp"

namespace volcluster {

inline constexpr int kAnalysisSchemaVersion = 1;

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw DataError("write failed: " + path.string());
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config files

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

inline void save_config(const RunConfig& config, const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    out << to_json(config).dump(2) << '\n';
    detail::finish_write(out, path);
}

// ---------------------------------------------------------------------------
// CSV ingestion

struct PriceCsvSchema {
    char delimiter = ',';
    std::variant<std::string, std::size_t> column = std::string("price");  ///< header name or 0-based index
    std::optional<std::string> date_column;
    bool header = true;
};

/// Parses `key=value` pairs separated by ';':
///   column=<name|index>  delimiter=<char|comma|semicolon|tab|space>
///   date=<name>          header=<true|false|1|0>
inline PriceCsvSchema parse_schema(std::string_view text) {
    PriceCsvSchema schema;
    for (auto part : detail::split(text, ';')) {
        if (part.empty()) continue;
        const auto eq = part.find('=');
        if (eq == std::string_view::npos) throw ConfigError("schema: expected key=value, got '" + std::string(part) + "'");
        const std::string key(detail::trim(part.substr(0, eq)));
        const std::string value(part.substr(eq + 1));
        if (key == "column" || key == "col") {
            std::size_t idx = 0;
            const auto res = std::from_chars(value.data(), value.data() + value.size(), idx);
            if (res.ec == std::errc() && res.ptr == value.data() + value.size()) schema.column = idx;
            else schema.column = value;
        } else if (key == "delimiter" || key == "delim") {
            if (value == "comma") schema.delimiter = ',';
            else if (value == "semicolon") schema.delimiter = ';';
            else if (value == "tab") schema.delimiter = '\t';
            else if (value == "space") schema.delimiter = ' ';
            else if (value.size() == 1) schema.delimiter = value[0];
            else throw ConfigError("schema.delimiter: expected a single character");
        } else if (key == "date") {
            schema.date_column = value;
        } else if (key == "header") {
            if (value == "true" || value == "1") schema.header = true;
            else if (value == "false" || value == "0") schema.header = false;
            else throw ConfigError("schema.header: expected true or false");
        } else {
            throw ConfigError("schema." + key + ": unknown key");
        }
    }
    return schema;
}

/// Extracts one numeric column in file order. Blank lines and lines starting
/// with '#' are skipped. Data rows are numbered from 1 in error messages.
inline std::vector<double> load_csv_column(const std::filesystem::path& path, const PriceCsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> column;
    std::string column_label;
    if (const auto* idx = std::get_if<std::size_t>(&schema.column)) {
        column = *idx;
        column_label = "#" + std::to_string(*idx);
    } else {
        column_label = std::get<std::string>(schema.column);
    }

    auto next_content_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            const auto t = detail::trim(line);
            if (t.empty() || t.front() == '#') continue;
            return true;
        }
        return false;
    };

    if (schema.header) {
        if (!next_content_line()) throw DataError(path.string() + ": empty file, expected a header row");
        const auto names = detail::split(line, schema.delimiter);
        if (!column) {
            for (std::size_t i = 0; i < names.size(); ++i)
                if (names[i] == column_label) column = i;
            if (!column) throw DataError(path.string() + ": missing column '" + column_label + "'");
        } else if (*column >= names.size()) {
            throw DataError(path.string() + ": missing column " + column_label);
        }
        if (schema.date_column) {
            bool found = false;
            for (auto name : names) found = found || name == *schema.date_column;
            if (!found) throw DataError(path.string() + ": missing date column '" + *schema.date_column + "'");
        }
    } else if (!column) {
        throw DataError(path.string() + ": a header-less file needs a numeric column index");
    }

    std::vector<double> values;
    std::size_t row = 0;
    while (next_content_line()) {
        ++row;
        const auto cells = detail::split(line, schema.delimiter);
        if (*column >= cells.size())
            throw DataError(path.string() + ": row " + std::to_string(row) + " (line " + std::to_string(line_no) +
                            ") has no column " + column_label);
        const auto v = detail::parse_double(cells[*column]);
        if (!v || !std::isfinite(*v))
            throw DataError(path.string() + ": row " + std::to_string(row) + " (line " + std::to_string(line_no) +
                            "): non-numeric value '" + std::string(cells[*column]) + "' in column " + column_label);
        values.push_back(*v);
    }
    return values;
}

/// Price column of a CSV file; every price must be positive.
inline std::vector<double> load_price_csv(const std::filesystem::path& path, const PriceCsvSchema& schema = {}) {
    auto prices = load_csv_column(path, schema);
    for (std::size_t i = 0; i < prices.size(); ++i)
        if (!(prices[i] > 0.0))
            throw DataError(path.string() + ": row " + std::to_string(i + 1) + ": nonpositive price " +
                            format_double(prices[i]));
    return prices;
}

// ---------------------------------------------------------------------------
// Writers

inline void write_path(const Path& path, const std::filesystem::path& out_path) {
    auto out = detail::open_for_write(out_path);
    out << "t,price,ret,value,expectation,news_i,news_j,m,n\n";
    for (const auto& r : path.records) {
        out << r.t << ',' << format_double(r.price) << ',' << format_double(r.ret) << ',' << format_double(r.value)
            << ',' << format_double(r.expectation) << ',' << (r.news_i ? 1 : 0) << ',' << (r.news_j ? 1 : 0) << ','
            << format_double(r.m) << ',' << format_double(r.n) << '\n';
    }
    if (path.aborted_at) out << "# aborted:" << *path.aborted_at << '\n';
    detail::finish_write(out, out_path);
}

/// Single-column CSV with header `r`.
inline void write_series(std::span<const double> values, const std::filesystem::path& out_path,
                         std::string_view header = "r") {
    auto out = detail::open_for_write(out_path);
    out << header << '\n';
    for (double v : values) out << format_double(v) << '\n';
    detail::finish_write(out, out_path);
}

inline nlohmann::json to_json(const SummaryStats& s) {
    return {{"n", s.n}, {"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max},
            {"std_convention", "population"}};
}

inline nlohmann::json to_json(const AcfResult& a) {
    std::vector<std::size_t> lags(a.rho.size());
    for (std::size_t h = 0; h < lags.size(); ++h) lags[h] = h + 1;
    return {{"lags", lags}, {"rho", a.rho}, {"band", a.band}, {"n", a.n}};
}

inline nlohmann::json to_json(const TailFit& f) {
    return {{"alpha", f.alpha}, {"tail_index", f.tail_index()}, {"xmin", f.xmin},
            {"ks_stat", f.ks_stat}, {"n_tail", f.n_tail}, {"se", f.se}};
}

inline nlohmann::json to_json(const Analysis& a) {
    nlohmann::json j;
    j["schema_version"] = kAnalysisSchemaVersion;
    j["summary"] = to_json(a.summary);
    j["acf_returns"] = a.acf_returns ? to_json(*a.acf_returns) : nlohmann::json(nullptr);
    j["acf_abs"] = a.acf_abs ? to_json(*a.acf_abs) : nlohmann::json(nullptr);
    if (!a.acf_returns) j["acf_error"] = a.acf_error;
    j["ccdf"] = {{"x", a.ccdf.x}, {"fraction", a.ccdf.fraction}, {"n", a.ccdf.n}};
    j["fit"] = a.fit ? to_json(*a.fit) : nlohmann::json(nullptr);
    if (!a.fit) j["fit_error"] = a.fit_error;
    return j;
}

/// Writes the analysis JSON at `out_path` plus `<stem>_acf.csv` and
/// `<stem>_ccdf.csv` beside it. Returns the paths written.
inline std::vector<std::filesystem::path> write_analysis(const Analysis& analysis,
                                                         const std::filesystem::path& out_path) {
    std::vector<std::filesystem::path> written;
    {
        auto out = detail::open_for_write(out_path);
        out << to_json(analysis).dump(2) << '\n';
        detail::finish_write(out, out_path);
        written.push_back(out_path);
    }
    const auto stem = out_path.parent_path() / out_path.stem();
    if (analysis.acf_returns && analysis.acf_abs) {
        const std::filesystem::path acf_path = stem.string() + "_acf.csv";
        auto out = detail::open_for_write(acf_path);
        out << "lag,acf_r,acf_abs,band\n";
        for (std::size_t h = 1; h <= analysis.acf_returns->max_lag(); ++h)
            out << h << ',' << format_double(analysis.acf_returns->at(h)) << ','
                << format_double(analysis.acf_abs->at(h)) << ',' << format_double(analysis.acf_returns->band) << '\n';
        detail::finish_write(out, acf_path);
        written.push_back(acf_path);
    }
    {
        const std::filesystem::path ccdf_path = stem.string() + "_ccdf.csv";
        auto out = detail::open_for_write(ccdf_path);
        out << "x,fraction\n";
        for (std::size_t i = 0; i < analysis.ccdf.x.size(); ++i)
            out << format_double(analysis.ccdf.x[i]) << ',' << format_double(analysis.ccdf.fraction[i]) << '\n';
        detail::finish_write(out, ccdf_path);
        written.push_back(ccdf_path);
    }
    return written;
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& out_path) {
    auto out = detail::open_for_write(out_path);
    out << j.dump(2) << '\n';
    detail::finish_write(out, out_path);
}

}  // namespace volcluster
