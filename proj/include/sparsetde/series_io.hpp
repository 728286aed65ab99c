#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sparsetde/error.hpp"
#include "sparsetde/text.hpp"

namespace sparsetde {

/// Comma-separated table with a header row. Lines starting with '#' and
/// blank lines are skipped; `lines` keeps each row's 1-based line number.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;

    [[nodiscard]] std::optional<std::size_t> find_column(std::string_view name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    }

    [[nodiscard]] std::size_t column(std::string_view name) const {
        if (auto c = find_column(name)) return *c;
        throw Error(ErrorCode::Parse, "missing column '" + std::string(name) + "'");
    }
};

[[nodiscard]] inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string raw;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto cells = detail::split(line, ',');
        if (!have_header) {
            for (const auto& c : cells) {
                if (c.empty()) throw Error(ErrorCode::Parse, detail::line_context(line_no) + ": empty column name");
            }
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw Error(ErrorCode::Parse, detail::line_context(line_no) + ": expected " +
                                              std::to_string(t.header.size()) + " cells, found " +
                                              std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (cells[c].empty()) {
                throw Error(ErrorCode::Parse,
                            detail::line_context(line_no) + ": missing value in column '" + t.header[c] + "'");
            }
        }
        t.rows.push_back(std::move(cells));
        t.lines.push_back(line_no);
    }
    if (!have_header) throw Error(ErrorCode::Parse, "no header row");
    return t;
}

/// Column names used to pull series out of a table. `id` and `year` are
/// optional; when present, rows are grouped by (id, year) in order of first
/// appearance.
struct SeriesColumns {
    std::string x = "x";
    std::string y = "y";
    std::string day = "day";
    std::optional<std::string> id;
    std::optional<std::string> year;
};

struct SeriesRecord {
    std::string id;    // empty for single-series files
    std::string year;  // empty unless a year column was requested
    std::vector<long long> days;
    std::vector<double> x;
    std::vector<double> y;
};

/// Reads paired series. The day column is optional (days default to the row
/// position within each group); when present it must strictly increase
/// within each group. Errors carry line numbers.
[[nodiscard]] inline std::vector<SeriesRecord> read_series(std::istream& in, const SeriesColumns& cols) {
    const CsvTable t = read_csv(in);
    const std::size_t cx = t.column(cols.x);
    const std::size_t cy = t.column(cols.y);
    const auto cday = t.find_column(cols.day);
    std::optional<std::size_t> cid, cyear;
    if (cols.id) cid = t.column(*cols.id);
    if (cols.year) cyear = t.column(*cols.year);

    std::vector<SeriesRecord> out;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const auto ctx = detail::line_context(t.lines[r]);
        std::pair<std::string, std::string> key{cid ? row[*cid] : "", cyear ? row[*cyear] : ""};
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, out.size()).first;
            out.push_back(SeriesRecord{key.first, key.second, {}, {}, {}});
        }
        auto& rec = out[it->second];
        const long long day =
            cday ? detail::parse_integer(row[*cday], ctx) : static_cast<long long>(rec.days.size()) + 1;
        if (!rec.days.empty() && day <= rec.days.back()) {
            throw Error(ErrorCode::Parse, ctx + ": days must strictly increase within a series");
        }
        rec.days.push_back(day);
        rec.x.push_back(detail::parse_double(row[cx], ctx));
        rec.y.push_back(detail::parse_double(row[cy], ctx));
    }
    if (out.empty()) throw Error(ErrorCode::Parse, "no data rows");
    return out;
}

[[nodiscard]] inline std::vector<SeriesRecord> load_series(const std::string& path, const SeriesColumns& cols) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Parse, "cannot open '" + path + "'");
    try {
        return read_series(in, cols);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

/// Writes "day,x,y" (prefixed by id and year columns when any record has
/// them) after optional '#' comment lines.
inline void write_series(std::ostream& out, const std::vector<SeriesRecord>& records,
                         const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) out << "# " << c << '\n';
    const bool with_id = std::any_of(records.begin(), records.end(), [](const auto& r) { return !r.id.empty(); });
    const bool with_year =
        std::any_of(records.begin(), records.end(), [](const auto& r) { return !r.year.empty(); });
    if (with_id) out << "id,";
    if (with_year) out << "year,";
    out << "day,x,y\n";
    for (const auto& r : records) {
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            if (with_id) out << r.id << ',';
            if (with_year) out << r.year << ',';
            out << r.days[i] << ',' << format_number(r.x[i]) << ',' << format_number(r.y[i]) << '\n';
        }
    }
}

}  // namespace sparsetde
