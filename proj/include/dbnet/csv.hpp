#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dbnet/core.hpp"

namespace dbnet {

struct RawObservation {
    std::string patient_id;
    std::int64_t timestamp_minutes = 0;
    std::vector<std::optional<double>> values;  // aligned to schema order
    bool outcome_critical = false;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_strict_double(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw DataError("line " + std::to_string(line_no) + ": malformed number '" + s + "'");
    if (!std::isfinite(v))
        throw DataError("line " + std::to_string(line_no) + ": non-finite number '" + s + "'");
    return v;
}

inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// ISO-8601 timestamps at minute resolution: YYYY-MM-DDTHH:MM with optional
// :SS and trailing Z. Seconds truncate toward the minute.
inline std::int64_t parse_iso8601_minutes(const std::string& s, std::size_t line_no) {
    int y, mo, d, h, mi;
    char sep;
    int n = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d%n", &y, &mo, &d, &sep, &h, &mi, &n) < 6 ||
        (sep != 'T' && sep != ' '))
        throw DataError("line " + std::to_string(line_no) + ": bad timestamp '" + s + "'");
    std::string rest = s.substr(static_cast<std::size_t>(n));
    if (!rest.empty() && rest != "Z") {
        int sec = 0;
        int m2 = 0;
        if (std::sscanf(rest.c_str(), ":%d%n", &sec, &m2) < 1 ||
            (rest.substr(static_cast<std::size_t>(m2)) != "" &&
             rest.substr(static_cast<std::size_t>(m2)) != "Z"))
            throw DataError("line " + std::to_string(line_no) + ": bad timestamp '" + s + "'");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59)
        throw DataError("line " + std::to_string(line_no) + ": bad timestamp '" + s + "'");
    return days_from_civil(y, mo, d) * 1440 + h * 60 + mi;
}

inline bool parse_label(const std::string& s, std::size_t line_no) {
    if (s == "1" || s == "true" || s == "critical") return true;
    if (s == "0" || s == "false" || s == "non-critical") return false;
    throw DataError("line " + std::to_string(line_no) + ": bad label '" + s + "'");
}

}  // namespace detail

// Expects header patient_id,timestamp,label,<feature...>; blank cell = missing.
inline std::vector<RawObservation> ingest_csv(const std::string& path, const FeatureSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    auto header = detail::split_csv_line(line);
    if (header.size() < 3 || header[0] != "patient_id" || header[1] != "timestamp" ||
        header[2] != "label")
        throw DataError("header must start with patient_id,timestamp,label");

    std::vector<std::size_t> col_to_feature;
    for (std::size_t i = 3; i < header.size(); ++i) {
        if (!schema.contains(header[i]))
            throw DataError("unknown feature column: " + header[i]);
        col_to_feature.push_back(schema.index_of(header[i]));
    }

    std::vector<RawObservation> out;
    std::set<std::pair<std::string, std::int64_t>> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        RawObservation obs;
        obs.patient_id = cells[0];
        obs.timestamp_minutes = detail::parse_iso8601_minutes(cells[1], line_no);
        obs.outcome_critical = detail::parse_label(cells[2], line_no);
        obs.values.assign(schema.size(), std::nullopt);
        for (std::size_t i = 0; i < col_to_feature.size(); ++i) {
            const std::string& cell = cells[i + 3];
            if (!cell.empty()) obs.values[col_to_feature[i]] = detail::parse_strict_double(cell, line_no);
        }
        if (!seen.insert({obs.patient_id, obs.timestamp_minutes}).second)
            throw DataError("line " + std::to_string(line_no) + ": duplicate (patient, timestamp) " +
                            obs.patient_id + ", " + cells[1]);
        out.push_back(std::move(obs));
    }

    std::stable_sort(out.begin(), out.end(), [](const RawObservation& a, const RawObservation& b) {
        if (a.patient_id != b.patient_id) return a.patient_id < b.patient_id;
        return a.timestamp_minutes < b.timestamp_minutes;
    });
    return out;
}

}  // namespace dbnet
