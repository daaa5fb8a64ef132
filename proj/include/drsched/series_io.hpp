#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "drsched/calendar.hpp"
#include "drsched/domain.hpp"

namespace drsched {

inline constexpr std::string_view kSeriesHeader = "timestamp,forecast_mwh,actual_mwh,price_eur_mwh";

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) {
            cell.remove_prefix(1);
        }
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
            cell.remove_suffix(1);
        }
        out.push_back(cell);
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

inline std::optional<double> parse_double(std::string_view text) {
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return v;
}

} // namespace detail

/// Reads the series CSV: a header naming at least timestamp, forecast_mwh
/// and price_eur_mwh (any order); actual_mwh may be absent or left empty on
/// every row.
inline DaySeries read_series_csv(std::istream& in, const TimeGrid& grid, const std::string& source = "series") {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(source + ": empty file");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const auto header = detail::split_csv(line);
    const auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        return std::nullopt;
    };
    const auto required = [&](std::string_view name) {
        const auto c = column(name);
        if (!c) {
            throw ValidationError(fmt::format("{}: missing column {}", source, name));
        }
        return *c;
    };
    const std::size_t c_ts = required("timestamp");
    const std::size_t c_fc = required("forecast_mwh");
    const std::size_t c_pr = required("price_eur_mwh");
    const std::optional<std::size_t> c_ac = column("actual_mwh");

    DaySeries s;
    std::size_t row = 0;
    std::size_t actual_cells = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = detail::split_csv(line);
        if (cells.size() != header.size()) {
            throw ValidationError(
                fmt::format("{}: row {} has {} fields, expected {}", source, row, cells.size(), header.size()));
        }
        const auto ts = parse_timestamp(cells[c_ts]);
        if (!ts) {
            throw ValidationError(fmt::format("{}: row {}: bad timestamp '{}'", source, row, cells[c_ts]));
        }
        if (!s.timestamps.empty() && *ts == s.timestamps.back()) {
            throw ValidationError(fmt::format("{}: row {}: duplicate timestamp {}", source, row, cells[c_ts]));
        }
        if (!s.timestamps.empty() && *ts < s.timestamps.back()) {
            throw ValidationError(fmt::format("{}: row {}: timestamps not increasing", source, row));
        }
        const auto number = [&](std::size_t col) {
            const auto v = detail::parse_double(cells[col]);
            if (!v || !std::isfinite(*v)) {
                throw ValidationError(
                    fmt::format("{}: row {}: {} is not a finite number ('{}')", source, row, header[col], cells[col]));
            }
            return *v;
        };
        s.timestamps.push_back(*ts);
        s.forecast.push_back(number(c_fc));
        s.price.push_back(number(c_pr));
        if (c_ac && !cells[*c_ac].empty()) {
            s.actual.push_back(number(*c_ac));
            ++actual_cells;
        }
    }
    if (actual_cells != 0 && actual_cells != s.timestamps.size()) {
        throw ValidationError(fmt::format("{}: actual_mwh present on {} of {} rows", source, actual_cells,
                                          s.timestamps.size()));
    }
    try {
        validate_series(s, grid);
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
    return s;
}

inline DaySeries load_series_csv(const std::string& path, const TimeGrid& grid) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    return read_series_csv(in, grid, path);
}

inline void write_series_csv(std::ostream& os, const DaySeries& s) {
    os << kSeriesHeader << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.has_actual()) {
            os << fmt::format("{},{},{},{}\n", format_timestamp(s.timestamps[i]), s.forecast[i], s.actual[i],
                              s.price[i]);
        } else {
            os << fmt::format("{},{},,{}\n", format_timestamp(s.timestamps[i]), s.forecast[i], s.price[i]);
        }
    }
}

inline std::string series_to_csv(const DaySeries& s) {
    std::ostringstream os;
    write_series_csv(os, s);
    return os.str();
}

} // namespace drsched
