#pragma once

#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "drsched/schedulers.hpp"
#include "drsched/series_io.hpp"

namespace drsched {

inline constexpr std::string_view kScheduleHeader =
    "hour,p_da_mw,heat_out_mwh,storage_mwh,recourse_gain,tau,lambda,mean_slack";

/// Columns a policy does not produce (recourse gain outside the two-stage
/// policy, CVaR diagnostics for det/oracle) are left empty.
inline void write_schedule_csv(std::ostream& os, const Schedule& s) {
    const auto opt = [](const std::vector<double>& v, std::size_t t) {
        return t < v.size() ? fmt::format("{}", v[t]) : std::string();
    };
    os << kScheduleHeader << '\n';
    for (std::size_t t = 0; t < s.periods(); ++t) {
        std::string diag = ",,";
        if (t < s.diagnostics.size()) {
            const PeriodDiagnostics& d = s.diagnostics[t];
            diag = fmt::format("{},{},{}", d.tau, d.lambda, d.mean_slack);
        }
        os << fmt::format("{},{},{},{},{},{}\n", t, s.p_da[t], opt(s.heat_out, t), opt(s.storage_plan, t),
                          opt(s.recourse_gain, t), diag);
    }
}

inline std::string schedule_to_csv(const Schedule& s) {
    std::ostringstream os;
    write_schedule_csv(os, s);
    return os.str();
}

inline nlohmann::ordered_json schedule_summary_json(const Schedule& s) {
    nlohmann::ordered_json j;
    j["policy"] = s.policy;
    j["objective"] = s.objective;
    j["electricity_cost"] = s.electricity_cost;
    j["recourse_cost"] = s.recourse_cost;
    j["theta"] = s.theta;
    j["alpha"] = s.alpha;
    j["n"] = s.sample_count;
    j["seed"] = s.seed;
    j["periods"] = s.periods();
    return j;
}

/// Reads back the schedule CSV. Only hour and p_da_mw are required; the
/// other columns are restored when present and non-empty.
inline Schedule read_schedule_csv(std::istream& in, const std::string& source = "schedule") {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(source + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
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
    const auto hour_col = column("hour");
    const auto p_col = column("p_da_mw");
    if (!hour_col || !p_col) {
        throw ValidationError(source + ": missing column " + std::string(hour_col ? "p_da_mw" : "hour"));
    }
    const auto heat_col = column("heat_out_mwh");
    const auto storage_col = column("storage_mwh");
    const auto gain_col = column("recourse_gain");

    Schedule s;
    s.policy = "file";
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \r") == std::string::npos) {
            continue;
        }
        if (line.back() == '\r') {
            line.pop_back();
        }
        const auto cells = detail::split_csv(line);
        if (cells.size() != header.size()) {
            throw ValidationError(fmt::format("{}: row {} has {} fields, expected {}", source, lineno, cells.size(),
                                              header.size()));
        }
        const auto hour = detail::parse_double(cells[*hour_col]);
        if (!hour || *hour != static_cast<double>(s.p_da.size())) {
            throw ValidationError(fmt::format("{}: row {}: hours must count up from 0", source, lineno));
        }
        const auto p = detail::parse_double(cells[*p_col]);
        if (!p || !std::isfinite(*p) || *p < 0.0) {
            throw ValidationError(fmt::format("{}: row {}: bad p_da_mw '{}'", source, lineno, cells[*p_col]));
        }
        s.p_da.push_back(*p);
        const auto keep = [&](std::optional<std::size_t> col, std::vector<double>& out) {
            if (!col || cells[*col].empty()) {
                return;
            }
            const auto v = detail::parse_double(cells[*col]);
            if (!v) {
                throw ValidationError(fmt::format("{}: row {}: bad number '{}'", source, lineno, cells[*col]));
            }
            out.push_back(*v);
        };
        keep(heat_col, s.heat_out);
        keep(storage_col, s.storage_plan);
        keep(gain_col, s.recourse_gain);
    }
    if (s.p_da.empty()) {
        throw ValidationError(source + ": no rows");
    }
    // Partially filled optional columns are dropped rather than misaligned.
    for (auto* v : {&s.heat_out, &s.storage_plan, &s.recourse_gain}) {
        if (v->size() != s.p_da.size()) {
            v->clear();
        }
    }
    return s;
}

inline Schedule load_schedule_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open schedule " + path);
    }
    return read_schedule_csv(in, path);
}

} // namespace drsched
