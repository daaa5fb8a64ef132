#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "drsched/calendar.hpp"
#include "drsched/domain.hpp"

namespace drsched {

/// N whole-day residual trajectories (row-major N x T) used as the empirical
/// distribution of forecast errors. Positive residual = shortage.
struct ResidualSampleSet {
    std::size_t periods = 0;
    std::vector<double> xi_hat;
    std::vector<DayId> source_days;
    std::uint64_t seed = 0;
    DayId target_day{};

    [[nodiscard]] std::size_t size() const { return source_days.size(); }
    [[nodiscard]] double at(std::size_t sample, std::size_t period) const { return xi_hat[sample * periods + period]; }

    [[nodiscard]] std::vector<double> period_samples(std::size_t period) const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) {
            out[i] = at(i, period);
        }
        return out;
    }

    /// Builds a set from explicit rows; source days and target are left at the epoch.
    static ResidualSampleSet from_rows(const std::vector<std::vector<double>>& rows) {
        ResidualSampleSet s;
        s.periods = rows.empty() ? 0 : rows.front().size();
        for (const auto& r : rows) {
            if (r.size() != s.periods) {
                throw ValidationError("residual rows have different lengths");
            }
            s.xi_hat.insert(s.xi_hat.end(), r.begin(), r.end());
            s.source_days.emplace_back();
        }
        return s;
    }
};

/// Element-wise actual - forecast.
inline std::vector<double> compute_residuals(std::span<const double> forecast, std::span<const double> actual) {
    if (forecast.size() != actual.size()) {
        throw ValidationError("forecast and actual lengths differ");
    }
    std::vector<double> out(forecast.size());
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        out[i] = actual[i] - forecast[i];
    }
    return out;
}

/// Residuals of two aligned series; timestamps must match row by row.
inline std::vector<double> compute_residuals(const DaySeries& forecast_series, const DaySeries& actual_series) {
    if (forecast_series.timestamps != actual_series.timestamps) {
        throw ValidationError("timestamps of forecast and actual series do not match");
    }
    if (!actual_series.has_actual()) {
        throw ValidationError("series has no actual demand");
    }
    return compute_residuals(forecast_series.forecast, actual_series.actual);
}

inline std::vector<double> compute_residuals(const DaySeries& series) { return compute_residuals(series, series); }

/// Days of `history` that lie outside the ISO week of `target_day`.
inline std::vector<std::size_t> eligible_days(const DaySeries& history, DayId target_day, const TimeGrid& grid) {
    const IsoWeek excluded = iso_week(target_day);
    std::vector<std::size_t> out;
    for (std::size_t d = 0; d < history.day_count(grid); ++d) {
        if (!(iso_week(history.day_id(d, grid)) == excluded)) {
            out.push_back(d);
        }
    }
    return out;
}

/// Draws N whole-day residual trajectories uniformly from the days of
/// `history` outside the target's ISO week. Without replacement by default;
/// deterministic for a fixed seed.
inline ResidualSampleSet sample_training_set(const DaySeries& history, DayId target_day, std::size_t n,
                                             std::uint64_t seed, const TimeGrid& grid,
                                             bool with_replacement = false) {
    if (!history.has_actual()) {
        throw ValidationError("history has no actual demand");
    }
    if (n < 1) {
        throw ValidationError("sample_count must be at least 1");
    }
    std::vector<std::size_t> pool = eligible_days(history, target_day, grid);
    if (pool.empty() || (!with_replacement && pool.size() < n)) {
        throw ValidationError("insufficient eligible days: " + std::to_string(pool.size()) + " available outside week of " +
                              format_day(target_day) + ", " + std::to_string(n) + " required");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen(n);
    if (with_replacement) {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        for (auto& c : chosen) {
            c = pool[pick(rng)];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
            chosen[i] = pool[i];
        }
    }
    ResidualSampleSet out;
    out.periods = grid.periods;
    out.seed = seed;
    out.target_day = target_day;
    out.xi_hat.reserve(n * grid.periods);
    for (const std::size_t d : chosen) {
        const std::size_t first = d * grid.periods;
        for (std::size_t t = 0; t < grid.periods; ++t) {
            out.xi_hat.push_back(history.actual[first + t] - history.forecast[first + t]);
        }
        out.source_days.push_back(history.day_id(d, grid));
    }
    return out;
}

} // namespace drsched
