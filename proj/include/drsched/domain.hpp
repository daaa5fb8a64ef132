#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "drsched/calendar.hpp"
#include "drsched/units.hpp"

namespace drsched {

/// Raised when a value violates a documented invariant. The message names the
/// violated invariant, e.g. "q_init below storage_min".
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TimeGrid {
    std::size_t periods = 24;
    Hours step{1.0};

    [[nodiscard]] double dt() const { return step.value(); }
};

inline TimeGrid validate_grid(const TimeGrid& grid) {
    if (grid.periods < 1) {
        throw ValidationError("periods must be at least 1");
    }
    if (!(grid.step.value() > 0.0) || !std::isfinite(grid.step.value())) {
        throw ValidationError("step must be positive");
    }
    return grid;
}

/// Physical and economic parameters of the electric boiler, its storage tank
/// and the backup gas boiler.
struct BoilerParams {
    MegaWatt p_min{0.0};
    MegaWatt p_max{10.0};
    MegaWattHour storage_min{0.0};
    MegaWattHour storage_max{60.0};
    MegaWattHour q_init{20.0};
    double eta_p2h = 0.99;  // power-to-heat conversion, (0, 1]
    double eta_loss = 0.01; // standing loss per period, [0, 1)
    MegaWatt gas_capacity{1.0};
    EuroPerMWh gas_price{50.0};
    EuroPerMWh spill_price{100.0};
    /// When set, the schedule must end the day with at least this much stored.
    std::optional<MegaWattHour> terminal_storage_min;
};

/// Returns the parameters unchanged when every invariant holds; otherwise
/// throws ValidationError naming the first violated invariant.
inline BoilerParams validate_params(const BoilerParams& raw) {
    const auto finite = [](double v) { return std::isfinite(v); };
    const struct {
        const char* name;
        double value;
    } fields[] = {
        {"p_min", raw.p_min.value()},
        {"p_max", raw.p_max.value()},
        {"storage_min", raw.storage_min.value()},
        {"storage_max", raw.storage_max.value()},
        {"q_init", raw.q_init.value()},
        {"eta_p2h", raw.eta_p2h},
        {"eta_loss", raw.eta_loss},
        {"gas_capacity", raw.gas_capacity.value()},
        {"gas_price", raw.gas_price.value()},
        {"spill_price", raw.spill_price.value()},
    };
    for (const auto& f : fields) {
        if (!finite(f.value)) {
            throw ValidationError(std::string(f.name) + " is not finite");
        }
    }
    if (raw.p_min.value() < 0.0) {
        throw ValidationError("p_min is negative");
    }
    if (raw.p_max < raw.p_min) {
        throw ValidationError("p_max below p_min");
    }
    if (raw.storage_max < raw.storage_min) {
        throw ValidationError("storage_max below storage_min");
    }
    if (raw.q_init < raw.storage_min) {
        throw ValidationError("q_init below storage_min");
    }
    if (raw.q_init > raw.storage_max) {
        throw ValidationError("q_init above storage_max");
    }
    if (!(raw.eta_p2h > 0.0 && raw.eta_p2h <= 1.0)) {
        throw ValidationError("eta_p2h outside (0, 1]");
    }
    if (!(raw.eta_loss >= 0.0 && raw.eta_loss < 1.0)) {
        throw ValidationError("eta_loss outside [0, 1)");
    }
    if (raw.gas_capacity.value() < 0.0) {
        throw ValidationError("gas_capacity is negative");
    }
    if (raw.gas_price.value() < 0.0) {
        throw ValidationError("gas_price is negative");
    }
    if (raw.spill_price.value() < 0.0) {
        throw ValidationError("spill_price is negative");
    }
    if (raw.terminal_storage_min) {
        const double v = raw.terminal_storage_min->value();
        if (!finite(v) || v < raw.storage_min.value() || v > raw.storage_max.value()) {
            throw ValidationError("terminal_storage_min outside [storage_min, storage_max]");
        }
    }
    return raw;
}

/// Wasserstein ball radius and CVaR risk level. alpha is the tolerated
/// shortage probability; the constraint holds with confidence 1 - alpha.
struct AmbiguityConfig {
    double theta = 0.0; // MWh/h, same units as the residuals
    double alpha = 0.1;
    std::size_t sample_count = 100;
};

inline AmbiguityConfig validate_ambiguity(const AmbiguityConfig& a) {
    if (!std::isfinite(a.theta) || a.theta < 0.0) {
        throw ValidationError("theta must be >= 0");
    }
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) {
        throw ValidationError("alpha outside (0, 1)");
    }
    if (a.sample_count < 1) {
        throw ValidationError("sample_count must be at least 1");
    }
    return a;
}

/// Per-period dual diagnostics of a worst-case CVaR constraint.
struct PeriodDiagnostics {
    double tau = 0.0;
    double lambda = 0.0;
    double mean_slack = 0.0;
    double binding_fraction = 0.0;
};

/// Hourly forecast, realized demand and day-ahead price over one or more
/// consecutive days. Heat values are energy per period (MWh per step).
struct DaySeries {
    std::vector<Timestamp> timestamps;
    std::vector<double> forecast;
    std::vector<double> actual; // empty when realizations are unavailable
    std::vector<double> price;  // EUR/MWh

    [[nodiscard]] bool has_actual() const { return !actual.empty(); }
    [[nodiscard]] std::size_t size() const { return timestamps.size(); }
    [[nodiscard]] std::size_t day_count(const TimeGrid& grid) const { return size() / grid.periods; }

    [[nodiscard]] DayId day_id(std::size_t day, const TimeGrid& grid) const {
        return day_of(timestamps.at(day * grid.periods));
    }

    [[nodiscard]] std::optional<std::size_t> find_day(DayId id, const TimeGrid& grid) const {
        for (std::size_t d = 0; d < day_count(grid); ++d) {
            if (day_id(d, grid) == id) {
                return d;
            }
        }
        return std::nullopt;
    }

    /// Copy of day `day` (periods consecutive entries).
    [[nodiscard]] DaySeries day(std::size_t day, const TimeGrid& grid) const {
        if (day >= day_count(grid)) {
            throw std::out_of_range("day index " + std::to_string(day) + " out of range");
        }
        const auto first = static_cast<std::ptrdiff_t>(day * grid.periods);
        const auto last = first + static_cast<std::ptrdiff_t>(grid.periods);
        DaySeries out;
        out.timestamps.assign(timestamps.begin() + first, timestamps.begin() + last);
        out.forecast.assign(forecast.begin() + first, forecast.begin() + last);
        if (has_actual()) {
            out.actual.assign(actual.begin() + first, actual.begin() + last);
        }
        out.price.assign(price.begin() + first, price.begin() + last);
        return out;
    }
};

inline const DaySeries& validate_series(const DaySeries& s, const TimeGrid& grid) {
    const std::size_t n = s.timestamps.size();
    if (s.forecast.size() != n || s.price.size() != n || (s.has_actual() && s.actual.size() != n)) {
        throw ValidationError("series lengths differ");
    }
    if (n == 0 || n % grid.periods != 0) {
        throw ValidationError("series length is not a multiple of periods");
    }
    const auto step = std::chrono::seconds(static_cast<long long>(std::llround(grid.dt() * 3600.0)));
    for (std::size_t i = 1; i < n; ++i) {
        if (s.timestamps[i] <= s.timestamps[i - 1]) {
            throw ValidationError("timestamps not strictly increasing at row " + std::to_string(i));
        }
        if (s.timestamps[i] - s.timestamps[i - 1] != step) {
            throw ValidationError("timestamps not evenly spaced at row " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.forecast[i]) || s.forecast[i] < 0.0) {
            throw ValidationError("forecast negative or not finite at row " + std::to_string(i));
        }
        if (s.has_actual() && (!std::isfinite(s.actual[i]) || s.actual[i] < 0.0)) {
            throw ValidationError("actual negative or not finite at row " + std::to_string(i));
        }
        if (!std::isfinite(s.price[i])) {
            throw ValidationError("price not finite at row " + std::to_string(i));
        }
    }
    return s;
}

} // namespace drsched
