#pragma once

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "drsched/domain.hpp"
#include "drsched/schedulers.hpp"

namespace drsched {

/// Realized trajectories of one operating day. Per-hour quantities are
/// energies (MWh per period).
struct RolloutResult {
    std::vector<double> storage;
    std::vector<double> delivered;
    std::vector<double> gas;
    std::vector<double> spill;
    std::vector<double> unmet;

    double electricity_cost = 0.0;
    double gas_cost = 0.0;
    double spill_cost = 0.0;
    double total_cost = 0.0;
    double avg_violation = 0.0; // MW, mean of unmet / dt
    std::size_t violation_hours = 0;

    [[nodiscard]] std::size_t periods() const { return storage.size(); }
    [[nodiscard]] double final_storage(double fallback) const { return storage.empty() ? fallback : storage.back(); }
};

/// Replays one day of purchases `p_da` against realized demand. Storage
/// serves demand down to storage_min, gas covers the rest up to its capacity,
/// whatever remains is unmet. Heat above storage_max after delivery spills.
inline RolloutResult simulate_day(std::span<const double> p_da, std::span<const double> prices,
                                  std::span<const double> actual_demand, const BoilerParams& params,
                                  const TimeGrid& grid) {
    validate_grid(grid);
    validate_params(params);
    const std::size_t n = grid.periods;
    if (p_da.size() != n || prices.size() != n || actual_demand.size() != n) {
        throw ValidationError(fmt::format("rollout expects {} periods, got schedule {}, prices {}, demand {}", n,
                                          p_da.size(), prices.size(), actual_demand.size()));
    }
    const double dt = grid.dt();
    const double keep = 1.0 - params.eta_loss;
    const double gas_cap = (params.gas_capacity * grid.step).value();
    const double floor = params.storage_min.value();
    const double ceiling = params.storage_max.value();

    RolloutResult r;
    r.storage.resize(n);
    r.delivered.resize(n);
    r.gas.resize(n);
    r.spill.resize(n);
    r.unmet.resize(n);
    double prev = params.q_init.value();
    for (std::size_t t = 0; t < n; ++t) {
        const double demand = actual_demand[t];
        if (!(demand >= 0.0)) {
            throw ValidationError(fmt::format("actual demand negative or not finite at period {}", t));
        }
        const double inflow = params.eta_p2h * p_da[t] * dt;
        const double available = keep * prev + inflow;
        // Standing losses can leave the tank under its floor; nothing is drawn then.
        const double delivered = std::max(0.0, std::min(available - floor, demand));
        const double shortfall = demand - delivered;
        const double gas = std::min(shortfall, gas_cap);
        double level = available - delivered;
        double spill = 0.0;
        if (level > ceiling) {
            spill = level - ceiling;
            level = ceiling;
        }
        r.storage[t] = level;
        r.delivered[t] = delivered;
        r.gas[t] = gas;
        r.spill[t] = spill;
        r.unmet[t] = shortfall - gas;
        prev = level;

        r.electricity_cost += prices[t] * p_da[t] * dt;
        r.gas_cost += params.gas_price.value() * gas;
        r.spill_cost += params.spill_price.value() * spill;
        r.avg_violation += r.unmet[t] / dt;
        r.violation_hours += r.unmet[t] > 1e-9 ? 1 : 0;
    }
    r.avg_violation /= static_cast<double>(n);
    r.total_cost = r.electricity_cost + r.gas_cost + r.spill_cost;
    return r;
}

inline RolloutResult simulate_day(const Schedule& schedule, std::span<const double> prices,
                                  std::span<const double> actual_demand, const BoilerParams& params,
                                  const TimeGrid& grid) {
    return simulate_day(schedule.p_da, prices, actual_demand, params, grid);
}

/// Rolls several days in sequence; the realized storage at the end of day d
/// is the starting storage of day d + 1. `params.q_init` seeds day 0.
inline std::vector<RolloutResult> chain_days(const std::vector<Schedule>& schedules, const DaySeries& realized,
                                             const BoilerParams& params, const TimeGrid& grid) {
    if (!realized.has_actual()) {
        throw ValidationError("series has no actual demand");
    }
    if (schedules.size() != realized.day_count(grid)) {
        throw ValidationError(fmt::format("{} schedules for {} days", schedules.size(), realized.day_count(grid)));
    }
    std::vector<RolloutResult> out;
    BoilerParams day_params = params;
    for (std::size_t d = 0; d < schedules.size(); ++d) {
        const DaySeries day = realized.day(d, grid);
        out.push_back(simulate_day(schedules[d], day.price, day.actual, day_params, grid));
        // Clamp into the valid range so a loss-driven dip below the floor
        // does not fail validation of the next day.
        day_params.q_init = MegaWattHour(std::clamp(out.back().storage.back(), params.storage_min.value(),
                                                    params.storage_max.value()));
    }
    return out;
}

inline void write_rollout_csv(std::ostream& os, const RolloutResult& r) {
    os << "hour,storage_mwh,delivered_mwh,gas_mwh,spill_mwh,unmet_mwh\n";
    for (std::size_t t = 0; t < r.periods(); ++t) {
        os << fmt::format("{},{},{},{},{},{}\n", t, r.storage[t], r.delivered[t], r.gas[t], r.spill[t], r.unmet[t]);
    }
}

inline nlohmann::ordered_json rollout_totals_json(const RolloutResult& r) {
    nlohmann::ordered_json j;
    j["electricity_cost"] = r.electricity_cost;
    j["gas_cost"] = r.gas_cost;
    j["spill_cost"] = r.spill_cost;
    j["total_cost"] = r.total_cost;
    j["avg_violation"] = r.avg_violation;
    j["violation_hours"] = r.violation_hours;
    return j;
}

} // namespace drsched
