#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "drsched/rollout.hpp"
#include "drsched/synth.hpp"

namespace drsched {
namespace {

BoilerParams lossless() {
    BoilerParams p;
    p.eta_loss = 0.0;
    p.eta_p2h = 1.0;
    p.q_init = MegaWattHour(0.0);
    return p;
}

TEST(Rollout, PerfectForecastHasNoRecourse) {
    const BoilerParams p = lossless();
    const TimeGrid grid{6};
    const std::vector<double> mu{2.0, 3.0, 4.0, 3.0, 2.0, 1.0};
    const std::vector<double> c{30.0, 20.0, 40.0, 10.0, 50.0, 30.0};
    const Schedule s = schedule_deterministic(mu, c, p, grid);
    const RolloutResult r = simulate_day(s, c, mu, p, grid);
    for (std::size_t t = 0; t < 6; ++t) {
        EXPECT_NEAR(r.gas[t], 0.0, 1e-6);
        EXPECT_NEAR(r.unmet[t], 0.0, 1e-6);
        EXPECT_NEAR(r.spill[t], 0.0, 1e-6);
    }
    EXPECT_NEAR(r.electricity_cost, s.objective, 1e-6);
}

TEST(Rollout, ShortfallSplitsIntoGasAndUnmet) {
    BoilerParams p = lossless();
    p.q_init = MegaWattHour(2.0);
    const TimeGrid grid{1};
    const std::vector<double> p_da{0.0};
    const std::vector<double> c{30.0};
    const std::vector<double> demand{3.5};
    const RolloutResult r = simulate_day(p_da, c, demand, p, grid);
    EXPECT_DOUBLE_EQ(r.delivered[0], 2.0);
    EXPECT_DOUBLE_EQ(r.gas[0], 1.0);
    EXPECT_DOUBLE_EQ(r.unmet[0], 0.5);
    EXPECT_DOUBLE_EQ(r.gas_cost, 50.0);
    EXPECT_DOUBLE_EQ(r.avg_violation, 0.5);
    EXPECT_EQ(r.violation_hours, 1u);
}

TEST(Rollout, OverfillSpills) {
    BoilerParams p = lossless();
    p.q_init = MegaWattHour(58.0);
    const TimeGrid grid{1};
    const std::vector<double> p_da{5.0};
    const std::vector<double> c{0.0};
    const std::vector<double> demand{1.0};
    const RolloutResult r = simulate_day(p_da, c, demand, p, grid);
    EXPECT_DOUBLE_EQ(r.spill[0], 2.0);
    EXPECT_DOUBLE_EQ(r.spill_cost, 200.0);
    EXPECT_DOUBLE_EQ(r.storage[0], 60.0);
}

TEST(Rollout, StorageFloorLimitsDelivery) {
    BoilerParams p = lossless();
    p.storage_min = MegaWattHour(5.0);
    p.q_init = MegaWattHour(6.0);
    const TimeGrid grid{1};
    const RolloutResult r =
        simulate_day(std::vector<double>{0.0}, std::vector<double>{1.0}, std::vector<double>{3.0}, p, grid);
    EXPECT_DOUBLE_EQ(r.delivered[0], 1.0);
    EXPECT_DOUBLE_EQ(r.gas[0], 1.0);
    EXPECT_DOUBLE_EQ(r.unmet[0], 1.0);
}

TEST(Rollout, DimensionMismatch) {
    const TimeGrid grid{2};
    EXPECT_THROW(simulate_day(std::vector<double>{1.0}, std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 1.0},
                              BoilerParams{}, grid),
                 ValidationError);
}

TEST(Rollout, ConservationOnRandomHours) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t hours = 0;
    for (int day = 0; day < 50; ++day) {
        BoilerParams p;
        p.eta_p2h = 0.8 + 0.2 * u(rng);
        p.eta_loss = 0.05 * u(rng);
        p.storage_min = MegaWattHour(5.0 * u(rng));
        p.storage_max = MegaWattHour(p.storage_min.value() + 5.0 + 30.0 * u(rng));
        p.q_init = MegaWattHour(p.storage_min.value() + (p.storage_max - p.storage_min).value() * u(rng));
        p.gas_capacity = MegaWatt(2.0 * u(rng));
        const TimeGrid grid{20, Hours(0.5 + u(rng))};
        std::vector<double> p_da(20), c(20), demand(20);
        for (std::size_t t = 0; t < 20; ++t) {
            p_da[t] = 10.0 * u(rng);
            c[t] = 60.0 * u(rng);
            demand[t] = 8.0 * u(rng);
        }
        const RolloutResult r = simulate_day(p_da, c, demand, p, grid);
        double prev = p.q_init.value();
        for (std::size_t t = 0; t < 20; ++t, ++hours) {
            EXPECT_NEAR(demand[t], r.delivered[t] + r.gas[t] + r.unmet[t], 1e-9);
            const double inflow = p.eta_p2h * p_da[t] * grid.dt();
            EXPECT_NEAR(r.storage[t] - prev, inflow - r.delivered[t] - r.spill[t] - p.eta_loss * prev, 1e-9);
            EXPECT_LE(r.gas[t], p.gas_capacity.value() * grid.dt() + 1e-12);
            EXPECT_GE(r.delivered[t], 0.0);
            EXPECT_GE(r.gas[t], 0.0);
            EXPECT_GE(r.unmet[t], 0.0);
            EXPECT_GE(r.spill[t], 0.0);
            EXPECT_LE(r.storage[t], p.storage_max.value() + 1e-12);
            if (demand[t] - r.delivered[t] <= 0.0) {
                EXPECT_EQ(r.gas[t], 0.0);
            }
            prev = r.storage[t];
        }
    }
    EXPECT_EQ(hours, 1000u);
}

TEST(Rollout, DeterministicShortfallAccumulatesLate) {
    SynthConfig cfg;
    cfg.days = 120;
    cfg.noise_ar1_rho = 0.97;
    cfg.noise_sigma = 0.8;
    const TimeGrid grid;
    const DaySeries data = synth_generate(cfg, grid);
    BoilerParams p;
    p.q_init = MegaWattHour(10.0);
    std::size_t positive = 0;
    std::size_t late = 0;
    for (std::size_t d = 0; d < data.day_count(grid); ++d) {
        const DaySeries day = data.day(d, grid);
        double bias = 0.0;
        for (std::size_t t = 0; t < grid.periods; ++t) {
            bias += day.actual[t] - day.forecast[t];
        }
        if (bias <= 0.0) {
            continue;
        }
        ++positive;
        const RolloutResult r = simulate_day(schedule_deterministic(day.forecast, day.price, p, grid), day.price,
                                             day.actual, p, grid);
        double first = 0.0;
        double last = 0.0;
        for (std::size_t t = 0; t < 8; ++t) {
            first += r.unmet[t];
            last += r.unmet[grid.periods - 8 + t];
        }
        late += last >= first ? 1 : 0;
    }
    ASSERT_GT(positive, 30u);
    EXPECT_GE(static_cast<double>(late), 0.8 * static_cast<double>(positive)) << late << " of " << positive;
}

DaySeries two_days(const std::vector<double>& day_demand) {
    DaySeries s;
    const DayId first = std::chrono::sys_days{std::chrono::year{2025} / 1 / 6};
    for (int d = 0; d < 2; ++d) {
        for (std::size_t t = 0; t < day_demand.size(); ++t) {
            s.timestamps.push_back(Timestamp(first + std::chrono::days{d}) + std::chrono::hours{static_cast<int>(t)});
            s.forecast.push_back(day_demand[t]);
            s.actual.push_back(day_demand[t]);
            s.price.push_back(20.0 + static_cast<double>(t));
        }
    }
    return s;
}

TEST(ChainDays, SteadyStateRepeats) {
    const BoilerParams p = lossless();
    const TimeGrid grid{4};
    const DaySeries s = two_days({1.0, 2.0, 3.0, 2.0});
    const DaySeries d0 = s.day(0, grid);
    const Schedule sched = schedule_deterministic(d0.forecast, d0.price, p, grid);
    const auto results = chain_days({sched, sched}, s, p, grid);
    ASSERT_EQ(results.size(), 2u);
    for (std::size_t t = 0; t < 4; ++t) {
        EXPECT_NEAR(results[0].storage[t], results[1].storage[t], 1e-9);
    }
    EXPECT_NEAR(results[0].total_cost, results[1].total_cost, 1e-9);
}

TEST(ChainDays, CarriesStorage) {
    BoilerParams p = lossless();
    const TimeGrid grid{2};
    const DaySeries s = two_days({1.0, 1.0});
    Schedule buy;
    buy.p_da = {2.5, 2.5};
    Schedule idle;
    idle.p_da = {0.0, 0.0};
    const auto results = chain_days({buy, idle}, s, p, grid);
    EXPECT_DOUBLE_EQ(results[0].storage.back(), 3.0);
    EXPECT_DOUBLE_EQ(results[1].delivered[0], 1.0);
    EXPECT_DOUBLE_EQ(results[1].storage[0], 2.0);
    EXPECT_THROW(chain_days({buy}, s, p, grid), ValidationError);
}

TEST(Rollout, CsvAndJson) {
    RolloutResult r;
    r.storage = {1.5, 0.0};
    r.delivered = {1.0, 1.5};
    r.gas = {0.0, 0.25};
    r.spill = {0.0, 0.0};
    r.unmet = {0.0, 0.125};
    r.total_cost = 12.5;
    std::ostringstream os;
    write_rollout_csv(os, r);
    EXPECT_EQ(os.str(), "hour,storage_mwh,delivered_mwh,gas_mwh,spill_mwh,unmet_mwh\n"
                        "0,1.5,1,0,0,0\n"
                        "1,0,1.5,0.25,0,0.125\n");
    EXPECT_EQ(rollout_totals_json(r)["total_cost"], 12.5);
}

} // namespace
} // namespace drsched
