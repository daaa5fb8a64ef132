#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "drsched/schedulers.hpp"

namespace drsched {
namespace {

struct Instance {
    TimeGrid grid{4};
    BoilerParams params;
    std::vector<double> forecast;
    std::vector<double> prices;
    ResidualSampleSet samples;
};

Instance random_instance(std::uint64_t seed, std::size_t n = 10) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> xi(-2.0, 2.0);
    std::uniform_real_distribution<double> mu(3.0, 6.0);
    std::uniform_real_distribution<double> price(10.0, 60.0);
    Instance in;
    in.params.q_init = MegaWattHour(5.0);
    for (std::size_t t = 0; t < in.grid.periods; ++t) {
        in.forecast.push_back(mu(rng));
        in.prices.push_back(price(rng));
    }
    std::vector<std::vector<double>> rows(n, std::vector<double>(in.grid.periods));
    for (auto& r : rows) {
        for (auto& v : r) {
            v = xi(rng);
        }
    }
    in.samples = ResidualSampleSet::from_rows(rows);
    return in;
}

bool rel_close(double a, double b, double tol = 1e-6) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// Tail mean by brute force: inf over t of t + mean((x - t)_+) / alpha, with
// the infimum attained at one of the samples.
double cvar_oracle(const std::vector<double>& xs, double alpha) {
    double best = INFINITY;
    for (const double t : xs) {
        double tail = 0.0;
        for (const double x : xs) {
            tail += std::max(x - t, 0.0);
        }
        best = std::min(best, t + tail / (alpha * static_cast<double>(xs.size())));
    }
    return best;
}

void expect_physical(const Schedule& s, const BoilerParams& p, const TimeGrid& g) {
    double prev = p.q_init.value();
    for (std::size_t t = 0; t < s.periods(); ++t) {
        EXPECT_GE(s.p_da[t], p.p_min.value() - 1e-9);
        EXPECT_LE(s.p_da[t], p.p_max.value() + 1e-9);
        EXPECT_GE(s.storage_plan[t], p.storage_min.value() - 1e-9);
        EXPECT_LE(s.storage_plan[t], p.storage_max.value() + 1e-9);
        EXPECT_GE(s.heat_out[t], -1e-9);
        const double expected = (1.0 - p.eta_loss) * prev + p.eta_p2h * s.p_da[t] * g.dt() - s.heat_out[t];
        EXPECT_NEAR(s.storage_plan[t], expected, 1e-6);
        prev = s.storage_plan[t];
    }
}

TEST(BaseModel, ConstructionCounts) {
    const TimeGrid grid{2};
    const std::vector<double> mu{1.0, 2.0};
    const std::vector<double> c{10.0, 20.0};
    const BaseModel m = build_base_model(mu, c, BoilerParams{}, grid);
    EXPECT_EQ(m.problem.num_variables(), 6u);
    EXPECT_EQ(m.problem.num_constraints(), 2u);
    EXPECT_EQ(m.problem.variable(m.power[1]).cost, 20.0);
}

TEST(BaseModel, IdentityEfficiencies) {
    BoilerParams p;
    p.eta_loss = 0.0;
    p.eta_p2h = 1.0;
    p.q_init = MegaWattHour(0.0);
    const TimeGrid grid{3};
    const std::vector<double> mu{1.0, 2.0, 3.0};
    const std::vector<double> c{5.0, 1.0, 7.0};
    const Schedule s = schedule_deterministic(mu, c, p, grid);
    expect_physical(s, p, grid);
    // Hour 1 must be bought on the spot; hours 2 and 3 at the cheap middle price.
    EXPECT_NEAR(s.p_da[0], 1.0, 1e-6);
    EXPECT_NEAR(s.p_da[1], 5.0, 1e-6);
    EXPECT_NEAR(s.p_da[2], 0.0, 1e-6);
    EXPECT_NEAR(s.storage_plan[1], 3.0, 1e-6);
    EXPECT_NEAR(s.objective, 5.0 + 5.0, 1e-6);
}

TEST(Deterministic, ConstantDemandFlatPrice) {
    BoilerParams p;
    p.eta_loss = 0.0;
    p.eta_p2h = 1.0;
    p.q_init = MegaWattHour(0.0);
    const TimeGrid grid{24};
    const std::vector<double> mu(24, 5.0);
    const std::vector<double> flat(24, 40.0);
    const Schedule s = schedule_deterministic(mu, flat, p, grid);
    EXPECT_NEAR(s.objective, 5.0 * 40.0 * 24, 1e-6);
    // Falling prices make the just-in-time purchase the unique optimum.
    std::vector<double> falling(24);
    for (std::size_t t = 0; t < 24; ++t) {
        falling[t] = 50.0 - static_cast<double>(t);
    }
    const Schedule f = schedule_deterministic(mu, falling, p, grid);
    for (std::size_t t = 0; t < 24; ++t) {
        EXPECT_NEAR(f.p_da[t], 5.0, 1e-6);
    }
}

TEST(Deterministic, ZeroDemandAndZeroPrices) {
    BoilerParams p;
    const TimeGrid grid{4};
    const std::vector<double> zero(4, 0.0);
    const std::vector<double> c{30.0, 20.0, 10.0, 40.0};
    const Schedule s = schedule_deterministic(zero, c, p, grid);
    for (const double v : s.p_da) {
        EXPECT_NEAR(v, 0.0, 1e-7);
    }
    EXPECT_NEAR(s.objective, 0.0, 1e-6);
    const std::vector<double> mu{3.0, 4.0, 5.0, 6.0};
    EXPECT_NEAR(schedule_deterministic(mu, zero, p, grid).objective, 0.0, 1e-6);
}

TEST(Deterministic, OverCapacityIsInfeasible) {
    BoilerParams p;
    p.q_init = MegaWattHour(0.0);
    const TimeGrid grid{3};
    const std::vector<double> mu(3, 20.0);
    const std::vector<double> c(3, 30.0);
    try {
        (void)schedule_deterministic(mu, c, p, grid);
        FAIL() << "expected SchedulingError";
    } catch (const SchedulingError& e) {
        EXPECT_EQ(e.status(), lp::Status::Infeasible);
        ASSERT_TRUE(e.period().has_value());
        EXPECT_EQ(*e.period(), 0u);
    }
}

TEST(Deterministic, InputValidation) {
    const TimeGrid grid{2};
    const std::vector<double> ok{1.0, 1.0};
    EXPECT_THROW((void)schedule_deterministic(std::vector<double>{1.0}, ok, BoilerParams{}, grid), ValidationError);
    EXPECT_THROW((void)schedule_deterministic(std::vector<double>{1.0, -1.0}, ok, BoilerParams{}, grid),
                 ValidationError);
}

TEST(CvarConstraint, ZeroSamplesNeedRadiusOverAlpha) {
    lp::Problem p;
    const lp::VarId h = p.add_variable(0.0, 100.0, "H");
    p.set_cost(h, 1.0);
    const double mu = 4.0;
    const AffinePiece piece{{{h, -1.0}}, 1.0, -mu};
    const std::vector<double> zeros(10, 0.0);
    const CvarHandles c = build_wc_cvar_constraint(p, std::span(&piece, 1), zeros, 0.05, 0.1);
    const lp::Solution sol = lp::default_solver().solve(p);
    ASSERT_TRUE(sol.optimal());
    EXPECT_NEAR(sol.value(h), mu + 0.5, 1e-6);
    EXPECT_NEAR(sol.value(c.lambda), 1.0, 1e-6);
}

TEST(CvarConstraint, TwoPiecesBindDualNorm) {
    lp::Problem p;
    const lp::VarId x = p.add_variable(-100.0, 100.0, "x");
    const lp::VarId y = p.add_variable(-100.0, 100.0, "y");
    p.set_cost(x, 1.0);
    p.set_cost(y, -1.0);
    // g = max(xi - x, -xi + y): requires x above the upper tail, y below the lower.
    const std::vector<AffinePiece> pieces{{{{x, -1.0}}, 1.0, 0.0}, {{{y, 1.0}}, -1.0, 0.0}};
    const std::vector<double> xs{-1.0, -0.5, 0.0, 0.5, 1.0};
    const CvarHandles c = build_wc_cvar_constraint(p, pieces, xs, 0.02, 0.2);
    const lp::Solution sol = lp::default_solver().solve(p);
    ASSERT_TRUE(sol.optimal());
    EXPECT_NEAR(sol.value(c.lambda), 1.0, 1e-6);
    EXPECT_GE(sol.value(x), 1.0);
    EXPECT_LE(sol.value(y), -1.0);
    EXPECT_THROW(build_wc_cvar_constraint(p, {}, xs, 0.0, 0.1), ValidationError);
    EXPECT_THROW(build_wc_cvar_constraint(p, pieces, {}, 0.0, 0.1), ValidationError);
}

TEST(Drcc, MatchesInflatedDeterministic) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance in = random_instance(seed);
        for (const double theta : {0.0, 0.01, 0.05}) {
            const AmbiguityConfig amb{theta, 0.1, in.samples.size()};
            const Schedule s = schedule_drcc(in.forecast, in.prices, in.params, in.grid, in.samples, amb);
            std::vector<double> inflated(in.forecast);
            for (std::size_t t = 0; t < in.grid.periods; ++t) {
                inflated[t] += cvar_oracle(in.samples.period_samples(t), 0.1) + theta / 0.1;
                EXPECT_NEAR(s.heat_out[t], inflated[t], 1e-6) << "seed " << seed << " t " << t;
                EXPECT_NEAR(s.diagnostics[t].lambda, 1.0, 1e-6);
                const auto& d = s.diagnostics[t];
                EXPECT_LE(d.lambda * theta + d.mean_slack, 0.1 * d.tau + 1e-6);
            }
            const Schedule ref = schedule_deterministic(inflated, in.prices, in.params, in.grid, lp::DenseSimplex{});
            EXPECT_TRUE(rel_close(s.objective, ref.objective)) << s.objective << " vs " << ref.objective;
            expect_physical(s, in.params, in.grid);
            EXPECT_EQ(s.policy, theta == 0.0 ? "saa" : "drcc");
        }
    }
}

TEST(Drcc, ZeroResidualsCollapseToDeterministic) {
    Instance in = random_instance(3);
    std::fill(in.samples.xi_hat.begin(), in.samples.xi_hat.end(), 0.0);
    const Schedule s = schedule_drcc(in.forecast, in.prices, in.params, in.grid, in.samples, {0.0, 0.1, 10});
    const Schedule d = schedule_deterministic(in.forecast, in.prices, in.params, in.grid);
    EXPECT_TRUE(rel_close(s.objective, d.objective));
    for (std::size_t t = 0; t < in.grid.periods; ++t) {
        EXPECT_NEAR(s.p_da[t], d.p_da[t], 1e-6);
        EXPECT_NEAR(s.heat_out[t], d.heat_out[t], 1e-6);
    }
}

TEST(Drcc, MonotoneInThetaAndAlpha) {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const Instance in = random_instance(seed);
        double prev = -INFINITY;
        for (const double theta : {0.0, 0.005, 0.01, 0.05, 0.1}) {
            const double obj =
                schedule_drcc(in.forecast, in.prices, in.params, in.grid, in.samples, {theta, 0.1, 10}).objective;
            EXPECT_GE(obj, prev - 1e-6);
            prev = obj;
        }
        prev = INFINITY;
        for (const double alpha : {0.05, 0.1, 0.2, 0.5, 0.9}) {
            const double obj =
                schedule_drcc(in.forecast, in.prices, in.params, in.grid, in.samples, {0.01, alpha, 10}).objective;
            EXPECT_LE(obj, prev + 1e-6);
            prev = obj;
        }
    }
}

TEST(Drcc, SampleShapeMismatchRejected) {
    const Instance in = random_instance(1);
    ResidualSampleSet bad = ResidualSampleSet::from_rows({{0.0, 0.0}});
    EXPECT_THROW((void)schedule_drcc(in.forecast, in.prices, in.params, in.grid, bad, {}), ValidationError);
    EXPECT_THROW((void)schedule_drcc(in.forecast, in.prices, in.params, in.grid, in.samples, {-1.0, 0.1, 10}),
                 ValidationError);
}

TEST(Drcc, InfeasibleMarginNamesPeriod) {
    Instance in = random_instance(5);
    in.params.q_init = MegaWattHour(0.0);
    in.forecast = {3.0, 3.0, 9.5, 3.0};
    try {
        (void)schedule_drcc(in.forecast, in.prices, in.params, in.grid, in.samples, {0.5, 0.1, 10});
        FAIL() << "expected SchedulingError";
    } catch (const SchedulingError& e) {
        ASSERT_TRUE(e.period().has_value());
        EXPECT_EQ(*e.period(), 2u);
    }
}

TEST(TwoStage, ProhibitiveGasMatchesSingleStage) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance in = random_instance(seed);
        const double ceiling = *std::max_element(in.prices.begin(), in.prices.end());
        for (const double theta : {0.0, 0.05}) {
            const AmbiguityConfig amb{theta, 0.1, 10};
            const Schedule one = schedule_drcc(in.forecast, in.prices, in.params, in.grid, in.samples, amb);
            const Schedule two = schedule_two_stage(in.forecast, in.prices, in.params, in.grid, in.samples, amb,
                                                    EuroPerMWh(ceiling * 100.0));
            EXPECT_TRUE(rel_close(two.objective, one.objective)) << two.objective << " vs " << one.objective;
            for (const double y : two.recourse_gain) {
                EXPECT_NEAR(y, 0.0, 1e-6);
            }
        }
    }
}

TEST(TwoStage, FreeGasUsesClippedMargin) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Instance in = random_instance(seed);
        in.params.gas_capacity = MegaWatt(10.0);
        for (const double theta : {0.0, 0.05}) {
            const Schedule two = schedule_two_stage(in.forecast, in.prices, in.params, in.grid, in.samples,
                                                    {theta, 0.1, 10}, EuroPerMWh(0.0));
            std::vector<double> inflated(in.forecast);
            for (std::size_t t = 0; t < in.grid.periods; ++t) {
                std::vector<double> clipped = in.samples.period_samples(t);
                for (auto& v : clipped) {
                    v = std::min(v, 0.0);
                }
                inflated[t] += cvar_oracle(clipped, 0.1) + theta / 0.1;
                EXPECT_NEAR(two.heat_out[t], inflated[t], 1e-6);
            }
            const Schedule ref = schedule_deterministic(inflated, in.prices, in.params, in.grid, lp::DenseSimplex{});
            EXPECT_TRUE(rel_close(two.objective, ref.objective)) << two.objective << " vs " << ref.objective;
        }
    }
}

TEST(TwoStage, ZeroSamplesKeepGainAtZero) {
    Instance in = random_instance(9);
    std::fill(in.samples.xi_hat.begin(), in.samples.xi_hat.end(), 0.0);
    const Schedule two =
        schedule_two_stage(in.forecast, in.prices, in.params, in.grid, in.samples, {0.05, 0.1, 10}, EuroPerMWh(50.0));
    for (std::size_t t = 0; t < in.grid.periods; ++t) {
        EXPECT_NEAR(two.recourse_gain[t], 0.0, 1e-6);
        EXPECT_NEAR(two.heat_out[t], in.forecast[t] + 0.5, 1e-6);
    }
}

TEST(TwoStage, DominatesSingleStageAndPricesRecourseExactly) {
    for (std::uint64_t seed = 200; seed < 215; ++seed) {
        const Instance in = random_instance(seed);
        for (const double gas : {0.0, 20.0, 50.0, 200.0}) {
            const AmbiguityConfig amb{0.02, 0.1, 10};
            const Schedule one = schedule_drcc(in.forecast, in.prices, in.params, in.grid, in.samples, amb);
            const Schedule two =
                schedule_two_stage(in.forecast, in.prices, in.params, in.grid, in.samples, amb, EuroPerMWh(gas));
            EXPECT_LE(two.objective, one.objective + 1e-6);
            expect_physical(two, in.params, in.grid);
            double recourse = 0.0;
            for (std::size_t t = 0; t < in.grid.periods; ++t) {
                double pos = 0.0;
                for (std::size_t i = 0; i < in.samples.size(); ++i) {
                    pos += std::max(in.samples.at(i, t), 0.0);
                }
                recourse += gas * two.recourse_gain[t] * (pos / 10.0 + 0.02);
                EXPECT_GE(two.recourse_gain[t], -1e-9);
                EXPECT_LE(two.recourse_gain[t], 1.0 + 1e-9);
            }
            EXPECT_NEAR(two.recourse_cost, recourse, 1e-6);
            EXPECT_NEAR(two.objective, two.electricity_cost + recourse, 1e-6 * std::max(1.0, two.objective));
        }
    }
}

TEST(TwoStage, GasCapLimitsGain) {
    Instance in = random_instance(4);
    in.params.gas_capacity = MegaWatt(0.5);
    const Schedule two =
        schedule_two_stage(in.forecast, in.prices, in.params, in.grid, in.samples, {0.0, 0.1, 10}, EuroPerMWh(0.0));
    for (std::size_t t = 0; t < in.grid.periods; ++t) {
        for (std::size_t i = 0; i < in.samples.size(); ++i) {
            EXPECT_LE(two.recourse_gain[t] * std::max(in.samples.at(i, t), 0.0), 0.5 + 1e-6);
        }
    }
}

TEST(Oracle, EqualsDeterministicOnForecast) {
    const Instance in = random_instance(2);
    const Schedule o = schedule_oracle(in.forecast, in.prices, in.params, in.grid);
    const Schedule d = schedule_deterministic(in.forecast, in.prices, in.params, in.grid);
    EXPECT_EQ(o.policy, "oracle");
    EXPECT_NEAR(o.objective, d.objective, 1e-9);
}

} // namespace
} // namespace drsched
