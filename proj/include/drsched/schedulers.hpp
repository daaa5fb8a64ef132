#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "drsched/cvar.hpp"
#include "drsched/domain.hpp"
#include "drsched/lp/solver.hpp"
#include "drsched/residuals.hpp"

namespace drsched {

/// Day-ahead decisions of one policy for one day.
///
/// `heat_out` is the planned heat delivery per period and `storage_plan` the
/// planned end-of-period storage; `recourse_gain` is only filled by the
/// two-stage policy. `objective` is the LP optimum: electricity cost, plus the
/// worst-case expected gas cost for the two-stage policy.
struct Schedule {
    std::string policy;
    std::vector<double> p_da;
    std::vector<double> heat_out;
    std::vector<double> storage_plan;
    std::vector<double> recourse_gain;
    std::vector<PeriodDiagnostics> diagnostics;
    double objective = 0.0;
    double electricity_cost = 0.0;
    double recourse_cost = 0.0;

    // Provenance for the JSON summary.
    double theta = 0.0;
    double alpha = 0.0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t periods() const { return p_da.size(); }
};

/// Raised when a formulation has no optimal solution. `period` names the first
/// hour whose required delivery exceeds what the boiler and tank can supply,
/// when that can be located.
class SchedulingError : public std::runtime_error {
public:
    SchedulingError(lp::Status status, std::optional<std::size_t> period, const std::string& what)
        : std::runtime_error(what), status_(status), period_(period) {}

    [[nodiscard]] lp::Status status() const { return status_; }
    [[nodiscard]] std::optional<std::size_t> period() const { return period_; }

private:
    lp::Status status_;
    std::optional<std::size_t> period_;
};

/// One affine piece d'x + e * xi - f of a max-affine constraint function
/// g(x, xi) = max_k { d_k'x + e_k xi - f_k }.
struct AffinePiece {
    std::vector<lp::Term> decision_coeffs;
    double xi_coeff = 1.0;
    double offset = 0.0;
};

/// Handles to the auxiliary variables of one worst-case CVaR constraint.
struct CvarHandles {
    lp::VarId tau;
    lp::VarId lambda;
    std::vector<lp::VarId> slack;
    lp::RowId budget;
};

/// The storage model shared by every formulation.
struct BaseModel {
    lp::Problem problem;
    std::vector<lp::VarId> power;   // p_t, MW
    std::vector<lp::VarId> heat;    // H_t, planned delivery per period
    std::vector<lp::VarId> storage; // Q_t, end-of-period storage
};

namespace detail {

inline void check_inputs(std::span<const double> forecast, std::span<const double> prices, const BoilerParams& params,
                         const TimeGrid& grid) {
    validate_grid(grid);
    validate_params(params);
    if (forecast.size() != grid.periods || prices.size() != grid.periods) {
        throw ValidationError(fmt::format("expected {} periods, got forecast {} and prices {}", grid.periods,
                                          forecast.size(), prices.size()));
    }
    for (std::size_t t = 0; t < grid.periods; ++t) {
        if (!std::isfinite(forecast[t]) || forecast[t] < 0.0) {
            throw ValidationError(fmt::format("forecast negative or not finite at period {}", t));
        }
        if (!std::isfinite(prices[t])) {
            throw ValidationError(fmt::format("price not finite at period {}", t));
        }
    }
}

/// First period at which even running at p_max cannot keep the tank above
/// storage_min while delivering `required` heat.
inline std::optional<std::size_t> locate_shortage(std::span<const double> required, const BoilerParams& params,
                                                  const TimeGrid& grid) {
    double q = params.q_init.value();
    const double inflow = params.eta_p2h * (params.p_max * grid.step).value();
    for (std::size_t t = 0; t < required.size(); ++t) {
        q = (1.0 - params.eta_loss) * q + inflow - required[t];
        if (q < params.storage_min.value() - 1e-9) {
            return t;
        }
        q = std::min(q, params.storage_max.value());
    }
    return std::nullopt;
}

inline lp::Solution solve_or_throw(const lp::Problem& problem, const lp::Solver& solver,
                                   std::span<const double> required, const BoilerParams& params,
                                   const TimeGrid& grid) {
    lp::Solution sol = solver.solve(problem);
    if (sol.optimal()) {
        return sol;
    }
    std::optional<std::size_t> period;
    if (sol.status == lp::Status::Infeasible) {
        period = locate_shortage(required, params, grid);
    }
    std::string what = fmt::format("scheduling problem is {}", lp::to_string(sol.status));
    if (period) {
        what += fmt::format(": required delivery exceeds capability at period {}", *period);
    } else if (!sol.message.empty()) {
        what += ": " + sol.message;
    }
    throw SchedulingError(sol.status, period, what);
}

/// Adds tau (free), lambda >= 0 and N slacks s_i >= 0 with the budget row
/// lambda * theta + (1/N) sum_i s_i <= alpha * tau. At theta = 0 lambda does
/// not enter the budget and is pinned to `lipschitz`.
inline CvarHandles add_cvar_budget(lp::Problem& problem, std::size_t n, double theta, double alpha, double lipschitz,
                                   const std::string& tag) {
    CvarHandles h;
    h.tau = problem.add_variable(-lp::kInf, lp::kInf, "tau" + tag);
    h.lambda = problem.add_variable(0.0, theta > 0.0 ? lp::kInf : lipschitz, "lambda" + tag);
    h.slack.reserve(n);
    std::vector<lp::Term> budget{{h.lambda, theta}, {h.tau, -alpha}};
    for (std::size_t i = 0; i < n; ++i) {
        h.slack.push_back(problem.add_variable(0.0, lp::kInf, fmt::format("s{}_{}", tag, i)));
        budget.push_back({h.slack.back(), 1.0 / static_cast<double>(n)});
    }
    h.budget = problem.add_constraint(std::move(budget), lp::Sense::LessEqual, 0.0, "budget" + tag);
    return h;
}

inline PeriodDiagnostics read_diagnostics(const CvarHandles& h, const lp::Solution& sol) {
    PeriodDiagnostics d;
    d.tau = sol.value(h.tau);
    d.lambda = sol.value(h.lambda);
    std::size_t binding = 0;
    for (const lp::VarId s : h.slack) {
        const double v = sol.value(s);
        d.mean_slack += v;
        binding += v > 1e-7 ? 1 : 0;
    }
    d.mean_slack /= static_cast<double>(h.slack.size());
    d.binding_fraction = static_cast<double>(binding) / static_cast<double>(h.slack.size());
    return d;
}

inline Schedule extract(const BaseModel& model, const lp::Solution& sol, std::span<const double> prices,
                        const TimeGrid& grid, std::string policy) {
    Schedule s;
    s.policy = std::move(policy);
    for (std::size_t t = 0; t < model.power.size(); ++t) {
        s.p_da.push_back(sol.value(model.power[t]));
        s.heat_out.push_back(sol.value(model.heat[t]));
        s.storage_plan.push_back(sol.value(model.storage[t]));
        s.electricity_cost += prices[t] * s.p_da.back() * grid.dt();
    }
    s.objective = sol.objective;
    return s;
}

inline void check_samples(const ResidualSampleSet& samples, const TimeGrid& grid) {
    if (samples.periods != grid.periods) {
        throw ValidationError(
            fmt::format("residual samples cover {} periods, grid has {}", samples.periods, grid.periods));
    }
    if (samples.size() == 0) {
        throw ValidationError("empty sample set");
    }
    for (const double v : samples.xi_hat) {
        if (!std::isfinite(v)) {
            throw ValidationError("residual sample is not finite");
        }
    }
}

} // namespace detail

/// Storage model: objective sum_t c_t p_t dt, dynamics
/// Q_t = (1 - eta_loss) Q_{t-1} + eta_p2h p_t dt - H_t with Q_0 = q_init,
/// power and storage bounds, and 0 <= H_t <= mu_t + cap_margin_t.
inline BaseModel build_base_model(std::span<const double> forecast, std::span<const double> prices,
                                  const BoilerParams& params, const TimeGrid& grid,
                                  std::span<const double> cap_margin = {}) {
    detail::check_inputs(forecast, prices, params, grid);
    if (!cap_margin.empty() && cap_margin.size() != grid.periods) {
        throw ValidationError("cap margin length differs from periods");
    }
    BaseModel m;
    const double dt = grid.dt();
    for (std::size_t t = 0; t < grid.periods; ++t) {
        const double margin = cap_margin.empty() ? 0.0 : cap_margin[t];
        m.power.push_back(m.problem.add_variable(params.p_min.value(), params.p_max.value(), fmt::format("p{}", t)));
        m.heat.push_back(m.problem.add_variable(0.0, forecast[t] + margin, fmt::format("H{}", t)));
        m.storage.push_back(m.problem.add_variable(params.storage_min.value(), params.storage_max.value(),
                                                   fmt::format("Q{}", t)));
        m.problem.set_cost(m.power[t], prices[t] * dt);
    }
    const double keep = 1.0 - params.eta_loss;
    for (std::size_t t = 0; t < grid.periods; ++t) {
        std::vector<lp::Term> row{{m.storage[t], 1.0}, {m.power[t], -params.eta_p2h * dt}, {m.heat[t], 1.0}};
        double rhs = 0.0;
        if (t == 0) {
            rhs = keep * params.q_init.value();
        } else {
            row.push_back({m.storage[t - 1], -keep});
        }
        m.problem.add_constraint(std::move(row), lp::Sense::Equal, rhs, fmt::format("dyn{}", t));
    }
    if (params.terminal_storage_min) {
        m.problem.add_constraint({{m.storage.back(), 1.0}}, lp::Sense::GreaterEqual,
                                 params.terminal_storage_min->value(), "terminal");
    }
    return m;
}

/// Rows of sup_Q CVaR_{1-alpha}(max_k g_k(x, xi)) <= 0 over the type-1
/// Wasserstein ball with unbounded support:
///
///   lambda * theta + (1/N) sum_i s_i <= alpha * tau
///   d_k'x - f_k + tau + e_k xi_i <= s_i     for all i, k
///   |e_k| <= lambda                         for all k
///
/// tau here is the negated threshold of the Rockafellar-Uryasev form.
inline CvarHandles build_wc_cvar_constraint(lp::Problem& problem, std::span<const AffinePiece> pieces,
                                            std::span<const double> samples, double theta, double alpha,
                                            const std::string& tag = {}) {
    if (samples.empty()) {
        throw ValidationError("empty sample set");
    }
    validate_ambiguity({theta, alpha, samples.size()});
    if (pieces.empty()) {
        throw ValidationError("at least one affine piece is required");
    }
    double lipschitz = 0.0;
    for (const AffinePiece& k : pieces) {
        lipschitz = std::max(lipschitz, std::abs(k.xi_coeff));
    }
    CvarHandles h = detail::add_cvar_budget(problem, samples.size(), theta, alpha, lipschitz, tag);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (const AffinePiece& k : pieces) {
            std::vector<lp::Term> row = k.decision_coeffs;
            row.push_back({h.tau, 1.0});
            row.push_back({h.slack[i], -1.0});
            problem.add_constraint(std::move(row), lp::Sense::LessEqual, k.offset - k.xi_coeff * samples[i]);
        }
    }
    for (const AffinePiece& k : pieces) {
        problem.add_constraint({{h.lambda, 1.0}}, lp::Sense::GreaterEqual, std::abs(k.xi_coeff), "dualnorm" + tag);
    }
    return h;
}

/// Nominal schedule: planned delivery equals the forecast.
inline Schedule schedule_deterministic(std::span<const double> forecast, std::span<const double> prices,
                                       const BoilerParams& params, const TimeGrid& grid,
                                       const lp::Solver& solver = lp::default_solver()) {
    BaseModel m = build_base_model(forecast, prices, params, grid);
    for (std::size_t t = 0; t < grid.periods; ++t) {
        m.problem.set_bounds(m.heat[t], forecast[t], forecast[t]);
    }
    const lp::Solution sol = detail::solve_or_throw(m.problem, solver, forecast, params, grid);
    return detail::extract(m, sol, prices, grid, "det");
}

/// Perfect-information schedule: the deterministic model run on realized demand.
inline Schedule schedule_oracle(std::span<const double> actual_demand, std::span<const double> prices,
                                const BoilerParams& params, const TimeGrid& grid,
                                const lp::Solver& solver = lp::default_solver()) {
    Schedule s = schedule_deterministic(actual_demand, prices, params, grid, solver);
    s.policy = "oracle";
    return s;
}

/// Single-stage Wasserstein DRCC: one worst-case CVaR constraint per period
/// on g_t(x, xi) = mu_t + xi - H_t. theta = 0 gives the SAA policy.
inline Schedule schedule_drcc(std::span<const double> forecast, std::span<const double> prices,
                              const BoilerParams& params, const TimeGrid& grid, const ResidualSampleSet& samples,
                              const AmbiguityConfig& ambiguity, const lp::Solver& solver = lp::default_solver()) {
    validate_ambiguity(ambiguity);
    detail::check_samples(samples, grid);
    const double theta = ambiguity.theta;
    const double alpha = ambiguity.alpha;
    std::vector<double> cap(grid.periods), required(grid.periods);
    for (std::size_t t = 0; t < grid.periods; ++t) {
        double worst = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            worst = std::max(worst, samples.at(i, t));
        }
        cap[t] = worst + theta / alpha;
    }
    BaseModel m = build_base_model(forecast, prices, params, grid, cap);
    std::vector<CvarHandles> handles;
    handles.reserve(grid.periods);
    for (std::size_t t = 0; t < grid.periods; ++t) {
        const AffinePiece piece{{{m.heat[t], -1.0}}, 1.0, -forecast[t]};
        const std::vector<double> xs = samples.period_samples(t);
        handles.push_back(build_wc_cvar_constraint(m.problem, std::span(&piece, 1), xs, theta, alpha,
                                                   std::to_string(t)));
        required[t] = forecast[t] + wc_cvar_margin(xs, theta, alpha);
    }
    const lp::Solution sol = detail::solve_or_throw(m.problem, solver, required, params, grid);
    Schedule s = detail::extract(m, sol, prices, grid, theta == 0.0 ? "saa" : "drcc");
    for (std::size_t t = 0; t < grid.periods; ++t) {
        s.diagnostics.push_back(detail::read_diagnostics(handles[t], sol));
    }
    s.theta = theta;
    s.alpha = alpha;
    s.sample_count = samples.size();
    s.seed = samples.seed;
    return s;
}

/// Two-stage DRCC with gas recourse y = Y_t * xi_+ per period.
///
/// The objective adds gas_price * Y_t * (mean_i (xi_i)_+ + theta), the exact
/// worst-case expectation of gas_price * Y_t * xi_+ over the ball. The
/// per-period chance constraint uses g~ = mu_t + xi - H_t - Y_t xi_+, evaluated
/// exactly at each sample, with the Lipschitz bound lambda_t >= 1. Gas
/// activation at every sample is capped at gas_capacity * dt.
inline Schedule schedule_two_stage(std::span<const double> forecast, std::span<const double> prices,
                                   const BoilerParams& params, const TimeGrid& grid,
                                   const ResidualSampleSet& samples, const AmbiguityConfig& ambiguity,
                                   EuroPerMWh gas_price, const lp::Solver& solver = lp::default_solver()) {
    validate_ambiguity(ambiguity);
    detail::check_samples(samples, grid);
    if (!std::isfinite(gas_price.value()) || gas_price.value() < 0.0) {
        throw ValidationError("gas_price is negative");
    }
    const double theta = ambiguity.theta;
    const double alpha = ambiguity.alpha;
    const std::size_t n = samples.size();
    const double gas_cap = (params.gas_capacity * grid.step).value();

    std::vector<double> cap(grid.periods), required(grid.periods);
    for (std::size_t t = 0; t < grid.periods; ++t) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            worst = std::max(worst, samples.at(i, t));
        }
        cap[t] = worst + theta / alpha;
    }
    BaseModel m = build_base_model(forecast, prices, params, grid, cap);
    std::vector<lp::VarId> gain;
    std::vector<CvarHandles> handles;
    std::vector<double> recourse_weight(grid.periods);
    for (std::size_t t = 0; t < grid.periods; ++t) {
        const std::string tag = std::to_string(t);
        gain.push_back(m.problem.add_variable(0.0, 1.0, "Y" + tag));
        double mean_pos = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean_pos += std::max(samples.at(i, t), 0.0);
        }
        mean_pos /= static_cast<double>(n);
        recourse_weight[t] = gas_price.value() * (mean_pos + theta);
        m.problem.set_cost(gain[t], recourse_weight[t]);

        CvarHandles h = detail::add_cvar_budget(m.problem, n, theta, alpha, 1.0, tag);
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = samples.at(i, t);
            const double xi_pos = std::max(xi, 0.0);
            m.problem.add_constraint({{m.heat[t], -1.0}, {gain[t], -xi_pos}, {h.tau, 1.0}, {h.slack[i], -1.0}},
                                     lp::Sense::LessEqual, -forecast[t] - xi);
            if (xi_pos > 0.0) {
                m.problem.add_constraint({{gain[t], xi_pos}}, lp::Sense::LessEqual, gas_cap);
            }
        }
        m.problem.add_constraint({{h.lambda, 1.0}}, lp::Sense::GreaterEqual, 1.0, "dualnorm" + tag);
        handles.push_back(std::move(h));
        // Y = 0 is always allowed, so the single-stage margin is a valid
        // (conservative) capability check.
        required[t] = forecast[t] + wc_cvar_margin(samples.period_samples(t), theta, alpha);
    }
    const lp::Solution sol = detail::solve_or_throw(m.problem, solver, required, params, grid);
    Schedule s = detail::extract(m, sol, prices, grid, "two-stage");
    for (std::size_t t = 0; t < grid.periods; ++t) {
        s.diagnostics.push_back(detail::read_diagnostics(handles[t], sol));
        s.recourse_gain.push_back(sol.value(gain[t]));
        s.recourse_cost += recourse_weight[t] * s.recourse_gain.back();
    }
    s.theta = theta;
    s.alpha = alpha;
    s.sample_count = n;
    s.seed = samples.seed;
    return s;
}

} // namespace drsched
