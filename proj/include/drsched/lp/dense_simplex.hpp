#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "drsched/lp/problem.hpp"

namespace drsched::lp {

/// Two-phase bounded-variable primal simplex on a dense tableau.
///
/// Returns vertex solutions and is exact up to floating point round-off, but
/// every pivot costs O(rows x columns). Meant for small models and as an
/// independent check of the interior-point backend.
class DenseSimplex final : public Solver {
public:
    struct Options {
        std::size_t max_iterations = 200000;
        double pivot_tol = 1e-9;
        double cost_tol = 1e-9;
        double phase1_tol = 1e-7;
    };

    DenseSimplex() = default;
    explicit DenseSimplex(Options opts) : opts_(opts) {}

    [[nodiscard]] std::string name() const override { return "dense-simplex"; }

    [[nodiscard]] Solution solve(const Problem& problem) const override {
        Tableau tab(problem);
        Solution sol;
        // Phase 1: minimize the sum of artificials.
        std::vector<double> cost(tab.ncols, 0.0);
        for (std::size_t i = 0; i < tab.m; ++i) {
            cost[tab.art(i)] = 1.0;
        }
        auto st = iterate(tab, cost, sol.iterations);
        if (st == Status::NumericalFailure) {
            sol.status = st;
            sol.message = "iteration limit in phase 1";
            return sol;
        }
        double infeas = 0.0;
        for (std::size_t i = 0; i < tab.m; ++i) {
            infeas += tab.x[tab.art(i)];
        }
        if (infeas > opts_.phase1_tol) {
            sol.status = Status::Infeasible;
            sol.message = "phase 1 optimum is positive";
            return sol;
        }
        // Fix artificials at zero and pivot basic ones out where possible.
        for (std::size_t i = 0; i < tab.m; ++i) {
            const std::size_t a = tab.art(i);
            tab.lower[a] = tab.upper[a] = 0.0;
            tab.x[a] = 0.0;
        }
        for (std::size_t r = 0; r < tab.m; ++r) {
            if (!tab.is_artificial(tab.basis[r])) {
                continue;
            }
            for (std::size_t j = 0; j < tab.first_art(); ++j) {
                if (!tab.in_basis[j] && std::abs(tab.at(r, j)) > 1e-7) {
                    tab.pivot(r, j);
                    break;
                }
            }
        }
        std::fill(cost.begin(), cost.end(), 0.0);
        for (std::size_t j = 0; j < tab.n; ++j) {
            cost[j] = problem.variables()[j].cost;
        }
        st = iterate(tab, cost, sol.iterations);
        if (st != Status::Optimal) {
            sol.status = st;
            sol.message = st == Status::Unbounded ? "unbounded ray found" : "iteration limit in phase 2";
            return sol;
        }
        sol.status = Status::Optimal;
        sol.values.assign(tab.x.begin(), tab.x.begin() + static_cast<std::ptrdiff_t>(tab.n));
        return detail::finalize(problem, std::move(sol));
    }

private:
    struct Tableau {
        std::size_t m = 0;     // rows
        std::size_t n = 0;     // structural columns
        std::size_t ncols = 0; // structural + slack + artificial
        std::vector<double> data;
        std::vector<double> lower, upper, x;
        std::vector<std::size_t> basis;
        std::vector<bool> in_basis;

        explicit Tableau(const Problem& p) : m(p.num_constraints()), n(p.num_variables()), ncols(n + 2 * m) {
            data.assign(m * ncols, 0.0);
            lower.assign(ncols, 0.0);
            upper.assign(ncols, 0.0);
            x.assign(ncols, 0.0);
            basis.resize(m);
            in_basis.assign(ncols, false);
            const auto& vars = p.variables();
            for (std::size_t j = 0; j < n; ++j) {
                lower[j] = vars[j].lower;
                upper[j] = vars[j].upper;
                x[j] = std::isfinite(lower[j]) ? lower[j] : (std::isfinite(upper[j]) ? upper[j] : 0.0);
            }
            for (std::size_t i = 0; i < m; ++i) {
                const Constraint& row = p.constraints()[i];
                const std::size_t s = n + i;
                switch (row.sense) {
                case Sense::LessEqual: lower[s] = 0.0; upper[s] = kInf; break;
                case Sense::GreaterEqual: lower[s] = -kInf; upper[s] = 0.0; break;
                case Sense::Equal: lower[s] = 0.0; upper[s] = 0.0; break;
                }
                double residual = row.rhs;
                for (const Term& t : row.terms) {
                    residual -= t.coef * x[t.var.index];
                }
                const double sign = residual >= 0.0 ? 1.0 : -1.0;
                for (const Term& t : row.terms) {
                    at(i, t.var.index) = sign * t.coef;
                }
                at(i, s) = sign;
                at(i, art(i)) = 1.0;
                lower[art(i)] = 0.0;
                upper[art(i)] = kInf;
                x[art(i)] = std::abs(residual);
                basis[i] = art(i);
                in_basis[art(i)] = true;
            }
        }

        [[nodiscard]] std::size_t first_art() const { return n + m; }
        [[nodiscard]] std::size_t art(std::size_t i) const { return n + m + i; }
        [[nodiscard]] bool is_artificial(std::size_t j) const { return j >= first_art(); }
        double& at(std::size_t i, std::size_t j) { return data[i * ncols + j]; }
        [[nodiscard]] double at(std::size_t i, std::size_t j) const { return data[i * ncols + j]; }

        void pivot(std::size_t r, std::size_t j) {
            const double piv = at(r, j);
            double* row_r = &data[r * ncols];
            for (std::size_t k = 0; k < ncols; ++k) {
                row_r[k] /= piv;
            }
            for (std::size_t i = 0; i < m; ++i) {
                if (i == r) {
                    continue;
                }
                const double f = at(i, j);
                if (f == 0.0) {
                    continue;
                }
                double* row_i = &data[i * ncols];
                for (std::size_t k = 0; k < ncols; ++k) {
                    row_i[k] -= f * row_r[k];
                }
            }
            in_basis[basis[r]] = false;
            basis[r] = j;
            in_basis[j] = true;
        }
    };

    Status iterate(Tableau& tab, const std::vector<double>& cost, std::size_t& iterations) const {
        std::vector<double> d(tab.ncols);
        std::size_t degenerate_run = 0;
        while (iterations < opts_.max_iterations) {
            ++iterations;
            // Reduced costs d_j = c_j - c_B^T B^-1 a_j.
            for (std::size_t j = 0; j < tab.ncols; ++j) {
                d[j] = cost[j];
            }
            for (std::size_t i = 0; i < tab.m; ++i) {
                const double cb = cost[tab.basis[i]];
                if (cb == 0.0) {
                    continue;
                }
                const double* row = &tab.data[i * tab.ncols];
                for (std::size_t j = 0; j < tab.ncols; ++j) {
                    d[j] -= cb * row[j];
                }
            }
            const bool bland = degenerate_run > 50;
            std::size_t enter = tab.ncols;
            double dir = 0.0;
            double best = 0.0;
            for (std::size_t j = 0; j < tab.ncols; ++j) {
                if (tab.in_basis[j] || tab.lower[j] == tab.upper[j]) {
                    continue;
                }
                double this_dir = 0.0;
                if (d[j] < -opts_.cost_tol && tab.x[j] < tab.upper[j]) {
                    this_dir = 1.0;
                } else if (d[j] > opts_.cost_tol && tab.x[j] > tab.lower[j]) {
                    this_dir = -1.0;
                }
                if (this_dir == 0.0) {
                    continue;
                }
                if (bland) {
                    enter = j;
                    dir = this_dir;
                    break;
                }
                if (std::abs(d[j]) > best) {
                    best = std::abs(d[j]);
                    enter = j;
                    dir = this_dir;
                }
            }
            if (enter == tab.ncols) {
                return Status::Optimal;
            }
            // Ratio test, including the entering column's own bound flip.
            double step = tab.upper[enter] - tab.lower[enter];
            std::size_t leave = tab.m;
            double leave_piv = 0.0;
            for (std::size_t i = 0; i < tab.m; ++i) {
                const double alpha = tab.at(i, enter);
                if (std::abs(alpha) <= opts_.pivot_tol) {
                    continue;
                }
                const std::size_t b = tab.basis[i];
                const double rate = -dir * alpha; // d x_b / d step
                double limit = kInf;
                if (rate < 0.0 && std::isfinite(tab.lower[b])) {
                    limit = std::max(0.0, tab.x[b] - tab.lower[b]) / -rate;
                } else if (rate > 0.0 && std::isfinite(tab.upper[b])) {
                    limit = std::max(0.0, tab.upper[b] - tab.x[b]) / rate;
                }
                const bool better = limit < step - 1e-12 ||
                                    (limit <= step + 1e-12 && leave < tab.m &&
                                     (bland ? b < tab.basis[leave] : std::abs(alpha) > leave_piv));
                if (better || (leave == tab.m && limit <= step)) {
                    step = limit;
                    leave = i;
                    leave_piv = std::abs(alpha);
                }
            }
            if (!std::isfinite(step)) {
                return Status::Unbounded;
            }
            degenerate_run = step <= 1e-12 ? degenerate_run + 1 : 0;
            tab.x[enter] += dir * step;
            for (std::size_t i = 0; i < tab.m; ++i) {
                tab.x[tab.basis[i]] -= dir * step * tab.at(i, enter);
            }
            if (leave == tab.m) {
                // Bound flip: snap to the reached bound.
                tab.x[enter] = dir > 0.0 ? tab.upper[enter] : tab.lower[enter];
                continue;
            }
            const std::size_t b = tab.basis[leave];
            const double rate = -dir * tab.at(leave, enter);
            tab.x[b] = rate < 0.0 ? tab.lower[b] : tab.upper[b];
            tab.pivot(leave, enter);
        }
        return Status::NumericalFailure;
    }

    Options opts_{};
};

} // namespace drsched::lp
