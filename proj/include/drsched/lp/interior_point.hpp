#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <optional>

#include <Eigen/Sparse>

#include "drsched/lp/ldl.hpp"
#include "drsched/lp/problem.hpp"

namespace drsched::lp {

/// Primal-dual interior-point method on the homogeneous self-dual embedding.
///
/// The model is rewritten as
///
///     min c'x   s.t.  A x = b,  G x + s = h,  s >= 0,   x free
///
/// where A holds equality rows and fixed columns and G holds inequality rows
/// and finite column bounds. Each iteration factors the quasi-definite KKT
/// matrix [dI A' G'; A -dI 0; G 0 -(W + dI)] with a sparse LDL' (fill-reducing
/// ordering computed once) and applies Mehrotra's predictor-corrector.
/// Infeasibility and unboundedness are read off the embedding's certificates.
class InteriorPoint final : public Solver {
public:
    struct Options {
        std::size_t max_iterations = 100;
        double feas_tol = 1e-9;
        double gap_tol = 1e-10;
        double infeas_tol = 1e-8;
        double regularization = 1e-10;
        std::size_t refinement_steps = 8;
        double step_fraction = 0.99;
    };

    InteriorPoint() = default;
    explicit InteriorPoint(Options opts) : opts_(opts) {}

    [[nodiscard]] std::string name() const override { return "interior-point"; }

    [[nodiscard]] Solution solve(const Problem& problem) const override {
        Solution sol;
        Conic model;
        if (!build(problem, model)) {
            sol.status = Status::Infeasible;
            sol.message = "constraint with no terms is violated";
            return sol;
        }
        sol = run(model, problem.num_variables());
        return detail::finalize(problem, std::move(sol));
    }

private:
    using SpMat = Eigen::SparseMatrix<double>;
    using Vec = Eigen::VectorXd;

    struct Conic {
        SpMat A, G;
        Vec b, h, c;
        double cost_scale = 1.0;
    };

    static bool build(const Problem& problem, Conic& out) {
        using Triplet = Eigen::Triplet<double>;
        const std::size_t n = problem.num_variables();
        std::vector<Triplet> a_trip, g_trip;
        std::vector<double> b, h;
        const auto push_row = [](std::vector<Triplet>& trip, std::vector<double>& rhs, const std::vector<Term>& terms,
                                 double sign, double value) {
            double scale = 0.0;
            for (const Term& t : terms) {
                scale = std::max(scale, std::abs(t.coef));
            }
            const auto row = static_cast<int>(rhs.size());
            for (const Term& t : terms) {
                trip.emplace_back(row, static_cast<int>(t.var.index), sign * t.coef / scale);
            }
            rhs.push_back(sign * value / scale);
        };
        for (const Constraint& row : problem.constraints()) {
            if (row.terms.empty()) {
                const bool ok = row.sense == Sense::LessEqual  ? 0.0 <= row.rhs + kFeasibilityTol
                                : row.sense == Sense::Equal    ? std::abs(row.rhs) <= kFeasibilityTol
                                                               : 0.0 >= row.rhs - kFeasibilityTol;
                if (!ok) {
                    return false;
                }
                continue;
            }
            switch (row.sense) {
            case Sense::Equal: push_row(a_trip, b, row.terms, 1.0, row.rhs); break;
            case Sense::LessEqual: push_row(g_trip, h, row.terms, 1.0, row.rhs); break;
            case Sense::GreaterEqual: push_row(g_trip, h, row.terms, -1.0, row.rhs); break;
            }
        }
        const auto& vars = problem.variables();
        double cmax = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const Variable& v = vars[j];
            const std::vector<Term> unit{{VarId{j}, 1.0}};
            if (v.lower == v.upper) {
                push_row(a_trip, b, unit, 1.0, v.lower);
                continue;
            }
            if (std::isfinite(v.lower)) {
                push_row(g_trip, h, unit, -1.0, v.lower);
            }
            if (std::isfinite(v.upper)) {
                push_row(g_trip, h, unit, 1.0, v.upper);
            }
            cmax = std::max(cmax, std::abs(v.cost));
        }
        out.A.resize(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(n));
        out.A.setFromTriplets(a_trip.begin(), a_trip.end());
        out.G.resize(static_cast<Eigen::Index>(h.size()), static_cast<Eigen::Index>(n));
        out.G.setFromTriplets(g_trip.begin(), g_trip.end());
        out.b = Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
        out.h = Eigen::Map<const Vec>(h.data(), static_cast<Eigen::Index>(h.size()));
        out.cost_scale = std::max(1.0, cmax);
        out.c.resize(static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) {
            out.c[static_cast<Eigen::Index>(j)] = vars[j].cost / out.cost_scale;
        }
        return true;
    }

    /// KKT system with a fixed sparsity pattern; only the (3,3) diagonal
    /// changes between iterations.
    class Kkt {
    public:
        Kkt(const Conic& m, double reg) : model_(m), reg_(reg) {
            n_ = m.A.cols();
            p_ = m.A.rows();
            k_ = m.G.rows();
            const auto dim = static_cast<int>(n_ + p_ + k_);
            std::vector<QuasiDefiniteLdl::Entry> pattern;
            std::vector<int> signs(static_cast<std::size_t>(dim), -1);
            for (Eigen::Index j = 0; j < n_; ++j) {
                pattern.push_back({static_cast<int>(j), static_cast<int>(j)});
                values_.push_back(reg_);
                signs[static_cast<std::size_t>(j)] = 1;
            }
            for (Eigen::Index j = 0; j < m.A.outerSize(); ++j) {
                for (SpMat::InnerIterator it(m.A, j); it; ++it) {
                    pattern.push_back({static_cast<int>(n_ + it.row()), static_cast<int>(j)});
                    values_.push_back(it.value());
                }
            }
            for (Eigen::Index i = 0; i < p_; ++i) {
                pattern.push_back({static_cast<int>(n_ + i), static_cast<int>(n_ + i)});
                values_.push_back(-reg_);
            }
            for (Eigen::Index j = 0; j < m.G.outerSize(); ++j) {
                for (SpMat::InnerIterator it(m.G, j); it; ++it) {
                    pattern.push_back({static_cast<int>(n_ + p_ + it.row()), static_cast<int>(j)});
                    values_.push_back(it.value());
                }
            }
            z_diag_ = values_.size();
            for (Eigen::Index i = 0; i < k_; ++i) {
                pattern.push_back({static_cast<int>(n_ + p_ + i), static_cast<int>(n_ + p_ + i)});
                values_.push_back(-1.0 - reg_);
            }
            ldl_.emplace(dim, pattern, std::move(signs));
        }

        void factor(const Vec& w) {
            w_ = w;
            for (Eigen::Index i = 0; i < k_; ++i) {
                values_[z_diag_ + static_cast<std::size_t>(i)] = -w[i] - reg_;
            }
            ldl_->factor(values_);
        }

        /// Solves the unregularized system with iterative refinement.
        Vec solve(const Vec& rhs, std::size_t refinement) const {
            Vec sol = apply_inverse(rhs);
            const double rhs_norm = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
            for (std::size_t it = 0; it < refinement; ++it) {
                const Vec r = rhs - apply(sol);
                if (r.lpNorm<Eigen::Infinity>() <= 1e-14 * rhs_norm) {
                    break;
                }
                sol += apply_inverse(r);
            }
            return sol;
        }

    private:
        Vec apply_inverse(const Vec& rhs) const {
            std::vector<double> buf(rhs.data(), rhs.data() + rhs.size());
            ldl_->solve(buf);
            return Eigen::Map<const Vec>(buf.data(), rhs.size());
        }

        Vec apply(const Vec& v) const {
            const auto x = v.head(n_);
            const auto y = v.segment(n_, p_);
            const auto z = v.tail(k_);
            Vec out(v.size());
            out.head(n_) = model_.A.transpose() * y + model_.G.transpose() * z;
            out.segment(n_, p_) = model_.A * x;
            out.tail(k_) = model_.G * x - w_.cwiseProduct(z);
            return out;
        }

        const Conic& model_;
        double reg_;
        Eigen::Index n_ = 0, p_ = 0, k_ = 0;
        std::vector<double> values_;
        std::size_t z_diag_ = 0;
        Vec w_;
        std::optional<QuasiDefiniteLdl> ldl_;
    };

    static double max_step(const Vec& v, const Vec& dv) {
        double step = 1e300;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (dv[i] < 0.0) {
                step = std::min(step, -v[i] / dv[i]);
            }
        }
        return step;
    }

    Solution run(const Conic& m, std::size_t nvars) const {
        Solution sol;
        const Eigen::Index n = m.A.cols();
        const Eigen::Index p = m.A.rows();
        const Eigen::Index k = m.G.rows();
        const auto split = [&](const Vec& v, Vec& x, Vec& y, Vec& z) {
            x = v.head(n);
            y = v.segment(n, p);
            z = v.tail(k);
        };
        const auto stack = [&](const Vec& x, const Vec& y, const Vec& z) {
            Vec v(n + p + k);
            v << x, y, z;
            return v;
        };

        Kkt kkt(m, opts_.regularization);
        kkt.factor(Vec::Ones(k));
        Vec x, y, z, s;
        {
            Vec tx, ty, tz;
            split(kkt.solve(stack(Vec::Zero(n), m.b, m.h), opts_.refinement_steps), x, ty, tz);
            s = -tz;
            split(kkt.solve(stack(-m.c, Vec::Zero(p), Vec::Zero(k)), opts_.refinement_steps), tx, y, z);
            const auto shift = [](Vec& v) {
                if (v.size() == 0) {
                    return;
                }
                const double lo = v.minCoeff();
                if (lo < 1e-8) {
                    v.array() += 1.0 - std::min(lo, 0.0);
                }
            };
            shift(s);
            shift(z);
        }
        double tau = 1.0;
        double kappa = 1.0;

        const double bh_norm = std::max({1.0, m.b.lpNorm<Eigen::Infinity>(), m.h.lpNorm<Eigen::Infinity>()});
        const double c_norm = std::max(1.0, m.c.lpNorm<Eigen::Infinity>());
        const double cone_dim = static_cast<double>(k) + 1.0;

        Vec x1, y1, z1, x2, y2, z2;
        for (std::size_t iter = 0; iter < opts_.max_iterations; ++iter) {
            sol.iterations = iter + 1;
            const Vec rx = m.A.transpose() * y + m.G.transpose() * z + m.c * tau;
            const Vec ry = m.A * x - m.b * tau;
            const Vec rz = m.G * x + s - m.h * tau;
            const double cx = m.c.dot(x);
            const double by_hz = m.b.dot(y) + m.h.dot(z);
            const double rtau = kappa + cx + by_hz;
            const double mu = (s.dot(z) + tau * kappa) / cone_dim;

            const double pres = std::max(ry.lpNorm<Eigen::Infinity>(), rz.lpNorm<Eigen::Infinity>()) / tau / bh_norm;
            const double dres = rx.lpNorm<Eigen::Infinity>() / tau / c_norm;
            const double pobj = cx / tau;
            const double dobj = -by_hz / tau;
            const double gap = std::abs(pobj - dobj);
            if (pres < opts_.feas_tol && dres < opts_.feas_tol &&
                (gap < opts_.gap_tol * std::max(1.0, std::abs(pobj)) || s.dot(z) / (tau * tau) < opts_.gap_tol)) {
                sol.status = Status::Optimal;
                break;
            }
            // Certificates: a dual ray proves primal infeasibility, a primal ray unboundedness.
            if (by_hz < 0.0) {
                const Vec ray = m.A.transpose() * y + m.G.transpose() * z;
                if (ray.lpNorm<Eigen::Infinity>() / -by_hz < opts_.infeas_tol) {
                    sol.status = Status::Infeasible;
                    sol.message = "dual ray certifies primal infeasibility";
                    return sol;
                }
            }
            if (cx < 0.0) {
                const double ray = std::max((m.A * x).lpNorm<Eigen::Infinity>(), (m.G * x + s).lpNorm<Eigen::Infinity>());
                if (ray / -cx < opts_.infeas_tol) {
                    sol.status = Status::Unbounded;
                    sol.message = "primal ray certifies unboundedness";
                    return sol;
                }
            }

            const Vec w = s.cwiseQuotient(z);
            kkt.factor(w);
            split(kkt.solve(stack(-m.c, m.b, m.h), opts_.refinement_steps), x1, y1, z1);
            const double denom = m.c.dot(x1) + m.b.dot(y1) + m.h.dot(z1) - kappa / tau;

            struct Dir {
                Vec dx, dy, dz, ds;
                double dtau = 0.0, dkappa = 0.0;
            };
            const auto direction = [&](double eta, const Vec& ds_target, double dk_target) {
                Dir d;
                split(kkt.solve(stack(-eta * rx, -eta * ry, -eta * rz + ds_target.cwiseQuotient(z)),
                                opts_.refinement_steps),
                      x2, y2, z2);
                d.dtau = (-eta * rtau + dk_target / tau - m.c.dot(x2) - m.b.dot(y2) - m.h.dot(z2)) / denom;
                d.dx = x2 + d.dtau * x1;
                d.dy = y2 + d.dtau * y1;
                d.dz = z2 + d.dtau * z1;
                d.ds = -ds_target.cwiseQuotient(z) - w.cwiseProduct(d.dz);
                d.dkappa = (-dk_target - kappa * d.dtau) / tau;
                return d;
            };
            const auto step_length = [&](const Dir& d) {
                double a = std::min(max_step(s, d.ds), max_step(z, d.dz));
                if (d.dtau < 0.0) {
                    a = std::min(a, -tau / d.dtau);
                }
                if (d.dkappa < 0.0) {
                    a = std::min(a, -kappa / d.dkappa);
                }
                return a;
            };

            const Vec sz = s.cwiseProduct(z);
            const Dir aff = direction(1.0, sz, tau * kappa);
            const double a_aff = std::min(1.0, step_length(aff));
            const double sigma = std::clamp(std::pow(1.0 - a_aff, 3.0), 0.0, 1.0);
            const Vec ds_target =
                (sz + aff.ds.cwiseProduct(aff.dz)).array() - sigma * mu;
            const double dk_target = tau * kappa + aff.dtau * aff.dkappa - sigma * mu;
            const Dir d = direction(1.0 - sigma, ds_target, dk_target);
            const double a = std::min(1.0, opts_.step_fraction * step_length(d));

            x += a * d.dx;
            y += a * d.dy;
            z += a * d.dz;
            s += a * d.ds;
            tau += a * d.dtau;
            kappa += a * d.dkappa;
        }
        if (sol.status != Status::Optimal) {
            sol.status = Status::NumericalFailure;
            sol.message = "iteration limit reached";
            return sol;
        }
        sol.values.resize(nvars);
        for (std::size_t j = 0; j < nvars; ++j) {
            sol.values[j] = x[static_cast<Eigen::Index>(j)] / tau;
        }
        return sol;
    }

    Options opts_{};
};

} // namespace drsched::lp
