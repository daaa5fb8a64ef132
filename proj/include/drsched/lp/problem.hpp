#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace drsched::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Absolute residual tolerance for rows and bound tolerance for columns of an
/// optimal solution.
inline constexpr double kFeasibilityTol = 1e-6;
inline constexpr double kBoundTol = 1e-9;

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct VarId {
    std::size_t index = 0;
    friend auto operator<=>(const VarId&, const VarId&) = default;
};

struct RowId {
    std::size_t index = 0;
    friend auto operator<=>(const RowId&, const RowId&) = default;
};

enum class Sense { LessEqual, Equal, GreaterEqual };

struct Term {
    VarId var;
    double coef = 0.0;
};

struct Variable {
    double lower = 0.0;
    double upper = kInf;
    double cost = 0.0;
    std::string name;
};

struct Constraint {
    std::vector<Term> terms; // sorted by variable index, no duplicates, no zeros
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
    std::string name;
};

/// Minimization LP built column by column and row by row. Ids are dense and
/// assigned in insertion order, so building the same model twice yields the
/// same ids and the same canonical text.
class Problem {
public:
    VarId add_variable(double lower, double upper, std::string name = {}) {
        if (std::isnan(lower) || std::isnan(upper)) {
            throw ModelError("variable bound is NaN");
        }
        if (lower > upper) {
            throw ModelError(fmt::format("inverted bounds [{}, {}] for variable {}", lower, upper,
                                         name.empty() ? std::to_string(vars_.size()) : name));
        }
        if (lower == kInf || upper == -kInf) {
            throw ModelError("variable bounds exclude every finite value");
        }
        vars_.push_back({lower, upper, 0.0, std::move(name)});
        return VarId{vars_.size() - 1};
    }

    RowId add_constraint(std::vector<Term> terms, Sense sense, double rhs, std::string name = {}) {
        if (!std::isfinite(rhs)) {
            throw ModelError("constraint rhs must be finite");
        }
        std::map<std::size_t, double> merged;
        for (const Term& t : terms) {
            check_var(t.var);
            if (!std::isfinite(t.coef)) {
                throw ModelError("constraint coefficient must be finite");
            }
            merged[t.var.index] += t.coef;
        }
        std::vector<Term> clean;
        clean.reserve(merged.size());
        for (const auto& [idx, coef] : merged) {
            if (coef != 0.0) {
                clean.push_back({VarId{idx}, coef});
            }
        }
        rows_.push_back({std::move(clean), sense, rhs, std::move(name)});
        return RowId{rows_.size() - 1};
    }

    void set_cost(VarId v, double coef) {
        check_var(v);
        if (!std::isfinite(coef)) {
            throw ModelError("objective coefficient must be finite");
        }
        vars_[v.index].cost = coef;
    }

    void add_cost(VarId v, double coef) { set_cost(v, vars_.at(v.index).cost + coef); }

    void set_objective_constant(double c) {
        if (!std::isfinite(c)) {
            throw ModelError("objective constant must be finite");
        }
        constant_ = c;
    }

    void set_bounds(VarId v, double lower, double upper) {
        check_var(v);
        if (std::isnan(lower) || std::isnan(upper) || lower > upper || lower == kInf || upper == -kInf) {
            throw ModelError(fmt::format("inverted bounds [{}, {}]", lower, upper));
        }
        vars_[v.index].lower = lower;
        vars_[v.index].upper = upper;
    }

    [[nodiscard]] std::size_t num_variables() const { return vars_.size(); }
    [[nodiscard]] std::size_t num_constraints() const { return rows_.size(); }
    [[nodiscard]] const Variable& variable(VarId v) const { return vars_.at(v.index); }
    [[nodiscard]] const std::vector<Variable>& variables() const { return vars_; }
    [[nodiscard]] const Constraint& constraint(RowId r) const { return rows_.at(r.index); }
    [[nodiscard]] const std::vector<Constraint>& constraints() const { return rows_; }
    [[nodiscard]] double objective_constant() const { return constant_; }

    [[nodiscard]] double objective_value(const std::vector<double>& x) const {
        double obj = constant_;
        for (std::size_t j = 0; j < vars_.size(); ++j) {
            obj += vars_[j].cost * x[j];
        }
        return obj;
    }

    [[nodiscard]] double row_activity(const Constraint& row, const std::vector<double>& x) const {
        double lhs = 0.0;
        for (const Term& t : row.terms) {
            lhs += t.coef * x[t.var.index];
        }
        return lhs;
    }

    /// Largest violation over all rows (absolute residual) and column bounds.
    [[nodiscard]] std::pair<double, double> max_violation(const std::vector<double>& x) const {
        double row_viol = 0.0;
        for (const Constraint& row : rows_) {
            const double lhs = row_activity(row, x);
            double v = 0.0;
            switch (row.sense) {
            case Sense::LessEqual: v = lhs - row.rhs; break;
            case Sense::GreaterEqual: v = row.rhs - lhs; break;
            case Sense::Equal: v = std::abs(lhs - row.rhs); break;
            }
            row_viol = std::max(row_viol, v);
        }
        double bound_viol = 0.0;
        for (std::size_t j = 0; j < vars_.size(); ++j) {
            bound_viol = std::max({bound_viol, vars_[j].lower - x[j], x[j] - vars_[j].upper});
        }
        return {row_viol, bound_viol};
    }

    /// Line-oriented canonical form: a header, the objective constant, one
    /// line per variable in id order, then one line per row in id order with
    /// terms sorted by variable id. Numbers use the shortest representation
    /// that round-trips.
    ///
    ///   lp 1 vars <n> rows <m>
    ///   obj_const <c>
    ///   var <id> <name|-> <lower> <upper> <cost>
    ///   row <id> <name|-> <<=|=|>=> <rhs> : <coef> x<id> ...
    [[nodiscard]] std::string to_text() const {
        std::string out = fmt::format("lp 1 vars {} rows {}\nobj_const {}\n", vars_.size(), rows_.size(), constant_);
        for (std::size_t j = 0; j < vars_.size(); ++j) {
            const Variable& v = vars_[j];
            out += fmt::format("var {} {} {} {} {}\n", j, v.name.empty() ? "-" : v.name, v.lower, v.upper, v.cost);
        }
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const Constraint& r = rows_[i];
            const char* sense = r.sense == Sense::LessEqual ? "<=" : (r.sense == Sense::Equal ? "=" : ">=");
            out += fmt::format("row {} {} {} {} :", i, r.name.empty() ? "-" : r.name, sense, r.rhs);
            for (const Term& t : r.terms) {
                out += fmt::format(" {} x{}", t.coef, t.var.index);
            }
            out += '\n';
        }
        return out;
    }

private:
    void check_var(VarId v) const {
        if (v.index >= vars_.size()) {
            throw ModelError(fmt::format("unknown variable id {}", v.index));
        }
    }

    std::vector<Variable> vars_;
    std::vector<Constraint> rows_;
    double constant_ = 0.0;
};

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure };

inline const char* to_string(Status s) {
    switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

struct Solution {
    Status status = Status::NumericalFailure;
    std::vector<double> values;
    double objective = 0.0;
    std::size_t iterations = 0;
    std::string message;

    [[nodiscard]] bool optimal() const { return status == Status::Optimal; }
    [[nodiscard]] double value(VarId v) const { return values.at(v.index); }
};

/// Backend contract. Implementations are stateless with respect to the
/// problems they solve, so one instance may serve concurrent callers.
class Solver {
public:
    virtual ~Solver() = default;
    [[nodiscard]] virtual Solution solve(const Problem& problem) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

namespace detail {

/// Projects values onto column bounds and downgrades an "optimal" answer to
/// numerical_failure when rows are violated beyond kFeasibilityTol.
inline Solution finalize(const Problem& problem, Solution sol) {
    if (sol.status != Status::Optimal) {
        return sol;
    }
    const auto& vars = problem.variables();
    for (std::size_t j = 0; j < vars.size(); ++j) {
        sol.values[j] = std::clamp(sol.values[j], vars[j].lower, vars[j].upper);
    }
    const auto [row_viol, bound_viol] = problem.max_violation(sol.values);
    if (row_viol > kFeasibilityTol || bound_viol > kBoundTol) {
        sol.status = Status::NumericalFailure;
        sol.message = fmt::format("solution violates rows by {:.3e}", row_viol);
        return sol;
    }
    sol.objective = problem.objective_value(sol.values);
    return sol;
}

} // namespace detail

} // namespace drsched::lp
