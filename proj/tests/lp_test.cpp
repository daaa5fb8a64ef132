#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "drsched/lp/solver.hpp"

namespace drsched::lp {
namespace {

TEST(LpProblem, AddVariableAssignsDenseIds) {
    Problem p;
    EXPECT_EQ(p.add_variable(0.0, 10.0).index, 0u);
    EXPECT_EQ(p.add_variable(-kInf, kInf, "tau").index, 1u);
    EXPECT_EQ(p.num_variables(), 2u);
}

TEST(LpProblem, InvertedBoundsRejected) {
    Problem p;
    EXPECT_THROW(p.add_variable(3.0, 2.0), ModelError);
    EXPECT_THROW(p.add_variable(kInf, kInf), ModelError);
}

TEST(LpProblem, AddConstraint) {
    Problem p;
    const VarId x = p.add_variable(0.0, 10.0);
    EXPECT_EQ(p.add_constraint({{x, 1.0}}, Sense::LessEqual, 5.0).index, 0u);
    EXPECT_EQ(p.add_constraint({}, Sense::LessEqual, -1.0).index, 1u);
    EXPECT_THROW(p.add_constraint({{VarId{9}, 1.0}}, Sense::LessEqual, 1.0), ModelError);
}

TEST(LpProblem, DuplicateTermsMerge) {
    Problem p;
    const VarId x = p.add_variable(0.0, 1.0);
    const VarId y = p.add_variable(0.0, 1.0);
    p.add_constraint({{y, 1.0}, {x, 2.0}, {y, -1.0}, {x, 0.5}}, Sense::Equal, 1.0);
    const auto& terms = p.constraint(RowId{0}).terms;
    ASSERT_EQ(terms.size(), 1u);
    EXPECT_EQ(terms[0].var, x);
    EXPECT_DOUBLE_EQ(terms[0].coef, 2.5);
}

Problem tiny_model() {
    Problem p;
    const VarId x = p.add_variable(0.0, 10.0, "x");
    const VarId t = p.add_variable(-kInf, kInf, "t");
    p.set_cost(x, 1.5);
    p.set_cost(t, -0.25);
    p.set_objective_constant(2.0);
    p.add_constraint({{t, 1.0}, {x, -1.0}}, Sense::LessEqual, 0.1, "cap");
    p.add_constraint({{x, 1.0}}, Sense::GreaterEqual, 1.0);
    return p;
}

TEST(LpProblem, CanonicalTextSnapshot) {
    const std::string expected = "lp 1 vars 2 rows 2\n"
                                 "obj_const 2\n"
                                 "var 0 x 0 10 1.5\n"
                                 "var 1 t -inf inf -0.25\n"
                                 "row 0 cap <= 0.1 : -1 x0 1 x1\n"
                                 "row 1 - >= 1 : 1 x0\n";
    EXPECT_EQ(tiny_model().to_text(), expected);
    EXPECT_EQ(tiny_model().to_text(), tiny_model().to_text());
}

class BackendTest : public ::testing::TestWithParam<std::string> {
protected:
    std::unique_ptr<Solver> solver = make_solver(GetParam());
};

TEST_P(BackendTest, LowerBoundBinding) {
    Problem p;
    const VarId x = p.add_variable(0.0, 10.0);
    p.set_cost(x, 1.0);
    p.add_constraint({{x, 1.0}}, Sense::GreaterEqual, 2.0);
    const Solution s = solver->solve(p);
    ASSERT_EQ(s.status, Status::Optimal) << s.message;
    EXPECT_NEAR(s.value(x), 2.0, 1e-8);
    EXPECT_NEAR(s.objective, 2.0, 1e-8);
}

TEST_P(BackendTest, UpperBoundBinding) {
    Problem p;
    const VarId x = p.add_variable(0.0, 10.0);
    p.set_cost(x, -1.0);
    const Solution s = solver->solve(p);
    ASSERT_EQ(s.status, Status::Optimal) << s.message;
    EXPECT_NEAR(s.value(x), 10.0, 1e-8);
    EXPECT_NEAR(s.objective, -10.0, 1e-8);
}

TEST_P(BackendTest, Infeasible) {
    Problem p;
    const VarId x = p.add_variable(0.0, kInf);
    p.set_cost(x, 1.0);
    p.add_constraint({{x, 1.0}}, Sense::LessEqual, -1.0);
    EXPECT_EQ(solver->solve(p).status, Status::Infeasible);
}

TEST_P(BackendTest, VacuousRowMakesProblemInfeasible) {
    Problem p;
    const VarId x = p.add_variable(0.0, 1.0);
    p.set_cost(x, 1.0);
    p.add_constraint({}, Sense::LessEqual, -1.0);
    EXPECT_EQ(solver->solve(p).status, Status::Infeasible);
}

TEST_P(BackendTest, Unbounded) {
    Problem p;
    const VarId x = p.add_variable(0.0, kInf);
    const VarId y = p.add_variable(0.0, kInf);
    p.set_cost(x, -1.0);
    p.add_constraint({{x, 1.0}, {y, -1.0}}, Sense::LessEqual, 1.0);
    EXPECT_EQ(solver->solve(p).status, Status::Unbounded);
}

TEST_P(BackendTest, FreeVariables) {
    // min t  s.t.  t >= x - 3,  t >= 3 - x,  x + t = 4,  x and t free.
    Problem p;
    const VarId x = p.add_variable(-kInf, kInf);
    const VarId t = p.add_variable(-kInf, kInf);
    p.set_cost(t, 1.0);
    p.add_constraint({{t, 1.0}, {x, -1.0}}, Sense::GreaterEqual, -3.0);
    p.add_constraint({{t, 1.0}, {x, 1.0}}, Sense::GreaterEqual, 3.0);
    p.add_constraint({{x, 1.0}, {t, 1.0}}, Sense::Equal, 4.0);
    const Solution s = solver->solve(p);
    ASSERT_EQ(s.status, Status::Optimal) << s.message;
    EXPECT_NEAR(s.value(t), 0.5, 1e-8);
    EXPECT_NEAR(s.value(x), 3.5, 1e-8);
}

TEST_P(BackendTest, FixedColumnAndEquality) {
    Problem p;
    const VarId x = p.add_variable(2.0, 2.0);
    const VarId y = p.add_variable(0.0, 5.0);
    p.set_cost(y, 1.0);
    p.add_constraint({{x, 1.0}, {y, 1.0}}, Sense::Equal, 3.5);
    const Solution s = solver->solve(p);
    ASSERT_EQ(s.status, Status::Optimal) << s.message;
    EXPECT_NEAR(s.value(y), 1.5, 1e-8);
}

TEST_P(BackendTest, RepeatedSolvesAreBitIdentical) {
    const Problem p = tiny_model();
    const Solution a = solver->solve(p);
    const Solution b = solver->solve(p);
    ASSERT_EQ(a.status, Status::Optimal);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.objective, b.objective);
}

/// Feasible and bounded by construction: box-bounded columns and rows built
/// around a known interior point.
Problem random_lp(std::mt19937_64& rng, std::vector<double>& x0) {
    std::uniform_int_distribution<int> nd(2, 8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = nd(rng);
    const int m = nd(rng);
    Problem p;
    x0.assign(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        const VarId v = p.add_variable(-5.0, 5.0);
        p.set_cost(v, u(rng));
        x0[static_cast<std::size_t>(j)] = 2.0 * u(rng);
    }
    for (int i = 0; i < m; ++i) {
        std::vector<Term> terms;
        double act = 0.0;
        for (int j = 0; j < n; ++j) {
            if (u(rng) > 0.2) {
                const double a = u(rng);
                terms.push_back({VarId{static_cast<std::size_t>(j)}, a});
                act += a * x0[static_cast<std::size_t>(j)];
            }
        }
        if (i == 0) {
            p.add_constraint(terms, Sense::Equal, act);
        } else if (i % 2 == 0) {
            p.add_constraint(terms, Sense::LessEqual, act + 0.5 * (u(rng) + 1.0));
        } else {
            p.add_constraint(terms, Sense::GreaterEqual, act - 0.5 * (u(rng) + 1.0));
        }
    }
    return p;
}

TEST_P(BackendTest, NoSampledFeasiblePointBeatsReportedOptimum) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> x0;
        const Problem p = random_lp(rng, x0);
        const Solution s = solver->solve(p);
        ASSERT_EQ(s.status, Status::Optimal) << "trial " << trial << ": " << s.message;
        const auto [row_viol, bound_viol] = p.max_violation(s.values);
        EXPECT_LE(row_viol, kFeasibilityTol);
        EXPECT_LE(bound_viol, kBoundTol);
        EXPECT_LE(s.objective, p.objective_value(x0) + 1e-9);
        // Random points along segments from the known feasible point.
        for (int k = 0; k < 200; ++k) {
            std::vector<double> pt = x0;
            const double t = (u(rng) + 5.0) / 10.0;
            for (double& v : pt) {
                v = (1.0 - t) * v + t * u(rng);
            }
            if (p.max_violation(pt).first <= 0.0) {
                EXPECT_GE(p.objective_value(pt), s.objective - 1e-9);
            }
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Backends, BackendTest, ::testing::Values("interior-point", "dense-simplex"));

TEST(LpBackends, AgreeOnRandomInstances) {
    std::mt19937_64 rng(11);
    const InteriorPoint ipm;
    const DenseSimplex simplex;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x0;
        const Problem p = random_lp(rng, x0);
        const Solution a = ipm.solve(p);
        const Solution b = simplex.solve(p);
        ASSERT_EQ(a.status, Status::Optimal) << a.message;
        ASSERT_EQ(b.status, Status::Optimal) << b.message;
        EXPECT_NEAR(a.objective, b.objective, 1e-6 * std::max(1.0, std::abs(b.objective))) << "trial " << trial;
    }
}

TEST(LpBackends, UnknownBackendRejected) { EXPECT_THROW(make_solver("cplex"), std::invalid_argument); }

} // namespace
} // namespace drsched::lp
