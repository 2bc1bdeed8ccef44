#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tscv/error.hpp"
#include "tscv/solver.hpp"

using namespace tscv;
using fixtures::make_spec;
using fixtures::with_constraint;

namespace {

double sup_error(const GridFunction& y, double (*f)(double)) {
    double e = 0.0;
    for (std::size_t i = y.first(); i <= y.last(); ++i) e = std::max(e, std::abs(y(i) - f(y.time(i))));
    return e;
}

ProblemSpec quadratic_iso(std::size_t n, double gamma = 1.0 / 6) {
    return with_constraint(make_spec(TimeScale::uniform(0, 1, n), 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0),
                                     Boundary::fixed(0)),
                           "y", gamma);
}

// Convex quadratic family: p v^2 + c y^2 + e t y + f v + k z with z = int v.
ProblemSpec convex_case(fixtures::PolyGen& gen, std::size_t points, bool constrained) {
    std::vector<double> pts{0};
    for (std::size_t i = 1; i < points; ++i) pts.push_back(pts.back() + gen.uniform(0.1, 0.5));
    const auto ts = TimeScale::from_points(pts);
    const Flavor flavor = gen.pick(0, 1) ? Flavor::delta : Flavor::nabla;
    const bool free_left = gen.pick(0, 3) == 0;
    const bool free_right = gen.pick(0, 3) == 0;
    const std::size_t ia = 1, ib = ts.size() - 2;
    const Bindings params{{"p", gen.uniform(0.5, 2)}, {"c", gen.uniform(0, 2)}, {"e", gen.uniform(-1, 1)},
                          {"f", gen.uniform(-1, 1)}, {"k", gen.uniform(-1, 1)}};
    auto spec = make_spec(ts, ts[ia], ts[ib], flavor, "p*v^2 + c*y^2 + e*t*y + f*v + k*z", "v",
                          free_left ? Boundary::free() : Boundary::fixed(gen.uniform(-1, 1)),
                          free_right ? Boundary::free() : Boundary::fixed(gen.uniform(-1, 1)), params);
    if (constrained) spec = with_constraint(std::move(spec), "y", gen.uniform(-0.5, 0.5));
    return spec;
}

std::vector<double> grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return g;
}

}  // namespace

TEST(Functionals, KineticOfIdentity) {
    for (std::size_t n : {5u, 11u, 101u}) {
        const auto ts = TimeScale::uniform(0, 1, n);
        const Problem p(make_spec(ts, 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0), Boundary::fixed(1)));
        const auto y = GridFunction::sample(ts, 0, n - 1, [](double t) { return t; });
        EXPECT_NEAR(evaluate_functionals(p, y).objective, 1.0, 1e-13);
        EXPECT_FALSE(evaluate_functionals(p, y).constraint);
    }
}

TEST(Functionals, ConstantConstraint) {
    const auto ts = TimeScale::from_points({0, 0.3, 1.2, 2, 2.5});
    const Problem p(with_constraint(
        make_spec(ts, 0.3, 2.5, Flavor::delta, "v^2", "0", Boundary::fixed(0.7), Boundary::fixed(0.7)), "y", 1));
    const auto f = evaluate_functionals(p, GridFunction(ts, 1, {0.7, 0.7, 0.7, 0.7}));
    EXPECT_NEAR(*f.constraint, 0.7 * 2.2, 1e-15);
}

TEST(Functionals, ExampleAtZero) {
    const auto ts = TimeScale::uniform(0, 1, 11);
    const Problem p(with_constraint(make_spec(ts, 0, 1, Flavor::nabla, "v^2 - q0*y^2 + 2*z", "v", Boundary::fixed(0),
                                              Boundary::fixed(0), {{"q0", 0}}),
                                    "y^2", 1));
    const auto f = evaluate_functionals(p, GridFunction(ts, 0, std::vector<double>(11, 0.0)));
    EXPECT_EQ(f.objective, 0.0);
    EXPECT_EQ(*f.constraint, 0.0);
}

TEST(Gradient, ZeroAtExtremal) {
    const auto ts = TimeScale::uniform(0, 1, 21);
    const Problem p(make_spec(ts, 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0), Boundary::fixed(1)));
    const auto g = gradient(p, initial_guess(p));
    ASSERT_EQ(g.coordinates.size(), 19u);
    for (double d : g.objective) EXPECT_LE(std::abs(d), 1e-8);
}

TEST(Gradient, SingleCoordinateByHand) {
    const auto ts = TimeScale::from_points({0, 0.4, 1});
    const Problem p(make_spec(ts, 0, 1, Flavor::delta, "y^2", "0", Boundary::fixed(0.5), Boundary::fixed(2)));
    const GridFunction y(ts, 0, {0.5, -0.7, 2});
    const auto g = gradient(p, y);
    ASSERT_EQ(g.coordinates, std::vector<std::size_t>{1});
    // Only the term at t = 0 sees y(0.4) = y(sigma(0)).
    EXPECT_NEAR(g.objective[0], 2 * ts.mu(0) * y(1), 1e-9);
}

TEST(Gradient, DirectionalDerivative) {
    fixtures::PolyGen gen(17);
    for (int k = 0; k < 20; ++k) {
        const auto ts = TimeScale::uniform(0, 2, 9);
        auto spec = make_spec(ts, ts[1], ts[7], k % 2 ? Flavor::delta : Flavor::nabla, gen.integrand(true),
                              gen.generator(), Boundary::fixed(0.1), Boundary::free());
        spec = with_constraint(std::move(spec), gen.integrand(true), 0);
        const Problem p(spec);
        const auto y = fixtures::random_trajectory(p, gen);
        const auto g = gradient(p, y);
        std::vector<double> eta = gen.values(g.coordinates.size());
        const double eps = 1e-4;
        auto shifted = [&](double s) {
            std::vector<double> v(y.values().begin(), y.values().end());
            for (std::size_t j = 0; j < eta.size(); ++j) v[g.coordinates[j] - y.first()] += s * eta[j];
            return evaluate_functionals(p, GridFunction(ts, y.first(), v));
        };
        const auto up = shifted(eps), down = shifted(-eps);
        double dl = 0, df = 0;
        for (std::size_t j = 0; j < eta.size(); ++j) {
            dl += g.objective[j] * eta[j];
            df += (*g.constraint)[j] * eta[j];
        }
        EXPECT_NEAR(dl, (up.objective - down.objective) / (2 * eps), 1e-6 * (1 + std::abs(dl)));
        EXPECT_NEAR(df, (*up.constraint - *down.constraint) / (2 * eps), 1e-6 * (1 + std::abs(df)));
    }
}

class GradientIdentity : public ::testing::TestWithParam<int> {};

// d/dy_j of the functional is the graininess-weighted residual at the point
// whose shift is t_j, plus boundary terms at free ends.
TEST_P(GradientIdentity, MatchesWeightedResidual) {
    fixtures::PolyGen gen(700 + GetParam());
    std::vector<double> pts{0};
    for (int i = 0; i < 8; ++i) pts.push_back(pts.back() + gen.uniform(0.2, 0.6));
    const auto ts = TimeScale::from_points(pts);
    const Flavor flavor = GetParam() % 2 ? Flavor::delta : Flavor::nabla;
    const auto spec = make_spec(ts, ts[1], ts[7], flavor, gen.integrand(true), gen.generator(), Boundary::free(),
                                Boundary::free());
    const Problem p(spec);
    const auto y = fixtures::random_trajectory(p, gen);
    const auto g = gradient(p, y);
    const auto r = el_residual(p, Trajectory(p, y));
    const std::size_t ia = p.ia(), ib = p.ib();
    for (std::size_t k = 0; k < g.coordinates.size(); ++k) {
        const std::size_t j = g.coordinates[k];
        double expected = 0.0;
        if (flavor == Flavor::delta) {
            if (j > ia) expected += ts.mu(j - 1) * r.pointwise.at(j - 1);
            if (j == ia) expected -= *r.boundary_left;
            if (j == ib) expected += *r.boundary_right;
        } else {
            if (j < ib) expected += ts.nu(j + 1) * r.pointwise.at(j + 1);
            if (j == ia) expected -= *r.boundary_left;
            if (j == ib) expected += *r.boundary_right;
        }
        EXPECT_NEAR(g.objective[k], expected, 1e-6 * (1 + std::abs(expected))) << "index " << j;
    }
}

INSTANTIATE_TEST_SUITE_P(Random, GradientIdentity, ::testing::Range(0, 20));

TEST(Solve, LinearExtremal) {
    const auto ts = TimeScale::uniform(0, 1, 101);
    const Problem p(make_spec(ts, 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0), Boundary::fixed(1)));
    // Start away from the answer so the optimizer has work to do.
    const auto y0 = GridFunction::sample(ts, 0, 100, [](double t) { return t * t; });
    const auto sol = solve_unconstrained(p, {}, y0);
    EXPECT_TRUE(sol.converged) << sol.message;
    EXPECT_LE(sup_error(sol.y, [](double t) { return t; }), 1e-8);
    EXPECT_LE(sol.report.max_abs, 1e-7);
}

TEST(Solve, FreeRightGivesZero) {
    const auto ts = TimeScale::uniform(0, 1.1, 12);
    const Problem p(make_spec(ts, 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0), Boundary::free()));
    const auto sol = solve_unconstrained(p, {}, GridFunction::sample(ts, 0, 11, [](double t) { return t; }));
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(sup_error(sol.y, [](double) { return 0.0; }), 1e-8);
    ASSERT_TRUE(sol.report.boundary_right);
    EXPECT_LE(std::abs(*sol.report.boundary_right), 1e-7);
}

TEST(Solve, MatchesOracleOnCoarseScale) {
    const auto spec = make_spec(TimeScale::uniform(0, 1, 6), 0, 1, Flavor::delta, "v^2 + y^2", "0", Boundary::fixed(0),
                                Boundary::fixed(1));
    const Problem p(spec);
    const auto sol = solve(p);
    ASSERT_TRUE(sol.converged);
    // Coarse sweep, then a finer grid around the coarse optimum.
    const auto coarse = brute_force_oracle(p, std::vector<std::vector<double>>(4, grid(0, 1, 21)));
    std::vector<std::vector<double>> fine;
    for (std::size_t i = 1; i <= 4; ++i) fine.push_back(grid(coarse.y(i) - 0.05, coarse.y(i) + 0.05, 21));
    const auto refined = brute_force_oracle(p, fine);
    EXPECT_LE(sol.objective, refined.objective + 1e-9);
    EXPECT_LE(std::abs(sol.objective - refined.objective), 1e-4);
    for (std::size_t i = 1; i <= 4; ++i) EXPECT_NEAR(sol.y(i), refined.y(i), 5e-3);
    // The fine-scale solution is the same curve up to discretization error.
    const Problem fine_p(make_spec(TimeScale::uniform(0, 1, 51), 0, 1, Flavor::delta, "v^2 + y^2", "0",
                                   Boundary::fixed(0), Boundary::fixed(1)));
    const auto fine_sol = solve(fine_p);
    ASSERT_TRUE(fine_sol.converged);
    for (std::size_t i = 1; i <= 4; ++i) EXPECT_NEAR(fine_sol.y(10 * i), sol.y(i), 2e-2);
}

TEST(Solve, MaximizeNegatesObjective) {
    const auto ts = TimeScale::uniform(0, 1, 11);
    const Problem p(make_spec(ts, 0, 1, Flavor::delta, "-v^2 + y", "0", Boundary::fixed(0), Boundary::fixed(0)));
    auto spec = p.spec();
    spec.sense = Sense::maximize;
    const Problem pmax(spec);
    const auto sol = solve(pmax);
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(sol.report.max_abs, 1e-6);
    const Problem pmin(make_spec(ts, 0, 1, Flavor::delta, "v^2 - y", "0", Boundary::fixed(0), Boundary::fixed(0)));
    const auto ref = solve(pmin);
    EXPECT_NEAR(sol.objective, -ref.objective, 1e-10);
}

TEST(Solve, UnconstrainedRejectsConstraint) {
    try {
        solve_unconstrained(Problem(quadratic_iso(11)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ValidationError);
    }
}

TEST(Isoperimetric, QuadraticRecoversMultiplier) {
    const Problem p(quadratic_iso(201));
    SolveOptions opts;
    opts.max_iter = 3000;
    const auto sol = solve_isoperimetric(p, opts);
    EXPECT_TRUE(sol.converged) << sol.message;
    EXPECT_LE(sup_error(sol.y, [](double t) { return t * (1 - t); }), 2e-3);
    ASSERT_TRUE(sol.lam);
    EXPECT_NEAR(*sol.lam, 4.0, 0.05);
    EXPECT_EQ(sol.lam0, 1.0);
    EXPECT_LE(std::abs(*sol.constraint_value - 1.0 / 6), 1e-8);
    EXPECT_TRUE(sol.report.satisfied());
    EXPECT_EQ(classify_normality(p, sol), Normality::normal);
}

TEST(Isoperimetric, ConstantSolution) {
    const auto ts = TimeScale::h_scale(0.1, 0, 1);
    const Problem p(with_constraint(make_spec(ts, 0, 1, Flavor::nabla, "y^2 + z", "v", Boundary::fixed(0.5),
                                              Boundary::fixed(0.5)),
                                    "y", 0.5));
    const auto sol = solve(p);
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(sup_error(sol.y, [](double) { return 0.5; }), 1e-6);
    EXPECT_NEAR(*sol.lam, 2.0, 1e-5);
}

TEST(Isoperimetric, UnattainableConstraintStagnates) {
    // int y^2 = -1 has no solution; the penalty grows until the loop gives up.
    const auto ts = TimeScale::uniform(0, 1, 11);
    const Problem p(with_constraint(make_spec(ts, 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0), Boundary::fixed(0)),
                                    "y^2", -1));
    const auto sol = solve(p);
    EXPECT_FALSE(sol.converged);
    EXPECT_EQ(sol.status, SolveStatus::stagnation);
    EXPECT_NE(sol.message.find("infeasible"), std::string::npos);
}

TEST(Isoperimetric, MultiplierLinearInGamma) {
    SolveOptions opts;
    opts.max_iter = 2000;
    const auto s1 = solve(Problem(quadratic_iso(41, 0.1)), opts);
    const auto s2 = solve(Problem(quadratic_iso(41, 0.2)), opts);
    ASSERT_TRUE(s1.converged && s2.converged);
    EXPECT_NEAR(*s2.lam, 2 * *s1.lam, 1e-4);
    for (std::size_t i = 0; i < 41; ++i) EXPECT_NEAR(s2.y(i), 2 * s1.y(i), 1e-4);
}

TEST(Normality, SturmExampleIsNormal) {
    const auto ts = TimeScale::uniform(0, 1, 21);
    const Problem p(with_constraint(make_spec(ts, 0, 1, Flavor::nabla, "v^2 - q0*y^2 + 2*z", "v", Boundary::fixed(0),
                                              Boundary::fixed(0), {{"q0", 0}}),
                                    "y^2", 1));
    SolveOptions opts;
    opts.max_iter = 2000;
    const auto y0 = GridFunction::sample(ts, 0, 20, [](double t) { return std::sqrt(2.0) * std::sin(M_PI * t); });
    const auto sol = solve(p, opts, y0);
    EXPECT_TRUE(sol.converged) << sol.message;
    EXPECT_EQ(classify_normality(p, sol), Normality::normal);
}

TEST(Normality, ZeroIsAbnormalForSquareConstraint) {
    const auto ts = TimeScale::uniform(0, 1, 11);
    const Problem p(with_constraint(make_spec(ts, 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0), Boundary::fixed(0)),
                                    "y^2", 0));
    const auto sol = solve(p);
    EXPECT_TRUE(sol.converged);
    EXPECT_EQ(classify_normality(p, sol), Normality::abnormal);
}

TEST(Oracle, NearestGridValue) {
    const auto ts = TimeScale::from_points({0, 0.33, 1, 1.5});
    const Problem p(make_spec(ts, 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0), Boundary::fixed(1)));
    const auto r = brute_force_oracle(p, {grid(0, 1, 41)});
    EXPECT_DOUBLE_EQ(r.y(1), 0.325);
    EXPECT_EQ(r.candidates, 41u);
    const auto sol = solve(p);
    EXPECT_NEAR(sol.y(1), 0.33, 1e-9);
    EXPECT_LE(sol.objective, r.objective);
}

TEST(Oracle, TiesGoToLexicographicallySmallest) {
    const auto ts = TimeScale::uniform(0, 1, 5);
    const Problem p(make_spec(ts, 0, 1, Flavor::delta, "1", "0", Boundary::fixed(0), Boundary::fixed(0)));
    const auto r = brute_force_oracle(p, {{0.5, -1, 1}, {2, 3}, {0, -0.5}});
    EXPECT_EQ(r.y(1), -1);
    EXPECT_EQ(r.y(2), 2);
    EXPECT_EQ(r.y(3), -0.5);
}

TEST(Oracle, Errors) {
    const auto ts = TimeScale::uniform(0, 1, 9);
    const Problem p(make_spec(ts, 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0), Boundary::fixed(0)));
    try {
        brute_force_oracle(p, std::vector<std::vector<double>>(7, grid(0, 1, 3)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SearchSpaceTooLarge);
    }
    const Problem small(make_spec(TimeScale::uniform(0, 1, 7), 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0),
                                  Boundary::fixed(0)));
    try {
        brute_force_oracle(small, std::vector<std::vector<double>>(5, grid(0, 1, 41)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SearchSpaceTooLarge);
    }
    const Problem con(with_constraint(
        make_spec(TimeScale::uniform(0, 1, 5), 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0), Boundary::fixed(0)),
        "y", 10));
    try {
        brute_force_oracle(con, std::vector<std::vector<double>>(3, grid(0, 1, 5)), 1e-3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyFeasibleSet);
    }
}

class Certification : public ::testing::TestWithParam<int> {};

TEST_P(Certification, ConvergedSolutionsSatisfyNecessaryConditions) {
    fixtures::PolyGen gen(900 + GetParam());
    const auto spec = convex_case(gen, 10 + GetParam() % 7, GetParam() % 3 == 0);
    const Problem p(spec);
    SolveOptions opts;
    opts.max_iter = 2000;
    const auto sol = solve(p, opts);
    ASSERT_TRUE(sol.converged) << sol.message;
    EXPECT_LE(sol.grad_norm, opts.tol_grad);
    if (p.has_constraint()) EXPECT_LE(std::abs(*sol.constraint_value - *spec.gamma), opts.tol_con);
    EXPECT_TRUE(sol.report.satisfied(opts.tol_residual))
        << "max_abs " << sol.report.max_abs << " scale " << sol.report.d2h_scale;
}

INSTANTIATE_TEST_SUITE_P(Random, Certification, ::testing::Range(0, 24));

TEST(OracleDominance, SmallConvexSpecs) {
    fixtures::PolyGen gen(31);
    for (int k = 0; k < 10; ++k) {
        const auto spec = convex_case(gen, 5, false);
        const Problem p(spec);
        const auto coords = free_coordinates(p);
        if (coords.size() > 4) continue;
        const auto sol = solve(p);
        ASSERT_TRUE(sol.converged);
        const auto r = brute_force_oracle(p, std::vector<std::vector<double>>(coords.size(), grid(-2, 2, 21)));
        EXPECT_LE(sol.objective, r.objective + 1e-9);
    }
}
