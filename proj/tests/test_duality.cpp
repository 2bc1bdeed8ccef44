#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tscv/duality.hpp"
#include "tscv/error.hpp"
#include "tscv/solver.hpp"

using namespace tscv;
using fixtures::make_spec;
using fixtures::with_constraint;

namespace {

std::vector<double> pts(const TimeScale& ts) { return {ts.points().begin(), ts.points().end()}; }

double eval_at(const Expression& e, const Bindings& params, double t, double y, double v, double z) {
    Bindings b = params;
    b["t"] = t;
    b["y"] = y;
    b["v"] = v;
    b["z"] = z;
    return e.eval(b);
}

struct Case {
    ProblemSpec spec;
    GridFunction y;
};

Case random_case(std::uint64_t seed) {
    fixtures::PolyGen gen(seed);
    std::vector<double> p{gen.uniform(-1, 1)};
    const int n = gen.pick(5, 12);
    for (int i = 1; i < n; ++i) p.push_back(p.back() + gen.uniform(0.05, 0.7));
    const auto ts = TimeScale::from_points(p);
    const std::size_t ia = static_cast<std::size_t>(gen.pick(0, 1));
    const std::size_t ib = ts.size() - 1 - static_cast<std::size_t>(gen.pick(0, 1));
    const bool free_left = gen.pick(0, 2) == 0;
    const bool free_right = ib + 1 < ts.size() && gen.pick(0, 1) == 0;
    auto spec = make_spec(ts, ts[ia], ts[ib], Flavor::delta, gen.integrand(gen.pick(0, 4) != 0), gen.generator(),
                          free_left ? Boundary::free() : Boundary::fixed(gen.uniform(-1, 1)),
                          free_right ? Boundary::free() : Boundary::fixed(gen.uniform(-1, 1)));
    if (gen.pick(0, 1)) spec = with_constraint(std::move(spec), gen.integrand(true), gen.uniform(-1, 1));
    const Problem prob(spec);
    return {spec, fixtures::random_trajectory(prob, gen)};
}

}  // namespace

TEST(DualizeScale, Negates) {
    EXPECT_EQ(pts(dualize_scale(TimeScale::from_points({0, 1, 3}))), (std::vector<double>{-3, -1, 0}));
}

TEST(DualizeScale, UniformStaysUniform) {
    const auto d = dualize_scale(TimeScale::uniform(0, 1, 11));
    for (std::size_t i = 1; i < d.size(); ++i) EXPECT_NEAR(d[i] - d[i - 1], 0.1, 1e-15);
}

TEST(DualizeScale, JumpsSwapRoles) {
    const auto ts = TimeScale::q_scale(2, 1, 8);
    const auto d = dualize_scale(ts);
    EXPECT_EQ(pts(d), (std::vector<double>{-8, -4, -2, -1}));
    EXPECT_EQ(d.jumps(-4).sigma, -2.0);
    EXPECT_EQ(-ts.jumps(4).rho, -2.0);
    for (double t : ts.points()) {
        EXPECT_EQ(d.jumps(-t).sigma, -ts.jumps(t).rho);
        EXPECT_EQ(d.jumps(-t).nu, ts.jumps(t).mu);
    }
}

TEST(DualizeScale, Involution) {
    const auto ts = TimeScale::from_points({-0.3, 0.1, 0.7, 2.9, 3.0});
    EXPECT_EQ(pts(dualize_scale(dualize_scale(ts))), pts(ts));
}

TEST(DualizeProblem, EvenKineticIsUnchanged) {
    const auto spec = make_spec(TimeScale::uniform(0, 1, 5), 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0),
                                Boundary::fixed(1));
    const auto dual = dualize_problem(spec);
    EXPECT_EQ(dual.lagrangian.to_string(), "v^2");
    EXPECT_EQ(dual.flavor, Flavor::nabla);
    EXPECT_EQ(dual.a, -1);
    EXPECT_EQ(dual.b, 0);
    EXPECT_EQ(dual.left.value, 1);
    EXPECT_EQ(dual.right.value, 0);
}

TEST(DualizeProblem, OddTermFlipsSign) {
    const auto spec = make_spec(TimeScale::uniform(0, 1, 5), 0, 1, Flavor::delta, "v", "0", Boundary::fixed(0),
                                Boundary::fixed(1));
    EXPECT_EQ(dualize_problem(spec).lagrangian.to_string(), "-v");
}

TEST(DualizeProblem, RunningIntegralReverses) {
    // z(t) = Z - z*(-t): both sides count the same increments from opposite ends.
    const auto ts = TimeScale::from_points({0, 0.3, 1, 1.5});
    const auto spec = make_spec(ts, 0, 1.5, Flavor::delta, "v^2 + z", "v", Boundary::fixed(0), Boundary::fixed(2));
    const auto pair = make_dual_pair(spec);
    const Problem primal(pair.primal), dual(pair.dual);
    const GridFunction y(ts, 0, {0, 0.7, -0.4, 2});
    const auto z = accumulate_z(primal, y);
    const auto zd = accumulate_z(dual, reflect(y, dual.scale()));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(z(i), z(3) - zd(3 - i), 1e-14);
    EXPECT_LE(duality_check(pair, y), 1e-9);
}

TEST(DualizeProblem, NotDualizable) {
    for (const char* l : {"v^2 + z^2", "y*z", "v*z", "sin(z)"}) {
        const auto spec = make_spec(TimeScale::uniform(0, 1, 5), 0, 1, Flavor::delta, l, "v", Boundary::fixed(0),
                                    Boundary::fixed(1));
        try {
            dualize_problem(spec);
            FAIL() << l;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NotDualizable);
        }
    }
}

TEST(DualizeProblem, PairNeedsDeltaPrimal) {
    const auto spec = make_spec(TimeScale::uniform(0, 1, 5), 0, 1, Flavor::nabla, "v^2", "0", Boundary::fixed(0),
                                Boundary::fixed(1));
    try {
        make_dual_pair(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FlavorMismatch);
    }
}

TEST(DualityCheck, ConstantPotential) {
    const auto ts = TimeScale::uniform(0, 1, 7);
    const auto pair = make_dual_pair(make_spec(ts, 0, 1, Flavor::delta, "y^2", "0", Boundary::fixed(3), Boundary::fixed(3)));
    EXPECT_EQ(duality_check(pair, GridFunction(ts, 0, std::vector<double>(7, 3.0))), 0.0);
}

TEST(DualityCheck, KineticOnUniform) {
    fixtures::PolyGen gen(1);
    const auto ts = TimeScale::uniform(0, 1, 11);
    const auto pair = make_dual_pair(make_spec(ts, 0, 1, Flavor::delta, "v^2 + t*y", "0", Boundary::fixed(0),
                                               Boundary::fixed(1)));
    auto v = gen.values(11);
    v.front() = 0;
    v.back() = 1;
    EXPECT_LE(duality_check(pair, GridFunction(ts, 0, v)), 1e-10);
}

TEST(DualityCheck, RunningIntegralOnIrregularScale) {
    fixtures::PolyGen gen(2);
    const auto ts = TimeScale::from_points({0, 0.3, 1, 1.5});
    const auto pair = make_dual_pair(make_spec(ts, 0, 1.5, Flavor::delta, "v^2 + z", "v", Boundary::fixed(0),
                                               Boundary::fixed(1)));
    auto v = gen.values(4);
    v.front() = 0;
    v.back() = 1;
    EXPECT_LE(duality_check(pair, GridFunction(ts, 0, v)), 1e-9);
}

TEST(DualityCheck, Mismatches) {
    const auto ts = TimeScale::uniform(0, 1, 5);
    auto pair = make_dual_pair(make_spec(ts, 0, 1, Flavor::delta, "v^2", "0", Boundary::fixed(0), Boundary::fixed(1)));
    const auto y = GridFunction::sample(ts, 0, 4, [](double t) { return t; });
    auto wrong_scale = pair;
    wrong_scale.dual.scale = TimeScale::from_points({-1, -0.8, -0.5, -0.25, 0});
    try {
        duality_check(wrong_scale, y);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ScaleMismatch);
    }
    auto wrong_flavor = pair;
    wrong_flavor.dual.flavor = Flavor::delta;
    try {
        duality_check(wrong_flavor, y);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FlavorMismatch);
    }
}

class DualityProperty : public ::testing::TestWithParam<int> {};

TEST_P(DualityProperty, ResidualsCorrespond) {
    const auto c = random_case(8000 + GetParam());
    const auto pair = make_dual_pair(c.spec);
    fixtures::PolyGen gen(GetParam());
    const Multipliers m{gen.uniform(0.5, 2), c.spec.constraint ? gen.uniform(-1, 1) : 0.0};
    EXPECT_LE(duality_check(pair, c.y, m), 1e-9) << c.spec.lagrangian.to_string();
}

TEST_P(DualityProperty, ObjectivePreserved) {
    const auto c = random_case(8000 + GetParam());
    const auto pair = make_dual_pair(c.spec);
    const Problem primal(pair.primal), dual(pair.dual);
    const auto fp = evaluate_functionals(primal, c.y);
    const auto fd = evaluate_functionals(dual, reflect(c.y, dual.scale()));
    EXPECT_LE(std::abs(fp.objective - fd.objective), 1e-10 * (1 + std::abs(fp.objective)));
    if (fp.constraint) EXPECT_LE(std::abs(*fp.constraint - *fd.constraint), 1e-10 * (1 + std::abs(*fp.constraint)));
}

TEST_P(DualityProperty, DualizingTwiceRestoresIntegrands) {
    const auto c = random_case(8000 + GetParam());
    const auto twice = dualize_problem(dualize_problem(c.spec));
    EXPECT_EQ(twice.flavor, Flavor::delta);
    EXPECT_EQ(pts(twice.scale), pts(c.spec.scale));
    EXPECT_EQ(twice.a, c.spec.a);
    EXPECT_EQ(twice.b, c.spec.b);
    fixtures::PolyGen gen(GetParam());
    for (int k = 0; k < 10; ++k) {
        const double t = gen.uniform(-2, 2), y = gen.uniform(-2, 2), v = gen.uniform(-2, 2), z = gen.uniform(-2, 2);
        const double l1 = eval_at(c.spec.lagrangian, {}, t, y, v, z);
        EXPECT_NEAR(eval_at(twice.lagrangian, {}, t, y, v, z), l1, 1e-12 * (1 + std::abs(l1)));
        const double g1 = eval_at(c.spec.generator, {}, t, y, v, z);
        EXPECT_NEAR(eval_at(twice.generator, {}, t, y, v, z), g1, 1e-12 * (1 + std::abs(g1)));
    }
}

INSTANTIATE_TEST_SUITE_P(Random, DualityProperty, ::testing::Range(0, 120));
