#include <gtest/gtest.h>

#include "ldx/hyperbolic.hpp"
#include "support.hpp"

using namespace ldx;
using namespace ldx::hyp;

namespace {

QuadOp constant_op(const Window& w, double a, double b, double c, double d) {
    return {w, Field::constant(w, a), Field::constant(w, b), Field::constant(w, c), Field::constant(w, d)};
}

QuadOp random_op(prop::Gen& g, const Window& w) {
    return {w, g.positive_field(w, 2.5, 3.5), g.positive_field(w, 0.6, 1.4), g.positive_field(w, 0.6, 1.4),
            g.positive_field(w, 0.6, 1.4)};
}

QuadOp smooth_op(prop::Gen& g, const Window& w) {
    double p[8];
    for (double& x : p) x = g.uniform(0.1, 0.4);
    auto s = [&](double amp, double k1, double k2, double base) {
        return Field::real(w, [=](const Vec& n) { return base + amp * std::sin(k1 * n[0] + k2 * n[1]); });
    };
    return {w, s(0.3, p[0], p[1], 3.0), s(0.2, p[2], p[3], 1.0), s(0.2, p[4], p[5], 1.2), s(0.2, p[6], p[7], 0.9)};
}

double max_rel(const Field& x, const Field& y) {
    double m = 0;
    auto D = intersect(x.window, y.window);
    D->for_each([&](std::size_t, const Vec& p) { m = std::max(m, std::abs(x[p] - y[p]) / std::abs(x[p])); });
    return m;
}

} // namespace

TEST(HypFactorize, ConstantFormA) {
    auto w = Window::square(0, 4);
    auto F = factorize_a(constant_op(w, 3, 1, 2, 2));
    for (auto [fld, val] : {std::pair{&F.f, 1.0}, {&F.u, 1.0}, {&F.v, 2.0}, {&F.w, 2.0}})
        for (auto x : fld->values) EXPECT_DOUBLE_EQ(x.real(), val);
}

TEST(HypFactorize, FreeOperatorHasZeroPotential) {
    auto w = Window::square(0, 4);
    auto L = constant_op(w, 1, 1, 1, 1);
    auto F = factorize_a(L);
    for (auto x : F.w.values) EXPECT_EQ(x, 0.0);
    for (auto x : factorize_b(L).w.values) EXPECT_EQ(x, 0.0);
    try {
        laplace_first(L);
        FAIL();
    } catch (const ComputeError& e) {
        EXPECT_EQ(e.code, ErrorCode::Degenerate);
    }
    EXPECT_THROW(laplace_second(L), ComputeError);
}

TEST(HypFactorize, ConstantFormB) {
    auto w = Window::square(0, 4);
    auto L = constant_op(w, 3, 1, 2, 2);
    auto F = factorize_b(L);
    // b = f'u', c = f'v', d = f'v'u'_{+T2}, a = f'(1+w')
    F.domain().for_each([&](std::size_t i, const Vec& p) {
        EXPECT_NEAR((F.f.values[i] * F.u.values[i]).real(), 1.0, 1e-15);
        EXPECT_NEAR((F.f.values[i] * F.v.values[i]).real(), 2.0, 1e-15);
        EXPECT_NEAR((F.f.values[i] * (1.0 + F.w.values[i])).real(), 3.0, 1e-15);
        (void)p;
    });
    auto c = interior_equal(F.reconstruct().op(), L.op(), 1e-14);
    EXPECT_TRUE(c) << c.deviation;
}

TEST(HypFactorize, ReconstructionAndUniqueness) {
    prop::Gen g(11);
    for (int t = 0; t < 20; ++t) {
        auto w = Window(2, {-3, -2, 0}, {5, 6, 0});
        auto L = random_op(g, w);
        for (bool b : {false, true}) {
            auto F = b ? factorize_b(L) : factorize_a(L);
            ASSERT_GE(F.reconstruct().domain().size(), 30u);
            auto c = interior_equal_rel(F.reconstruct().op(), L.op(), 1e-13);
            EXPECT_TRUE(c) << c.deviation;
        }
        auto F1 = factorize_a(L), F2 = factorize_a(L);
        EXPECT_EQ(F1.w.values, F2.w.values);
        EXPECT_EQ(F1.u.values, F2.u.values);
    }
}

TEST(HypInvariants, ConstantValues) {
    auto w = Window::square(0, 4);
    auto I = invariants(constant_op(w, 3, 1, 2, 2));
    for (auto x : I.K1.values) EXPECT_NEAR(x.real(), 1.0 / 3, 1e-15);
    for (auto x : I.K2.values) EXPECT_NEAR(x.real(), 1.0 / 3, 1e-15);
    auto J = invariants(constant_op(w, 1, 1, 1, 1));
    for (auto x : J.K1.values) EXPECT_EQ(x, 1.0);
}

TEST(HypInvariants, RelationToPotentialAndCurvature) {
    prop::Gen g(12);
    auto w = Window::square(0, 7);
    auto L = random_op(g, w);
    auto I = invariants(L);
    I.H.window.for_each([&](std::size_t i, const Vec& n) {
        EXPECT_NEAR(I.K1[n].real(), 1.0 / (1.0 + I.w[n + T1].real()), 1e-13);
        EXPECT_NEAR(I.K2[n].real(), I.H.values[i].real() / (1.0 + I.w[n + T2].real()), 1e-13);
    });
}

TEST(HypInvariants, GaugeInvariance) {
    prop::Gen g(13);
    auto w = Window::square(0, 9);
    for (int t = 0; t < 100; ++t) {
        auto L = random_op(g, w);
        auto f = Field::real(w, [&](const Vec&) { return g.lognormal(0.5) * (g.integer(0, 1) ? 1 : -1); });
        auto h = Field::real(w, [&](const Vec&) { return g.lognormal(0.5); });
        auto G = gauge_transform(L, f, h);
        EXPECT_LT(invariant_distance(invariants(L), invariants(G)), 1e-12);
    }
}

TEST(HypInvariants, TrivialGauge) {
    prop::Gen g(14);
    auto w = Window::square(0, 5);
    auto L = random_op(g, w);
    auto one = Field::constant(w, 1.0);
    EXPECT_TRUE(interior_equal(gauge_transform(L, one, one).op(), L.op(), 0.0));
    auto G = gauge_transform(L, Field::constant(w, 2.0), Field::constant(w, 0.5));
    EXPECT_TRUE(interior_equal(G.op(), L.op(), 1e-15));
    EXPECT_THROW(gauge_transform(L, Field::constant(w, 0.0), one), ComputeError);
}

TEST(Laplace, ConstantCaseTwoPaths) {
    auto w = Window::square(0, 8);
    auto L = constant_op(w, 3, 1, 2, 2);
    auto Lt = laplace_first(L);
    auto I = invariants(L);
    auto step = laplace_on_invariants(I.w, I.H);
    auto It = invariants(Lt);
    EXPECT_LT(max_rel(It.w, step.w), 1e-14);
    EXPECT_LT(max_rel(It.H, step.H), 1e-14);
}

TEST(Laplace, TwoPathConsistency) {
    prop::Gen g(15);
    for (int t = 0; t < 50; ++t) {
        auto w = Window::square(0, 9);
        auto L = random_op(g, w);
        auto I = invariants(L);
        auto step = laplace_on_invariants(I.w, I.H);
        auto It = invariants(laplace_first(L));
        EXPECT_LT(max_rel(It.w, step.w), 1e-10);
        EXPECT_LT(max_rel(It.H, step.H), 1e-10);
    }
}

TEST(Laplace, SolutionTransport) {
    prop::Gen g(16);
    for (int t = 0; t < 10; ++t) {
        auto w = Window::square(0, 10);
        auto L = random_op(g, w);
        auto psi = goursat_solution(L, [&](const Vec&) { return g.uniform(-1, 1); });
        ASSERT_EQ(psi.window, w);
        EXPECT_LT(apply(L.op(), psi).max_abs(), 1e-12 * psi.max_abs());
        for (bool second : {false, true}) {
            auto Lt = second ? laplace_second(L) : laplace_first(L);
            auto phi = second ? laplace_second_map(L, psi) : laplace_first_map(L, psi);
            Field full(w);
            phi.window.for_each([&](std::size_t i, const Vec& p) { full[p] = phi.values[i]; });
            auto r = apply(Lt.op().restricted(*shrink(phi.window, {T12})), full);
            EXPECT_LT(r.max_abs(), 1e-11 * phi.max_abs());
        }
    }
}

TEST(Laplace, MutuallyInverseAtInvariantLevel) {
    prop::Gen g(17);
    for (int t = 0; t < 20; ++t) {
        auto w = Window::square(0, 9);
        auto L = random_op(g, w);
        EXPECT_LT(invariant_distance(invariants(L), invariants(laplace_second(laplace_first(L)))), 1e-10);
        EXPECT_LT(invariant_distance(invariants(L), invariants(laplace_first(laplace_second(L)))), 1e-10);
    }
    auto c = constant_op(Window::square(0, 6), 3, 1, 2, 2);
    auto I0 = invariants(c), I2 = invariants(laplace_second(laplace_first(c)));
    EXPECT_LT(invariant_distance(I0, I2), 1e-14);
}

TEST(Laplace, InvariantStepRejectsZeros) {
    auto w = Window::square(0, 4);
    auto wf = Field::constant(w, 2.0);
    auto H = Field::constant(w, 1.0);
    wf[Vec{2, 2, 0}] = 0.0;
    try {
        laplace_on_invariants(wf, H);
        FAIL();
    } catch (const ComputeError& e) {
        EXPECT_EQ(e.code, ErrorCode::ZeroPivot);
    }
}

TEST(Toda, ConstantFixedPoint) {
    auto w = Window::square(0, 8);
    auto chain = toda_chain(Field::constant(w, 2.0), Field::constant(w, 1.0), 4);
    for (auto& x : chain)
        for (auto v : x.values) EXPECT_EQ(v, 2.0);
    EXPECT_LT(toda_residual(chain), 1e-14);
}

TEST(Toda, ChainFromSmoothOperator) {
    prop::Gen g(18);
    for (int t = 0; t < 5; ++t) {
        auto w = Window::square(0, 14);
        auto I = invariants(smooth_op(g, w));
        auto chain = toda_chain(I.w, I.H, 4);
        EXPECT_LT(toda_residual(chain), 1e-9);
        auto bad = chain;
        bad[2].values[bad[2].size() / 2] *= 1.0 + 1e-4;
        double r = toda_residual(bad);
        EXPECT_GT(r, 1e-6);
        EXPECT_LT(r, 1e-2);
    }
    EXPECT_THROW(toda_residual({Field::constant(Window::square(0, 3), 1.0)}), LatticeError);
}

TEST(Cyclic2, ConstantSolutionFromRootFind) {
    for (double C : {0.5, 2.0, 7.0}) {
        // f(w) = w^2 (1+w)^2 - (C+w)^2 on w > 0, bisection.
        auto f = [&](double x) { return x * x * (1 + x) * (1 + x) - (C + x) * (C + x); };
        double lo = 1e-6, hi = 100;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (f(lo) * f(mid) <= 0 ? hi : lo) = mid;
        }
        double w0 = 0.5 * (lo + hi);
        EXPECT_NEAR(w0 * w0, C, 1e-9 * C);
        auto W = Window::square(0, 6);
        auto w = Field::constant(W, w0);
        EXPECT_LT(cyclic2_residual(w, C).max_abs(), 1e-12);
    }
}

TEST(Cyclic2, ChainClosesAfterTwoSteps) {
    prop::Gen g(19);
    for (double C : {0.7, 3.0}) {
        auto W = Window::square(0, 7);
        auto w = cyclic2_propagate(W, C, [&](const Vec&) { return std::sqrt(C) * g.uniform(0.9, 1.1); });
        EXPECT_LT(cyclic2_residual(w, C).max_abs(), 1e-12);
        auto H = cyclic2_H(w, C);
        auto s1 = laplace_on_invariants(w, H);
        s1.w.window.for_each([&](std::size_t i, const Vec& p) { EXPECT_NEAR(s1.w.values[i].real(), C / w[p].real(), 1e-9); });
        auto s2 = laplace_on_invariants(s1.w, s1.H);
        EXPECT_LT(max_rel(w, s2.w), 1e-9);
        EXPECT_LT(max_rel(H, s2.H), 1e-9);
    }
    auto r = cyclic2_residual(prop::Gen(20).positive_field(Window::square(0, 5)), 1.0);
    EXPECT_GT(r.max_abs(), 1e-3);
}

TEST(Variants, PlusPlusIsFirstType) {
    prop::Gen g(21);
    auto w = Window::square(0, 8);
    auto L = random_op(g, w);
    auto c = interior_equal(laplace_variant(L, 1, 1, 12).op(), laplace_first(L).op(), 1e-14);
    EXPECT_TRUE(c) << c.deviation;
    auto c2 = interior_equal(laplace_variant(L, 1, 1, 21).op(), laplace_second(L).op(), 1e-14);
    EXPECT_TRUE(c2) << c2.deviation;
}

TEST(Variants, InverseRelations) {
    prop::Gen g(22);
    for (int t = 0; t < 10; ++t) {
        auto w = Window::square(-5, 5);
        auto L = random_op(g, w);
        auto I = invariants(L);
        for (int e : {1, -1})
            for (int s : {1, -1}) {
                auto R = laplace_variant(laplace_variant(L, e, s, 12), s, e, 21);
                EXPECT_LT(invariant_distance(I, invariants(R)), 1e-10) << e << s;
            }
        auto R = laplace_variant(laplace_variant(L, 1, -1, 12), -1, 1, 21);
        EXPECT_LT(invariant_distance(I, invariants(R)), 1e-10);
    }
}
