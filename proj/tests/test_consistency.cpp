#include <gtest/gtest.h>

#include "ldx/consistency.hpp"
#include "support.hpp"

using namespace ldx;
using namespace ldx::flat;

namespace {

TrianglePair random_pair(prop::Gen& g, const Window& w) {
    return {w, g.positive_field(w), g.positive_field(w), g.positive_field(w), g.positive_field(w)};
}

/// Commuting pair seen through a random positive gauge.
TrianglePair random_flat_pair(prop::Gen& g, const Window& w) {
    auto p = TrianglePair::commuting(g.uniform(0.5, 1.5), g.uniform(0.5, 1.5), g.uniform(0.7, 1.4), w);
    std::map<Vec, double> gauge;
    auto gv = [&](const Vec& n) {
        auto it = gauge.find(n);
        if (it == gauge.end()) it = gauge.emplace(n, g.uniform(0.5, 2.0)).first;
        return it->second;
    };
    return gauge_transform(p, gv);
}

double max_rel_diff(const Field& a, const Field& b) { return max_diff(a, b) / std::max(a.max_abs(), 1e-300); }

} // namespace

TEST(Curvature, CommutingPairIsFlat) {
    auto p = TrianglePair::commuting(1, 1, 2, Window::square(-5, 5));
    auto k = curvature(p);
    for (std::size_t i = 0; i < k.A.size(); ++i) {
        EXPECT_NEAR(k.A.values[i].real(), 1.0, 1e-12);
        EXPECT_LT(std::abs(k.B.values[i]), 1e-12 * k.B_scale.values[i].real());
    }
    auto q = TrianglePair::commuting(1, 1, 2, Window::square(-2, 2));
    for (const auto& v : curvature(q).B.values) EXPECT_LT(std::abs(v), 1e-12);
}

TEST(Curvature, TranscribedFormulaMissesTwoFactors) {
    auto p = TrianglePair::commuting(1, 1, 2, Window::square(-3, 3));
    auto k = curvature(p);
    EXPECT_GT(k.formula_deviation, 0.5);
    prop::Gen g(1);
    for (int t = 0; t < 10; ++t) {
        auto r = random_pair(g, Window::square(0, 6));
        auto kr = curvature(r);
        kr.A.window.for_each([&](std::size_t i, const Vec& n) {
            cplx expect = kr.A_formula.values[i] * r.a[n] * r.c[n];
            EXPECT_NEAR(std::abs(kr.A.values[i] - expect), 0.0, 1e-12 * std::abs(expect));
        });
    }
}

TEST(Curvature, RandomPairsAreCurved) {
    prop::Gen g(2);
    for (int t = 0; t < 10; ++t) {
        auto r = random_pair(g, Window::square(0, 5));
        auto f = flatness_check(r);
        EXPECT_FALSE(f.flat);
        EXPECT_GT(std::max(f.max_A, f.max_B), 1e-3);
    }
}

TEST(Curvature, IndependentOfDataScale) {
    prop::Gen g(3);
    auto r = random_pair(g, Window::square(0, 4));
    auto k = curvature(r);
    k.A.window.for_each([&](std::size_t i, const Vec& n) {
        auto t = detail::transport(r, n, 3.5, -2.0).value;
        EXPECT_NEAR(std::abs(t - (3.5 * k.A.values[i] - 2.0 * k.B.values[i])), 0.0, 1e-12 * std::abs(t));
    });
}

TEST(Flatness, PerturbedPairHasWitness) {
    auto p = TrianglePair::commuting(1, 1, 2, Window::square(-4, 4));
    EXPECT_TRUE(flatness_check(p).flat);
    Vec m{1, -1, 0};
    p.b[m] *= 1.01;
    auto f = flatness_check(p);
    ASSERT_FALSE(f.flat);
    ASSERT_TRUE(f.witness);
    EXPECT_LE(std::abs((*f.witness)[0] - m[0]) + std::abs((*f.witness)[1] - m[1]), 2);
}

TEST(RatioRelation, CommutingPairHasUnitRatio) {
    auto p = TrianglePair::commuting(1, 1, 2, Window::square(-4, 4));
    auto Q1 = p.Q1(), Q2 = p.Q2();
    auto D = *intersect(compose(Q1, Q2).domain(), compose(Q2, Q1).domain());
    EXPECT_LT(interior_equal_rel(compose(Q1, Q2), compose(Q2, Q1), 0.0, D).deviation, 1e-15);
    auto r = ratio_relation_check(p);
    ASSERT_TRUE(r.holds);
    for (const auto& v : r.f->values) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-12);
}

TEST(RatioRelation, RandomPairFails) {
    prop::Gen g(4);
    auto r = ratio_relation_check(random_pair(g, Window::square(0, 5)));
    EXPECT_FALSE(r.holds);
    EXPECT_FALSE(r.f);
    EXPECT_TRUE(r.witness);
}

TEST(RatioRelation, VanishingRightSideIsAnError) {
    auto W = Window::square(0, 3);
    TrianglePair p{W, Field::constant(W, 1.0), Field::constant(W, 1.0), Field::constant(W, 1.0),
                   Field::constant(W, 1.0)};
    p.d[{1, 1, 0}] = 0.0;
    p.a[{1, 0, 0}] = 0.0;
    EXPECT_THROW(ratio_relation_check(p), ComputeError);
}

TEST(Property, FlatnessAgreesWithRatioRelation) {
    prop::Gen g(5);
    int flat = 0, curved = 0;
    for (int t = 0; t < 100; ++t) {
        bool make_flat = t < 50;
        auto W = Window::square(-3, 4);
        auto p = make_flat ? random_flat_pair(g, W) : random_pair(g, W);
        bool f = flatness_check(p).flat;
        auto r = ratio_relation_check(p);
        EXPECT_EQ(f, r.holds) << "instance " << t;
        EXPECT_EQ(f, make_flat) << "instance " << t;
        (f ? flat : curved)++;
        if (r.holds) {
            for (const auto& v : r.f->values) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-10);
        }
    }
    EXPECT_EQ(flat, 50);
    EXPECT_EQ(curved, 50);
}

TEST(Propagate, CommutingPairFromUnitSeeds) {
    auto W = Window::square(-5, 5);
    auto p = TrianglePair::commuting(1, 1, 2, W);
    auto psi = propagate_from_edge(p, {0, 0, 0}, 1.0, 1.0);
    EXPECT_LT(system_residual(p, psi), 1e-10);
    EXPECT_EQ(psi.at(Vec{-1, 0, 0}), 1.0);
    EXPECT_EQ(psi.at(Zero), 1.0);
}

TEST(Propagate, OrdersAgreeWhenFlat) {
    prop::Gen g(6);
    for (int t = 0; t < 10; ++t) {
        auto W = Window::square(-4, 4);
        auto p = random_flat_pair(g, W);
        Vec n0{g.integer(-3, 4), g.integer(-4, 4), 0};
        double v0 = g.uniform(-1, 1), v1 = g.uniform(-1, 1);
        auto a = propagate_from_edge(p, n0, v0, v1, std::nullopt, Order::Fan);
        auto b = propagate_from_edge(p, n0, v0, v1, std::nullopt, Order::RowMajor);
        EXPECT_LT(max_rel_diff(a, b), 1e-10);
        EXPECT_LT(system_residual(p, a), 1e-10);
    }
}

TEST(Propagate, CurvedPairIsRejected) {
    auto p = TrianglePair::commuting(1, 1, 2, Window::square(-4, 4));
    p.c[{2, 2, 0}] *= 1.01;
    try {
        propagate_from_edge(p, {0, 0, 0}, 1.0, 1.0);
        FAIL();
    } catch (const ComputeError& e) {
        EXPECT_EQ(e.code, ErrorCode::NotFlat);
    }
}

TEST(LineEquation, CoefficientPattern) {
    auto p = tri::ExpQ2D::q_landau(1, 1, 1, 2);
    auto line = Window::line(-4, 4);
    auto L = line_equation(p, 0, line);
    line.for_each([&](std::size_t, const Vec& n) {
        EXPECT_DOUBLE_EQ(L.coeff(T1, n).real(), 1.0);
        EXPECT_DOUBLE_EQ(L.coeff(-T1, n).real(), 1.0);
        EXPECT_DOUBLE_EQ(L.coeff(Zero, n).real(), 2.0 - std::pow(2.0, -2.0 * n[0]));
    });
    auto flatv = line_equation(tri::ExpQ2D::q_landau(0.7, 1.3, 1, 1), 3, line);
    for (const auto& [o, f] : flatv.terms())
        for (const auto& v : f.values) EXPECT_EQ(v, f.values[0]);
    EXPECT_THROW(line_equation(tri::ExpQ2D::q_landau(1, 1, 0.9, 2), 0, line), ComputeError);
}

TEST(LineEquation, LineSolutionsExtendToThePlane) {
    for (double d : {1.0, 0.6}) {
        auto q = tri::ExpQ2D::q_landau(1, d, 1, 2);
        auto W = Window::square(-4, 4);
        auto p = TrianglePair::commuting(q.c, q.d, q.v(), W);
        for (int n2 : {-2, 0, 3}) {
            auto line = Window::line(-4, 4);
            auto phi = line_solution(line_equation(q, n2, line), 0.3, -0.8);
            auto psi = propagate_from_edge(p, {-3, n2, 0}, 0.3, -0.8);
            EXPECT_LT(system_residual(p, psi), 1e-10);
            double m = phi.max_abs(), dev = 0;
            line.for_each([&](std::size_t i, const Vec& n) {
                dev = std::max(dev, std::abs(psi[{n[0], n2, 0}] - phi.values[i]) / m);
            });
            EXPECT_LT(dev, 1e-10) << "d " << d << " row " << n2;
        }
    }
}

TEST(LineEquation, PrintedSingleDIsWrongForDOtherThanOne) {
    auto q = tri::ExpQ2D::q_landau(1, 0.6, 1, 2);
    auto W = Window::square(-4, 4);
    auto p = TrianglePair::commuting(q.c, q.d, q.v(), W);
    auto psi = propagate_from_edge(p, {-3, 0, 0}, 0.3, -0.8);
    double worst = 0;
    for (int n1 = -3; n1 <= 3; ++n1) {
        Vec n{n1, 0, 0};
        cplx diag = (1 + 1 - 0.6 * std::pow(2.0, -2.0 * n1)) * psi[n];
        cplx r = psi[n + T1] + psi[n - T1] + diag;
        worst = std::max(worst, std::abs(r) / (std::abs(psi[n + T1]) + std::abs(psi[n - T1]) + std::abs(diag)));
    }
    EXPECT_GT(worst, 1e-3);
}

TEST(Tetra, CommutingFamilyHasUnitRatio) {
    auto W = Window::cube(-3, 3);
    auto Q = tet::exp_Q3(tet::ExpQ3D::commuting(0.8, 1.2, 0.9, 0.3, -0.2, 0.25), W);
    auto r = tetra_consistency_check(Q, adjoint(Q));
    ASSERT_TRUE(r.ratio.holds);
    for (const auto& v : r.ratio.f->values) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-12);
    ASSERT_TRUE(r.in_plane);
    for (const auto& o : r.in_plane->offsets()) EXPECT_EQ(o[0] + o[1] + o[2], 0);
}

TEST(Tetra, RandomPairFails) {
    prop::Gen g(7);
    auto W = Window::cube(0, 4);
    auto Q1 = StencilOperator::identity(W), Q2 = StencilOperator::identity(W);
    for (const auto& t : tet::axes) {
        Q1.set(t, g.positive_field(W));
        Q2.set(-t, g.positive_field(W));
    }
    auto r = tetra_consistency_check(Q1, Q2);
    EXPECT_FALSE(r.ratio.holds);
    EXPECT_FALSE(r.in_plane);
}

TEST(Tetra, PlaneEquationMatchesClosedForm) {
    const double C = 0.8, D = 1.3, alpha = 0.35;
    auto W = Window::cube(-6, 6);
    auto Q = tet::exp_Q3(tet::ExpQ3D::commuting(C, D, 1.0, alpha, 0.0, 0.0), W);
    auto r = tetra_consistency_check(Q, adjoint(Q));
    ASSERT_TRUE(r.in_plane);
    const int s = 1;
    auto plane = Window::square(-2, 2);
    auto R = plane_restriction(*r.in_plane, s, plane);
    const double A = 1.0 * 1.0 - 1.0;
    double dev = 0;
    plane.for_each([&](std::size_t, const Vec& m) {
        double n1 = m[0], n2 = m[1];
        std::map<Vec, double> expect{
            {Zero, A + C * C * std::exp(2 * alpha * n2) + D * D * std::exp(-2 * alpha * n1)},
            {T1, C * std::exp(alpha * n2)},
            {-T1, C * std::exp(alpha * n2)},
            {T2, D * std::exp(-alpha * n1)},
            {-T2, D * std::exp(-alpha * n1)},
            {T2 - T1, C * D * std::exp(alpha * (n2 - n1)) * std::exp(alpha)},
            {T1 - T2, C * D * std::exp(alpha * (n2 - n1)) * std::exp(-alpha)},
        };
        for (const auto& [o, v] : expect) dev = std::max(dev, std::abs(R.coeff(o, m) - v) / std::abs(v));
        EXPECT_EQ(R.offsets().size(), 7u);
    });
    EXPECT_LT(dev, 1e-13);
}
