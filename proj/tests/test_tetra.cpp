#include <gtest/gtest.h>

#include "ldx/elliptic.hpp"
#include "ldx/tetra.hpp"
#include "support.hpp"

using namespace ldx;
using namespace ldx::tet;

namespace {

struct Built {
    Field x;
    std::array<Field, 3> y;
    TetraOp L;
};

Field signed_field(prop::Gen& g, const Window& w) {
    return Field::real(w, [&](const Vec&) { return (g.integer(0, 1) ? 1.0 : -1.0) * g.uniform(0.5, 1.5); });
}

/// L = Q Q^+ + w (or Q^+ Q + w) for random Q with x > 0.
Built from_random_q(prop::Gen& g, const Window& w, Form form = Form::QQplus) {
    Built b;
    b.x = g.positive_field(w);
    StencilOperator Q(w);
    Q.set(Zero, b.x);
    for (int k = 0; k < 3; ++k) {
        b.y[std::size_t(k)] = signed_field(g, w);
        Q.set(axes[std::size_t(k)], b.y[std::size_t(k)]);
    }
    auto P = form == Form::QQplus ? compose(Q, adjoint(Q)) : compose(adjoint(Q), Q);
    b.L = TetraOp::from_operator(plus_diag(P, g.real_field(P.domain())));
    return b;
}

TetraOp constant_op(const Window& w, double a, double beta, double gamma) {
    TetraOp t{w, Field::constant(w, a), {}, {}};
    for (auto& f : t.b) f = Field::constant(w, beta);
    for (auto& f : t.c) f = Field::constant(w, gamma);
    return t;
}

} // namespace

TEST(Layout, OperatorIsSelfAdjoint) {
    prop::Gen g(1);
    auto W = Window::cube(0, 5);
    TetraOp t{W, g.real_field(W), {g.real_field(W), g.real_field(W), g.real_field(W)},
              {g.real_field(W), g.real_field(W), g.real_field(W)}};
    auto L = t.op();
    EXPECT_EQ(L.offsets().size(), 13u);
    auto D = *intersect(L.domain(), adjoint(L).domain());
    EXPECT_LT(interior_equal(L, adjoint(L), 0.0, D).deviation, 1e-15);
    auto back = TetraOp::from_operator(L);
    back.window.for_each([&](std::size_t, const Vec& n) {
        for (int k = 0; k < 3; ++k) EXPECT_EQ(back.b[std::size_t(k)][n], t.b[std::size_t(k)][n]);
    });
    StencilOperator skew = L;
    skew.set(T1, g.real_field(W));
    EXPECT_THROW(TetraOp::from_operator(skew), ComputeError);
}

TEST(Condition, ConstructedInstancesRecoverX) {
    prop::Gen g(2);
    for (int t = 0; t < 10; ++t) {
        auto b = from_random_q(g, Window::cube(0, 6));
        auto cond = tetra_factor_condition(b.L);
        ASSERT_TRUE(cond.all) << cond.spread;
        double dev = 0;
        cond.domain.for_each([&](std::size_t i, const Vec& n) {
            dev = std::max(dev, std::abs(std::sqrt(cond.x2.values[i].real()) - b.x[n].real()));
        });
        EXPECT_LT(dev, 1e-12);
    }
}

TEST(Condition, DualFormOnQplusQInstances) {
    prop::Gen g(3);
    auto b = from_random_q(g, Window::cube(0, 6), Form::QplusQ);
    EXPECT_TRUE(tetra_factor_condition(b.L, Form::QplusQ).all);
    EXPECT_FALSE(tetra_factor_condition(b.L, Form::QQplus).all);
    auto f = tetra_factorize(b.L, Form::QplusQ);
    EXPECT_LT(interior_equal_rel(f.product(), b.L.op(), 0.0).deviation, 1e-11);
}

TEST(Condition, PerturbationIsDetectedAtAffectedSites) {
    prop::Gen g(4);
    auto b = from_random_q(g, Window::cube(0, 6));
    Vec m{2, 2, 2};
    b.L.c[1][m] *= 1.01; // c_13
    auto cond = tetra_factor_condition(b.L);
    EXPECT_FALSE(cond.all);
    cond.domain.for_each([&](std::size_t i, const Vec& n) {
        bool affected = n == m + T1 + T3;
        EXPECT_EQ(bool(cond.holds[i]), !affected) << to_string(n);
    });
    EXPECT_THROW(tetra_factorize(b.L), ComputeError);
}

TEST(Condition, ConstantConnections) {
    auto t = constant_op(Window::cube(0, 4), 7.0, 2.0, 0.5);
    auto cond = tetra_factor_condition(t);
    ASSERT_TRUE(cond.all);
    for (const auto& v : cond.x2.values) EXPECT_DOUBLE_EQ(v.real(), 8.0);
    auto f = tetra_factorize(t);
    for (const auto& v : f.x.values) EXPECT_NEAR(v.real(), std::sqrt(8.0), 1e-15);
    for (const auto& y : f.y)
        for (const auto& v : y.values) EXPECT_NEAR(v.real(), 2.0 / std::sqrt(8.0), 1e-15);
    for (const auto& v : f.w.values) EXPECT_NEAR(v.real(), 7.0 - 8.0 - 1.5, 1e-14);
}

TEST(Factorize, RoundTripOnTwelveCube) {
    prop::Gen g(5);
    for (int t = 0; t < 3; ++t) {
        auto b = from_random_q(g, Window::cube(0, 11));
        auto f = tetra_factorize(b.L);
        auto c = interior_equal_rel(f.product(), b.L.op(), 0.0);
        EXPECT_LT(c.deviation, 1e-11) << to_string(c.site);
    }
}

TEST(Factorize, NegativeCommonValueIsRejected) {
    auto t = constant_op(Window::cube(0, 4), 1.0, 2.0, -0.5);
    EXPECT_TRUE(tetra_factor_condition(t).all);
    try {
        tetra_factorize(t);
        FAIL();
    } catch (const ComputeError& e) {
        EXPECT_EQ(e.code, ErrorCode::NegativeDiscriminant);
    }
}

TEST(Property, FactorizationSucceedsIffConditionHolds) {
    prop::Gen g(6);
    for (int t = 0; t < 20; ++t) {
        auto b = from_random_q(g, Window::cube(0, 7));
        bool perturb = t % 2;
        if (perturb) {
            auto& f = b.L.c[std::size_t(g.integer(0, 2))];
            f.values[std::size_t(g.integer(0, int(f.size()) - 1))] *= 1.0 + g.uniform(0.01, 0.2);
        }
        bool cond = tetra_factor_condition(b.L).all;
        bool ok = true;
        try {
            auto f = tetra_factorize(b.L);
            EXPECT_LT(interior_equal_rel(f.product(), b.L.op(), 0.0).deviation, 1e-11);
        } catch (const ComputeError&) {
            ok = false;
        }
        EXPECT_EQ(cond, ok);
        if (!perturb) {
            EXPECT_TRUE(cond);
        }
    }
}

TEST(SkewEdges, ProductsAgreeOnFactorizableTetrahedra) {
    prop::Gen g(7);
    auto b = from_random_q(g, Window::cube(0, 6));
    auto D = b.L.op_domain();
    double dev = 0;
    D.for_each([&](std::size_t, const Vec& n) {
        auto p = skew_products(b.L, n);
        double s = std::max({std::abs(p[0]), std::abs(p[1]), std::abs(p[2])});
        dev = std::max({dev, std::abs(p[0] - p[1]) / s, std::abs(p[1] - p[2]) / s});
    });
    EXPECT_LT(dev, 1e-12);
    b.L.c[0][{2, 2, 2}] *= 1.05;
    auto p = skew_products(b.L, {3, 3, 2});
    EXPECT_GT(std::abs(p[2] - p[0]) / std::abs(p[0]), 1e-3);
}

TEST(QRelation3D, CommutingFamily) {
    auto p = ExpQ3D::commuting(1, 1, 1, 0.3, -0.2, 0.25);
    auto W = Window::cube(-4, 4);
    EXPECT_LT(q_relation_residual_3d(p, W), 1e-13);
    auto Q = exp_Q3(p, W);
    EXPECT_LT(interior_equal_rel(compose(Q, adjoint(Q)), compose(adjoint(Q), Q), 0.0).deviation, 1e-13);
}

TEST(QRelation3D, NonzeroH) {
    prop::Gen g(8);
    for (int t = 0; t < 5; ++t) {
        ExpQ3D p{g.uniform(0.5, 1.5), g.uniform(0.5, 1.5), g.uniform(0.5, 1.5), {}, 0.4};
        for (std::size_t i = 0; i < 3; ++i) {
            p.l[i][i] = 0.2;
            for (std::size_t j = i + 1; j < 3; ++j) {
                p.l[i][j] = g.uniform(-0.3, 0.3);
                p.l[j][i] = 0.4 - p.l[i][j];
            }
        }
        ASSERT_LT(p.relation_defect(), 1e-15);
        auto W = Window::cube(-3, 3);
        EXPECT_LT(q_relation_residual_3d(p, W), 1e-12);
        // the printed constants q = e^h, c' = e^{-h} c
        EXPECT_GT(q_relation_residual_3d(p, W, std::exp(p.h), std::exp(-p.h)), 0.1);
    }
}

TEST(QRelation3D, BrokenRelationGivesOrderOneDeviation) {
    auto p = ExpQ3D::commuting(1, 1, 1, 0.3, -0.2, 0.25);
    p.l[2][1] += 0.5;
    EXPECT_GT(q_relation_residual_3d(p, Window::cube(-3, 3)), 0.1);
}

TEST(QRelation3D, InactiveThirdAxisReducesToPlanarRelation) {
    prop::Gen g(9);
    for (bool holds : {true, false}) {
        tri::ExpQ2D q = tri::ExpQ2D::q_landau(1.3, 0.7, 0.9, 1.15);
        if (!holds) q.l[1][0] += 0.8;
        ExpQ3D p{q.c, q.d, 0.0, {}, 2 * q.l[0][0]};
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) p.l[i][j] = q.l[i][j];
        double r3 = q_relation_residual_3d(p, Window::cube(-4, 4));
        double r2 = tri::q_landau_relation_residual(q, Window::square(-4, 4));
        EXPECT_NEAR(r3, r2, 1e-12 * std::max(1.0, r2));
        if (holds) {
            EXPECT_LT(r3, 1e-12);
        } else {
            EXPECT_GT(r3, 0.1);
        }
    }
}
