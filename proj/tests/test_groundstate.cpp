#include <gtest/gtest.h>

#include "ldx/groundstate.hpp"
#include "ldx/spectral.hpp"
#include "support.hpp"

using namespace ldx;
using namespace ldx::gs;

namespace {

GroundStateSpec spec2(Color col, const std::string& tag, Mat l, Window w = Window::square(-20, 20)) {
    GroundStateSpec s;
    s.color = col;
    s.case_tag = tag;
    s.l = std::move(l);
    s.c = {1.0, 1.0};
    s.window = w;
    return s;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ComputeError& e) {
        return e.code;
    }
    ADD_FAILURE() << "no ComputeError thrown";
    return ErrorCode::Degenerate;
}

double forced_zero_max(const GroundState& g) {
    double m = 0;
    g.psi.window.for_each([&](std::size_t i, const Vec& p) {
        if (g.forced_zero(p)) m = std::max(m, std::abs(g.psi.values[i]));
    });
    return m;
}

/// Random 2x2 exponent matrix whose case matrix has smallest eigenvalue >= 0.4.
Mat random_l2(prop::Gen& g, const std::string& tag, Color col) {
    for (;;) {
        Mat l{{g.uniform(0.6, 2.5), g.uniform(-0.8, 0.8)}, {g.uniform(-0.8, 0.8), g.uniform(0.6, 2.5)}};
        if (col == Color::White) l = negated(l);
        if (min_eigenvalue(k2_matrix(tag, l, col)) >= 0.4) return l;
    }
}

double inner(const Field& a, const Field& b) {
    double s = 0;
    a.window.for_each([&](std::size_t i, const Vec& p) { s += (std::conj(a.values[i]) * b[p]).real(); });
    return s;
}

} // namespace

TEST(K2Matrix, TwoDimensionalCases) {
    Mat l{{1, 2}, {3, 4}};
    EXPECT_EQ(k2_matrix("a", l), (Mat{{1, 2}, {2, 4}}));
    EXPECT_EQ(k2_matrix("b", l), (Mat{{1, 3}, {3, 4}}));
    EXPECT_EQ(k2_matrix("c'", l), (Mat{{1, 2}, {2, 4 - 3 + 2}}));
    EXPECT_EQ(k2_matrix("c''", l), (Mat{{1 - 2 + 3, 3}, {3, 4}}));
    for (const char* tag : {"a", "b", "c'", "c''"}) EXPECT_EQ(k2_matrix(tag, l, Color::White), k2_matrix(tag, negated(l)));
}

TEST(K2Matrix, ThreeDimensionalCases) {
    Mat l{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    EXPECT_EQ(k2_matrix("1a", l), (Mat{{1, 2, 3}, {2, 5, 6}, {3, 6, 9}}));
    EXPECT_EQ(k2_matrix("1b", l), (Mat{{1, 2, 3}, {2, 5 - 4 + 2, 6}, {3, 6, 9}}));
    EXPECT_EQ(k2_matrix("1c", l), (Mat{{1, 2, 3}, {2, 3, 4}, {3, 4, 9 - 7 + 3}}));
    EXPECT_EQ(code_of([&] { k2_matrix("x", l); }), ErrorCode::Domain);
    EXPECT_EQ(code_of([&] { k2_matrix("1a", Mat{{1, 0}, {0, 1}}); }), ErrorCode::Domain);
}

TEST(Black, CaseOneQuantizedVanishesOnHalfPlane) {
    auto s = spec2(Color::Black, "a", {{2, 0}, {1, 2}});
    s.q = 0;
    auto g = build_ground_state(s);
    ASSERT_TRUE(g.q.has_value());
    EXPECT_LT(zero_mode_residual(defining_operator(s), g.psi), 1e-12);
    EXPECT_LT(tail_ratio(g.psi), 1e-8);
    double right = 0, left = 0;
    g.psi.window.for_each([&](std::size_t i, const Vec& p) {
        (p[0] > 0 ? right : left) = std::max(p[0] > 0 ? right : left, std::abs(g.psi.values[i]));
    });
    EXPECT_EQ(right, 0.0);
    EXPECT_EQ(left, 1.0);
}

TEST(Black, CaseTwoHasNoVanishingHalfPlane) {
    auto s = spec2(Color::Black, "a", {{2, 1}, {0, 2}});
    auto g = build_ground_state(s);
    EXPECT_FALSE(g.q.has_value());
    EXPECT_LT(zero_mode_residual(defining_operator(s), g.psi), 1e-12);
    EXPECT_LT(tail_ratio(g.psi), 1e-8);
    for (int n1 = -3; n1 <= 3; ++n1) EXPECT_NE(std::abs(g.psi[Vec{n1, 0, 0}]), 0.0) << n1;
}

TEST(White, MirrorOfCaseOne) {
    auto s = spec2(Color::White, "a", {{-2, 0}, {-1, -2}});
    s.q = 0;
    auto g = build_ground_state(s);
    EXPECT_LT(zero_mode_residual(defining_operator(s), g.psi), 1e-12);
    EXPECT_LT(tail_ratio(g.psi), 1e-8);
    EXPECT_EQ(forced_zero_max(g), 0.0);
    EXPECT_EQ(std::abs(g.psi[Vec{-1, 0, 0}]), 0.0);
    // A black state is not a white zero mode.
    auto b = build_ground_state(spec2(Color::Black, "a", {{2, 0}, {1, 2}}));
    EXPECT_GT(zero_mode_residual(defining_operator(s), b.psi), 1e-3);
}

TEST(Property, AllTwoDimensionalCasesBothColors) {
    prop::Gen gen(11);
    for (Color col : {Color::Black, Color::White})
        for (const char* tag : {"a", "b", "c'", "c''"})
            for (int t = 0; t < 12; ++t) {
                auto s = spec2(col, tag, random_l2(gen, tag, col));
                s.c = {gen.uniform(0.5, 2.0), gen.uniform(0.5, 2.0)};
                if (t % 3 == 0) s.q = gen.integer(-2, 2);
                auto g = build_ground_state(s);
                EXPECT_LT(zero_mode_residual(defining_operator(s), g.psi), 1e-12) << tag << " t=" << t;
                EXPECT_LT(tail_ratio(g.psi), 1e-8) << tag << " t=" << t;
                EXPECT_EQ(forced_zero_max(g), 0.0);
            }
}

TEST(Property, QuantizationOnlyWhenNeeded) {
    // Case a needs a cut exactly when l21 > l12.
    prop::Gen gen(12);
    for (int t = 0; t < 20; ++t) {
        auto l = random_l2(gen, "a", Color::Black);
        auto g = build_ground_state(spec2(Color::Black, "a", l));
        EXPECT_EQ(g.q.has_value(), l[1][0] > l[0][1] + 1e-12);
    }
}

TEST(CasePrimePrime, TransposedCorrectionDoesNotSeparate) {
    Mat l{{2, 0.5}, {0.1, 2}};
    Mat alt{{l[0][0] - l[1][0] + l[0][1], l[1][0]}, {l[1][0], l[1][1]}};
    EXPECT_EQ(code_of([&] { build_separated(l, {1, 1}, alt, {1, 1, 0}, {0, 1, 0}, {}, {}, Window::square(-5, 5)); }),
              ErrorCode::ConditionViolated);
    EXPECT_NO_THROW(build_separated(l, {1, 1}, k2_matrix("c''", l), {1, 1, 0}, {0, 1, 0}, {}, {}, Window::square(-5, 5)));
}

TEST(Errors, PositivityAndSeparability) {
    EXPECT_EQ(code_of([] { build_ground_state(spec2(Color::Black, "a", {{1, 2}, {0, 1}})); }), ErrorCode::Domain);
    EXPECT_EQ(code_of([] { build_ground_state(spec2(Color::White, "a", {{2, 0}, {1, 2}})); }), ErrorCode::Domain);
    Mat l{{2, 0}, {0, 2}};
    auto W = Window::square(-5, 5);
    EXPECT_EQ(code_of([&] { build_separated(l, {1, 1}, l, {2, 1, 0}, {0, 1, 0}, {}, {}, W); }),
              ErrorCode::NotConstructible);
    EXPECT_EQ(code_of([&] { build_separated(l, {1, 1}, l, {1, 0, 0}, {0, 0, 0}, 0, {}, W); }),
              ErrorCode::NotConstructible);
    EXPECT_EQ(code_of([] { build_ground_state(spec2(Color::Black, "1a", {{2, 0}, {0, 2}})); }), ErrorCode::Domain);
}

TEST(ThreeD, DiagonalExampleBothColors) {
    GroundStateSpec s;
    s.case_tag = "1a";
    s.l = {{2, 0, 0}, {0, 2, 0}, {0, 0, 2}};
    s.c = {1, 1, 1};
    s.window = Window::cube(-12, 11);
    auto g = build_ground_state_3d(s);
    EXPECT_LT(zero_mode_residual(defining_operator(s), g.psi), 1e-11);
    EXPECT_LT(tail_ratio(g.psi), 1e-6);
    s.color = Color::White;
    s.l = negated(s.l);
    auto h = build_ground_state_3d(s);
    EXPECT_LT(zero_mode_residual(defining_operator(s), h.psi), 1e-11);
    EXPECT_LT(tail_ratio(h.psi), 1e-6);
}

TEST(ThreeD, RandomInstancesWithSideConditions) {
    prop::Gen gen(13);
    for (const char* tag : {"1a", "1b", "1c"})
        for (Color col : {Color::Black, Color::White})
            for (int t = 0; t < 6; ++t) {
                Mat l;
                for (;;) {
                    l.assign(3, std::vector<double>(3));
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j) l[i][j] = i == j ? gen.uniform(1.0, 2.5) : gen.uniform(-0.4, 0.4);
                    std::string tg = tag;
                    if (tg == "1a") l[2][1] = l[1][2];
                    if (tg == "1b") l[2][0] = l[2][1] + l[0][2] - l[1][2];
                    if (tg == "1c") l[2][1] = l[1][2] - l[1][0] + l[0][1] + l[2][0] - l[0][2];
                    if (col == Color::White) l = negated(l);
                    if (min_eigenvalue(k2_matrix(tag, l, col)) >= 0.5) break;
                }
                GroundStateSpec s;
                s.color = col;
                s.case_tag = tag;
                s.l = l;
                s.c = {gen.uniform(0.5, 2), gen.uniform(0.5, 2), gen.uniform(0.5, 2)};
                s.window = Window::cube(-12, 11);
                auto g = build_ground_state_3d(s);
                EXPECT_LT(zero_mode_residual(defining_operator(s), g.psi), 1e-11) << tag;
                EXPECT_LT(tail_ratio(g.psi), 1e-6) << tag;
                EXPECT_EQ(forced_zero_max(g), 0.0);
                // Breaking the side condition makes the reduction fail.
                s.l[2][1] += col == Color::White ? -0.3 : 0.3;
                if (min_eigenvalue(k2_matrix(tag, s.l, col)) > 0) {
                    EXPECT_EQ(code_of([&] { build_ground_state_3d(s); }), ErrorCode::ConditionViolated) << tag;
                }
            }
}

TEST(ThreeD, NegativeConditionMatrixRejected) {
    GroundStateSpec s;
    s.case_tag = "1a";
    s.l = {{2, 3, 0}, {3, 2, 0}, {0, 0, 2}};
    s.c = {1, 1, 1};
    s.window = Window::cube(-4, 4);
    EXPECT_EQ(code_of([&] { build_ground_state_3d(s); }), ErrorCode::Domain);
}

TEST(LandauRegion, Classification) {
    EXPECT_EQ(landau_region(0.8, 1.2), LandauRegion::A2);
    EXPECT_EQ(landau_region(0.8, 0.9), LandauRegion::A2);
    EXPECT_EQ(landau_region(0.8, 0.7), LandauRegion::A1);
    EXPECT_EQ(landau_region(1.25, 1.2), LandauRegion::B2);
    EXPECT_EQ(landau_region(1.25, 1.5), LandauRegion::B1);
    EXPECT_EQ(landau_region(0.8, 2.0), LandauRegion::None);
    EXPECT_EQ(landau_region(1.0, 1.0), LandauRegion::None);
}

TEST(Ladder, LevelsAndResiduals) {
    const auto W = Window::square(-30, 30);
    const double expect[] = {0.0, 0.36, 0.5904, 0.737856};
    for (int k = 0; k <= 3; ++k) {
        LadderSpec s;
        s.k = k;
        auto st = ladder_eigenfunction(s, W);
        EXPECT_NEAR(st.lambda, expect[k], 1e-15);
        EXPECT_LT(spec::eigen_residual(st.op, st.psi, st.lambda), 1e-9) << k;
        EXPECT_LT(tail_ratio(st.psi), 1e-8);
        if (k == 0) continue;
        s.branch = oned::Branch::Ltilde;
        auto tl = ladder_eigenfunction(s, W);
        EXPECT_LT(spec::eigen_residual(tl.op, tl.psi, tl.lambda), 1e-9) << k;
    }
}

TEST(Ladder, LargeUMirror) {
    const auto W = Window::square(-30, 30);
    for (int k = 0; k <= 3; ++k) {
        LadderSpec s;
        s.u = 1.25;
        s.v = 1.2;
        s.k = k;
        s.branch = oned::Branch::Ltilde;
        auto st = ladder_eigenfunction(s, W);
        EXPECT_NEAR(st.lambda, 1 - std::pow(0.8, 2 * k), 1e-15);
        EXPECT_LT(spec::eigen_residual(st.op, st.psi, st.lambda), 1e-9) << k;
        if (k == 0) continue;
        s.branch = oned::Branch::L;
        auto l = ladder_eigenfunction(s, W);
        EXPECT_LT(spec::eigen_residual(l.op, l.psi, l.lambda), 1e-9) << k;
    }
}

TEST(Ladder, Errors) {
    LadderSpec s;
    s.branch = oned::Branch::Ltilde;
    EXPECT_EQ(code_of([&] { ladder_eigenfunction(s, Window::square(-10, 10)); }), ErrorCode::Domain);
    s.branch = oned::Branch::L;
    s.v = 2.0;
    EXPECT_EQ(code_of([&] { ladder_eigenfunction(s, Window::square(-10, 10)); }), ErrorCode::Domain);
}

TEST(Ladder, DistinctLevelsOrthogonal) {
    const auto W = Window::square(-30, 30);
    std::vector<Field> states;
    for (int k = 0; k <= 3; ++k) {
        LadderSpec s;
        s.k = k;
        states.push_back(ladder_eigenfunction(s, W).psi);
    }
    for (std::size_t i = 0; i < states.size(); ++i)
        for (std::size_t j = i + 1; j < states.size(); ++j) {
            double c = inner(states[i], states[j]) /
                       std::sqrt(inner(states[i], states[i]) * inner(states[j], states[j]));
            EXPECT_LT(std::abs(c), 1e-8) << i << "," << j;
        }
}

TEST(Spectrum, LandauLevelsOnFortyWindow) {
    const auto p = tri::ExpQ2D::q_landau(1, 1, 0.8, 1.2);
    auto make = [&](const Window& w) { return landau_operator(p, w, oned::Branch::L); };
    std::vector<spec::Prediction> preds;
    for (double l : landau_levels(0.8, 3, oned::Branch::L)) preds.push_back({l, "q-Landau level"});
    spec::VerifyOptions opt;
    opt.tol = 1e-5;
    opt.grown = Window::square(0, 49);
    auto rep = spec::verify_spectrum(make, preds, Window::square(0, 39), opt);
    EXPECT_TRUE(rep.pass);
    for (const auto& m : rep.matches) {
        EXPECT_LT(m.distance, 1e-5) << m.predicted;
        EXPECT_TRUE(m.localized) << m.predicted;
    }
    auto bad = spec::verify_spectrum(make, {{0.2, "injected"}}, Window::square(0, 39), opt);
    EXPECT_FALSE(bad.pass);
}

TEST(Spectrum, DenseAgreesWithFactorOnSmallWindow) {
    const auto p = tri::ExpQ2D::q_landau(1, 1, 0.8, 1.2);
    const auto W = Window::square(0, 17);
    auto F = spec::factored_eigs(adjoint(tri::exp_Q(p, W).op()));
    auto D = spec::eigs_lowest(spec::assemble(landau_operator(p, W, oned::Branch::L)), 40);
    for (std::size_t i = 0; i < 40; ++i) EXPECT_NEAR(D.values[i], F.values[i], 1e-10) << i;
}

TEST(Spectrum, TildeBranchExcludesGroundLevel) {
    const auto p = tri::ExpQ2D::q_landau(1, 1, 0.8, 1.2);
    auto E = spec::eigs_lowest(spec::assemble(landau_operator(p, Window::square(0, 39), oned::Branch::Ltilde)), 1);
    EXPECT_GE(E.values.front(), 1 - 0.64 - 1e-5);
    auto L = spec::eigs_lowest(spec::assemble(landau_operator(p, Window::square(0, 39), oned::Branch::L)), 1);
    EXPECT_LT(std::abs(L.values.front()), 1e-10);
}
