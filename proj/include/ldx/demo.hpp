#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ldx/consistency.hpp"
#include "ldx/elliptic.hpp"
#include "ldx/groundstate.hpp"
#include "ldx/hyperbolic.hpp"
#include "ldx/mutation.hpp"
#include "ldx/oned.hpp"
#include "ldx/spectral.hpp"
#include "ldx/tetra.hpp"

namespace ldx::demo {

struct Check {
    std::string name;
    double value = 0;
    double limit = 0;
    bool pass = false;
};

inline Check below(std::string name, double value, double limit) {
    return {std::move(name), value, limit, value < limit};
}
inline Check at_least(std::string name, double value, double limit) {
    return {std::move(name), value, limit, value >= limit};
}
inline Check holds(std::string name, bool ok) { return {std::move(name), ok ? 1.0 : 0.0, 1.0, ok}; }

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
    double sign() { return integer(0, 1) ? 1.0 : -1.0; }
    Field field(const Window& w, double lo, double hi) {
        return Field::real(w, [&](const Vec&) { return uniform(lo, hi); });
    }
    Field complex_field(const Window& w) {
        return Field::complex(w, [&](const Vec&) { return cplx(uniform(-1, 1), uniform(-1, 1)); });
    }
};

struct Scenario {
    std::string name;
    int criterion;
    std::string summary;
    std::function<std::vector<Check>(Rng&)> run;
    double budget = 60; ///< seconds
};

struct ScenarioResult {
    std::string name;
    int criterion = 0;
    std::vector<Check> checks;
    std::string error;
    double seconds = 0;
    double budget = 0;
    bool pass = false;
};

namespace detail {

inline double max_of(double a, double b) { return std::max(a, b); }

inline double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

inline StencilOperator phase_gauge(const StencilOperator& L, const Field& phases) {
    const Window& W = L.window();
    auto e = StencilOperator::diag(W, map(phases, [](cplx t) { return std::polar(1.0, t.real()); }));
    auto ei = StencilOperator::diag(W, map(phases, [](cplx t) { return std::polar(1.0, -t.real()); }));
    return compose(e, L, ei);
}

inline tri::TriOp random_tri(Rng& g, const Window& w) {
    return {w, g.field(w, 9.0, 11.0), g.field(w, 0.7, 1.4), g.field(w, 0.7, 1.4), g.field(w, 0.7, 1.4)};
}

inline hyp::QuadOp random_quad(Rng& g, const Window& w) {
    return {w, g.field(w, 2.5, 3.5), g.field(w, 0.6, 1.4), g.field(w, 0.6, 1.4), g.field(w, 0.6, 1.4)};
}

inline double max_rel(const Field& x, const Field& y) {
    double m = 0;
    auto D = intersect(x.window, y.window);
    if (!D) return std::numeric_limits<double>::infinity();
    D->for_each([&](std::size_t, const Vec& p) { m = std::max(m, std::abs(x[p] - y[p]) / std::abs(x[p])); });
    return m;
}

} // namespace detail

inline std::vector<Check> charlier(Rng&) {
    std::vector<Check> out;
    double ground = 0;
    for (double b : {0.5, 1.0, 2.0}) {
        auto psi = oned::charlier_ground_state(oned::CharlierParams(b, 0), Window::line(1, 12));
        double p1 = std::norm(psi.values[0]);
        for (int k = 1; k <= 12; ++k) {
            double expect = 1.0 / (std::pow(b, k - 1) * detail::factorial(k - 1));
            ground = std::max(ground, std::abs(std::norm(psi.values[std::size_t(k - 1)]) / p1 - expect) / expect);
        }
    }
    out.push_back(below("poisson weights, k <= 12", ground, 1e-12));
    oned::CharlierParams p(1.5, 0);
    auto w = Window::line(1, 60);
    auto P = oned::charlier_polynomials(p, 4, w);
    auto psi0 = oned::charlier_ground_state(p, w);
    auto dot = [&](int i, int j) {
        double s = 0;
        for (std::size_t n = 0; n < w.size(); ++n)
            s += (P[std::size_t(i)].values[n] * P[std::size_t(j)].values[n]).real() * std::norm(psi0.values[n]);
        return s;
    };
    double orth = 0;
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j < i; ++j) orth = std::max(orth, std::abs(dot(i, j)) / std::sqrt(dot(i, i) * dot(j, j)));
    out.push_back(below("first five polynomials orthogonal", orth, 1e-10));
    return out;
}

inline std::vector<Check> heisenberg(Rng& g) {
    double worst = 0;
    for (int t = 0; t < 10; ++t) {
        oned::CharlierParams p(g.uniform(0.2, 3.0), g.integer(0, 8));
        auto w = Window::line(1 - p.n0, 60 - p.n0);
        worst = std::max(worst, oned::heisenberg_residual(p, oned::charlier_alpha(p), w));
    }
    return {below("commutator residual, 10 draws", worst, 1e-13)};
}

inline std::vector<Check> q_oscillator(Rng& g) {
    std::vector<Check> out;
    oned::ExpQ1D e(1.0, 2.0);
    auto W = Window::line(-40, 40);
    double ladder = 0;
    for (int k = 0; k <= 3; ++k) {
        auto s = oned::ladder_eigenfunction_1d(1.0, 2.0, k, W, oned::Branch::L);
        ladder = std::max(ladder, spec::eigen_residual(s.op, s.psi, s.lambda));
    }
    out.push_back(below("ladder residuals k <= 3", ladder, 1e-10));
    std::vector<spec::Prediction> preds;
    for (double l : {0.0, 0.75, 0.9375, 0.984375}) preds.push_back({l, "q-oscillator level"});
    spec::VerifyOptions opt;
    opt.tol = 1e-6;
    opt.grown = Window::line(-60, 60);
    auto rep = spec::verify_factored_spectrum([&](const Window& w) { return e.Q(w); }, preds, W, opt);
    double dist = 0;
    for (const auto& m : rep.matches) dist = std::max(dist, m.distance);
    out.push_back(holds("spectrum verified with window stability", rep.pass));
    out.push_back(below("largest level distance", dist, 1e-6));
    double rel = 0, tau = 0;
    auto w = Window::line(-9, 10);
    for (int i = 0; i < 50; ++i) {
        double a = std::exp(g.uniform(std::log(0.2), std::log(5.0)));
        if (std::abs(a - 1) < 1e-3) a = 2.0;
        oned::ExpQ1D p(g.uniform(0.2, 3.0) * g.sign(), a * g.sign());
        rel = std::max(rel, oned::q_osc_relation_residual(p, w));
        tau = std::max(tau, oned::tau_conjugate(p, w));
    }
    out.push_back(below("q-relation, 50 draws", rel, 1e-12));
    out.push_back(below("tau identity, 50 draws", tau, 1e-12));
    return out;
}

inline std::vector<Check> hyperbolic(Rng& g) {
    auto w = Window::square(0, 9);
    double gauge = 0, paths = 0, round = 0;
    for (int t = 0; t < 100; ++t) {
        auto L = detail::random_quad(g, w);
        auto f = Field::real(w, [&](const Vec&) { return std::exp(g.uniform(-1, 1)) * g.sign(); });
        auto h = Field::real(w, [&](const Vec&) { return std::exp(g.uniform(-1, 1)); });
        gauge = std::max(gauge, hyp::invariant_distance(hyp::invariants(L), hyp::invariants(hyp::gauge_transform(L, f, h))));
    }
    for (int t = 0; t < 50; ++t) {
        auto L = detail::random_quad(g, w);
        auto I = hyp::invariants(L);
        auto step = hyp::laplace_on_invariants(I.w, I.H);
        auto It = hyp::invariants(hyp::laplace_first(L));
        paths = std::max({paths, detail::max_rel(It.w, step.w), detail::max_rel(It.H, step.H)});
    }
    for (int t = 0; t < 20; ++t) {
        auto L = detail::random_quad(g, w);
        auto I = hyp::invariants(L);
        round = std::max({round, hyp::invariant_distance(I, hyp::invariants(hyp::laplace_second(hyp::laplace_first(L)))),
                          hyp::invariant_distance(I, hyp::invariants(hyp::laplace_first(hyp::laplace_second(L))))});
    }
    return {below("gauge invariance of K1, K2 (100 gauges)", gauge, 1e-12),
            below("two-path Laplace consistency (50)", paths, 1e-10),
            below("first/second transform round trip (20)", round, 1e-10)};
}

inline std::vector<Check> toda(Rng& g) {
    auto w = Window::square(0, 14);
    double p[8];
    for (double& x : p) x = g.uniform(0.1, 0.4);
    auto s = [&](double amp, double k1, double k2, double base) {
        return Field::real(w, [=](const Vec& n) { return base + amp * std::sin(k1 * n[0] + k2 * n[1]); });
    };
    hyp::QuadOp L{w, s(0.3, p[0], p[1], 3.0), s(0.2, p[2], p[3], 1.0), s(0.2, p[4], p[5], 1.2), s(0.2, p[6], p[7], 0.9)};
    auto I = hyp::invariants(L);
    double chain = hyp::toda_residual(hyp::toda_chain(I.w, I.H, 4));
    auto c = Window::square(0, 8);
    double fixed = hyp::toda_residual(hyp::toda_chain(Field::constant(c, 2.0), Field::constant(c, 1.0), 4));
    return {below("four-step chain residual", chain, 1e-9), below("constant fixed point", fixed, 1e-14)};
}

inline std::vector<Check> elliptic(Rng& g) {
    auto W = Window::square(0, 11);
    double rec = 0, l15 = 0, inv = 0;
    for (int t = 0; t < 50; ++t) {
        auto L = detail::random_tri(g, W).op();
        for (int j = 1; j <= 6; ++j)
            rec = std::max(rec, interior_equal_rel(tri::factorize_elliptic(L, j).reconstruct(), L, 0.0).deviation);
    }
    for (int t = 0; t < 10; ++t) {
        auto L = detail::random_tri(g, Window::square(0, 12)).op();
        auto r = tri::odd_even_relations(L);
        double m = std::max({r.w_odd, r.w_even, r.q_odd, r.q_even});
        if (r.lt_odd) m = std::max(m, *r.lt_odd);
        if (r.lt_even) m = std::max(m, *r.lt_even);
        l15 = std::max(l15, m);
    }
    for (int t = 0; t < 10; ++t) {
        auto L = detail::random_tri(g, Window::square(0, 13)).op();
        for (int j = 1; j <= 6; ++j)
            inv = std::max(inv, tri::invariant_distance(tri::tri_invariants(L),
                                                        tri::tri_invariants(tri::laplace_P(tri::laplace_P(L, j), j + 3))));
    }
    return {below("reconstruction, 50 operators x 6 types", rec, 1e-12), below("odd/even factorization identities", l15, 1e-11),
            below("P_j then P_{j+3} at invariant level", inv, 1e-10)};
}

inline std::vector<Check> q_landau(Rng& g) {
    std::vector<Check> out;
    double rel = 0;
    for (int t = 0; t < 20; ++t) {
        auto p = tri::ExpQ2D::q_landau(g.uniform(0.5, 2.0), g.uniform(0.5, 2.0), g.uniform(0.7, 1.3), g.uniform(0.7, 1.4));
        rel = std::max(rel, tri::q_landau_relation_residual(p, Window::square(-6, 6)));
    }
    out.push_back(below("relation, 20 parameter sets", rel, 1e-12));
    double ladder = 0;
    for (int k = 0; k <= 3; ++k) {
        gs::LadderSpec s;
        s.k = k;
        auto st = gs::ladder_eigenfunction(s, Window::square(-30, 30));
        ladder = std::max(ladder, spec::eigen_residual(st.op, st.psi, st.lambda));
    }
    out.push_back(below("ladder residuals k <= 3", ladder, 1e-9));
    const auto p = tri::ExpQ2D::q_landau(1, 1, 0.8, 1.2);
    auto make = [&](const Window& w) { return gs::landau_operator(p, w, oned::Branch::L); };
    std::vector<spec::Prediction> preds;
    for (double l : gs::landau_levels(0.8, 3, oned::Branch::L)) preds.push_back({l, "q-Landau level"});
    spec::VerifyOptions opt;
    opt.tol = 1e-5;
    opt.grown = Window::square(0, 49);
    auto rep = spec::verify_spectrum(make, preds, Window::square(0, 39), opt);
    bool localized = true;
    for (const auto& m : rep.matches) localized = localized && m.localized;
    out.push_back(holds("levels {0, 0.36, 0.5904} verified on 40x40", rep.pass));
    out.push_back(holds("matched eigenvectors localized", localized));
    auto E = spec::eigs_lowest(spec::assemble(gs::landau_operator(p, Window::square(0, 39), oned::Branch::Ltilde)), 1);
    out.push_back(at_least("tilde branch minimum eigenvalue", E.values.front(), 1 - 0.64 - 1e-5));
    return out;
}

inline std::vector<Check> ground_states(Rng&) {
    using gs::Color;
    struct Set {
        const char* tag;
        gs::Mat l;
    };
    const std::vector<Set> sets{{"a", {{2, 0}, {1, 2}}},
                                {"a", {{2, 1}, {0, 2}}},
                                {"a", {{1.5, 0.3}, {0.6, 1.8}}},
                                {"c'", {{2, 0.5}, {0.2, 2}}},
                                {"c'", {{1.8, 0.1}, {0.4, 2.2}}}};
    double res = 0, tail = 0;
    bool vanishing = true;
    for (const auto& s : sets)
        for (Color col : {Color::Black, Color::White}) {
            gs::GroundStateSpec sp;
            sp.color = col;
            sp.case_tag = s.tag;
            sp.l = col == Color::Black ? s.l : gs::negated(s.l);
            sp.c = {1.0, 1.0};
            sp.window = Window::square(-20, 20);
            bool case_one = std::string(s.tag) == "a" && s.l[1][0] > s.l[0][1];
            if (case_one) sp.q = 0;
            auto g = gs::build_ground_state(sp);
            res = std::max(res, gs::zero_mode_residual(gs::defining_operator(sp), g.psi));
            tail = std::max(tail, gs::tail_ratio(g.psi));
            if (case_one) {
                std::size_t forced = 0;
                g.psi.window.for_each([&](std::size_t i, const Vec& n) {
                    if (g.forced_zero(n)) {
                        ++forced;
                        vanishing = vanishing && g.psi.values[i] == 0.0;
                    }
                });
                vanishing = vanishing && forced > 0 && g.q.has_value();
            }
        }
    return {below("defining-equation residual", res, 1e-12), below("boundary tail", tail, 1e-8),
            holds("case 1 vanishes on its half plane", vanishing)};
}

inline std::vector<Check> consistency(Rng& g) {
    using namespace flat;
    std::vector<Check> out;
    auto k = curvature(TrianglePair::commuting(1, 1, 2, Window::square(-5, 5)));
    double a = 0, b = 0;
    for (std::size_t i = 0; i < k.A.size(); ++i) {
        a = std::max(a, std::abs(k.A.values[i] - 1.0));
        b = std::max(b, std::abs(k.B.values[i]) / k.B_scale.values[i].real());
    }
    out.push_back(below("commuting pair |A - 1|", a, 1e-12));
    out.push_back(below("commuting pair |B| (relative)", b, 1e-12));
    auto random_pair = [&](const Window& w) {
        return TrianglePair{w, g.field(w, 0.5, 1.5), g.field(w, 0.5, 1.5), g.field(w, 0.5, 1.5), g.field(w, 0.5, 1.5)};
    };
    auto flat_pair = [&](const Window& w) {
        auto p = TrianglePair::commuting(g.uniform(0.5, 1.5), g.uniform(0.5, 1.5), g.uniform(0.7, 1.4), w);
        std::map<Vec, double> gauge;
        return gauge_transform(p, [&](const Vec& n) {
            auto it = gauge.find(n);
            if (it == gauge.end()) it = gauge.emplace(n, g.uniform(0.5, 2.0)).first;
            return it->second;
        });
    };
    int agree = 0, expected = 0;
    double path = 0, resid = 0;
    for (int t = 0; t < 100; ++t) {
        bool make_flat = t < 50;
        auto W = Window::square(-3, 4);
        auto p = make_flat ? flat_pair(W) : random_pair(W);
        bool f = flatness_check(p).flat;
        bool r = ratio_relation_check(p).holds;
        agree += f == r;
        expected += f == make_flat;
        if (f) {
            auto x = propagate_from_edge(p, {0, 0, 0}, 0.4, -0.7, std::nullopt, Order::Fan);
            auto y = propagate_from_edge(p, {0, 0, 0}, 0.4, -0.7, std::nullopt, Order::RowMajor);
            path = std::max(path, max_diff(x, y) / x.max_abs());
            resid = std::max(resid, system_residual(p, x));
        }
    }
    out.push_back(at_least("flatness agrees with the ratio relation (of 100)", agree, 100));
    out.push_back(at_least("instances classified as constructed (of 100)", expected, 100));
    out.push_back(below("propagation path independence", path, 1e-10));
    out.push_back(below("propagated solution residual", resid, 1e-10));
    double ext = 0;
    for (double d : {1.0, 0.6}) {
        auto q = tri::ExpQ2D::q_landau(1, d, 1, 2);
        auto W = Window::square(-4, 4);
        auto p = TrianglePair::commuting(q.c, q.d, q.v(), W);
        for (int n2 : {-2, 0, 3}) {
            auto line = Window::line(-4, 4);
            auto phi = line_solution(line_equation(q, n2, line), 0.3, -0.8);
            auto psi = propagate_from_edge(p, {-3, n2, 0}, 0.3, -0.8);
            ext = std::max(ext, system_residual(p, psi));
            line.for_each([&](std::size_t i, const Vec& n) {
                ext = std::max(ext, std::abs(psi[{n[0], n2, 0}] - phi.values[i]) / phi.max_abs());
            });
        }
    }
    out.push_back(below("line solutions extend to the plane", ext, 1e-10));
    return out;
}

inline std::vector<Check> tetra(Rng& g) {
    using namespace tet;
    std::vector<Check> out;
    auto build = [&](const Window& w) {
        StencilOperator Q(w);
        Q.set(Zero, g.field(w, 0.5, 1.5));
        for (const auto& t : axes)
            Q.set(t, Field::real(w, [&](const Vec&) { return g.sign() * g.uniform(0.5, 1.5); }));
        auto P = compose(Q, adjoint(Q));
        return TetraOp::from_operator(plus_diag(P, g.field(P.domain(), -1, 1)));
    };
    double round = 0;
    for (int t = 0; t < 2; ++t) {
        auto L = build(Window::cube(0, 11));
        round = std::max(round, interior_equal_rel(tetra_factorize(L).product(), L.op(), 0.0).deviation);
    }
    out.push_back(below("factorization round trip on 12^3", round, 1e-11));
    auto L = build(Window::cube(0, 7));
    L.c[0][{3, 3, 3}] *= 1.01;
    auto cond = tetra_factor_condition(L);
    auto failing = std::count(cond.holds.begin(), cond.holds.end(), 0);
    bool detected = !cond.all && failing == 1 && cond.first_failure == Vec{4, 4, 3};
    out.push_back(holds("1% perturbation detected at its site", detected));
    double rel = 0;
    for (int t = 0; t < 10; ++t) {
        double h = g.uniform(-0.5, 0.5);
        ExpQ3D p{g.uniform(0.5, 1.5), g.uniform(0.5, 1.5), g.uniform(0.5, 1.5), {}, h};
        for (std::size_t i = 0; i < 3; ++i) {
            p.l[i][i] = h / 2;
            for (std::size_t j = i + 1; j < 3; ++j) {
                p.l[i][j] = g.uniform(-0.3, 0.3);
                p.l[j][i] = h - p.l[i][j];
            }
        }
        rel = std::max(rel, q_relation_residual_3d(p, Window::cube(-3, 3)));
    }
    out.push_back(below("q-relation, 10 parameter sets", rel, 1e-12));
    auto W = Window::cube(-6, 6);
    const double C = 0.8, D = 1.3, alpha = 0.35;
    auto Q = exp_Q3(ExpQ3D::commuting(C, D, 1.0, alpha, 0.0, 0.0), W);
    auto tc = flat::tetra_consistency_check(Q, adjoint(Q));
    double unit = 0;
    if (tc.ratio.f)
        for (const auto& v : tc.ratio.f->values) unit = std::max(unit, std::abs(v - 1.0));
    out.push_back(holds("commuting family satisfies the ratio relation", tc.ratio.holds));
    out.push_back(below("ratio f = 1", unit, 1e-12));
    double plane = std::numeric_limits<double>::infinity();
    if (tc.in_plane) {
        plane = 0;
        auto R = flat::plane_restriction(*tc.in_plane, 1, Window::square(-2, 2));
        R.window().for_each([&](std::size_t, const Vec& m) {
            double n1 = m[0], n2 = m[1];
            const std::pair<Vec, double> expect[] = {
                {Zero, C * C * std::exp(2 * alpha * n2) + D * D * std::exp(-2 * alpha * n1)},
                {T1, C * std::exp(alpha * n2)},
                {-T1, C * std::exp(alpha * n2)},
                {T2, D * std::exp(-alpha * n1)},
                {-T2, D * std::exp(-alpha * n1)},
                {T2 - T1, C * D * std::exp(alpha * (n2 - n1 + 1))},
                {T1 - T2, C * D * std::exp(alpha * (n2 - n1 - 1))},
            };
            for (const auto& [o, v] : expect) plane = std::max(plane, std::abs(R.coeff(o, m) - v) / v);
        });
    }
    out.push_back(below("in-plane operator matches the closed form", plane, 1e-13));
    return out;
}

inline std::vector<Check> flux(Rng& g) {
    constexpr double pi = std::numbers::pi;
    auto W = Window::square(0, 8);
    tri::TriOp H{W, g.field(W, 5, 6), g.complex_field(W), g.complex_field(W), g.complex_field(W)};
    auto L = H.op();
    auto f0 = tri::magnetic_flux(L);
    double inv = 0;
    for (int t = 0; t < 100; ++t) {
        auto f1 = tri::magnetic_flux(detail::phase_gauge(L, g.field(W, -10, 10)));
        for (std::size_t i = 0; i < f0.black.size(); ++i)
            inv = std::max(inv, std::abs(tri::canonical_phase(f0.black.values[i].real() - f1.black.values[i].real())));
        for (std::size_t i = 0; i < f0.white.size(); ++i)
            inv = std::max(inv, std::abs(tri::canonical_phase(f0.white.values[i].real() - f1.white.values[i].real())));
    }
    double round = 0;
    for (int t = 0; t < 10; ++t) {
        auto L0 = detail::random_tri(g, Window::square(0, 9)).op();
        auto r = tri::gauge_reduce_to_real(detail::phase_gauge(L0, g.field(L0.window(), -pi, pi)));
        round = std::max(round, interior_equal_rel(r.real_op, L0, 0.0).deviation);
    }
    bool rejected = true;
    for (double Phi : {pi / 2, 1.0, 2.5}) {
        try {
            tri::gauge_reduce_to_real(tri::homogeneous_magnetic_operator(Phi, W).op());
            rejected = false;
        } catch (const ComputeError& e) {
            rejected = rejected && e.code == ErrorCode::NontrivialFlux;
        }
    }
    return {below("flux invariance under 100 phase gauges", inv, 1e-12), below("real-gauge round trip", round, 1e-10),
            holds("nonzero uniform flux rejected", rejected)};
}

inline std::vector<Scenario> scenarios() {
    return {
        {"charlier", 1, "Charlier ground state weights and polynomial orthogonality", charlier, 1},
        {"heisenberg", 2, "Charlier commutator on the half line", heisenberg, 1},
        {"q-oscillator", 3, "1D q-oscillator ladder, spectrum and relations", q_oscillator, 10},
        {"hyperbolic", 4, "hyperbolic invariants and Laplace transformations", hyperbolic, 5},
        {"toda", 5, "discrete Toda chain", toda, 2},
        {"elliptic", 6, "triangular-lattice factorizations and Laplace transformations", elliptic, 10},
        {"q-landau", 7, "2D q-Landau relation, ladder and spectrum", q_landau, 60},
        {"ground-states", 8, "separated ground states, both colors", ground_states, 5},
        {"consistency", 9, "curvature, flatness and propagation", consistency, 5},
        {"tetra", 10, "tetrahedral factorization and relations", tetra, 30},
        {"flux", 11, "magnetic flux and real gauge", flux, 5},
    };
}

inline ScenarioResult run(const Scenario& s, std::uint64_t seed) {
    ScenarioResult r;
    r.name = s.name;
    r.budget = s.budget;
    r.criterion = s.criterion;
    Rng g(seed + std::uint64_t(s.criterion));
    auto t0 = std::chrono::steady_clock::now();
    try {
        r.checks = s.run(g);
        r.pass = !r.checks.empty();
        for (const auto& c : r.checks) r.pass = r.pass && c.pass;
    } catch (const std::exception& e) {
        r.error = e.what();
        r.pass = false;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

struct SuiteOptions {
    std::uint64_t seed = 20240901;
    std::string filter; ///< substring of the scenario name; empty runs all
    bool stop_on_failure = false;
};

inline std::vector<ScenarioResult> demo_suite(const SuiteOptions& opt = {}) {
    std::vector<ScenarioResult> out;
    for (const auto& s : scenarios()) {
        if (!opt.filter.empty() && s.name.find(opt.filter) == std::string::npos) continue;
        out.push_back(run(s, opt.seed));
        if (opt.stop_on_failure && !out.back().pass) break;
    }
    return out;
}

inline bool all_pass(const std::vector<ScenarioResult>& rs) {
    if (rs.empty()) return false;
    for (const auto& r : rs)
        if (!r.pass) return false;
    return true;
}

/// Suite outcome with one mutation switched on.
inline bool suite_passes_under(mutation::Site site, const SuiteOptions& opt = {}) {
    mutation::Scope scope(site);
    SuiteOptions o = opt;
    o.stop_on_failure = true;
    return all_pass(demo_suite(o));
}

} // namespace ldx::demo
