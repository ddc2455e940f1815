#pragma once

#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <initializer_list>
#include <optional>
#include <utility>
#include <vector>

#include "ldx/elliptic.hpp"
#include "ldx/lattice.hpp"
#include "ldx/mutation.hpp"
#include "ldx/tetra.hpp"

namespace ldx::flat {

/// Black/white pair Q1 = 1 + a T1 + b T2, Q2 = 1 + c T1^{-1} + d T2^{-1}; all fields on `window`.
struct TrianglePair {
    Window window;
    Field a, b, c, d;

    StencilOperator Q1() const {
        auto Q = StencilOperator::identity(window);
        Q.set(T1, a);
        Q.set(T2, b);
        return Q;
    }
    StencilOperator Q2() const {
        auto Q = StencilOperator::identity(window);
        Q.set(-T1, c);
        Q.set(-T2, d);
        return Q;
    }

    /// Q = 1 + c v^{n2} T1 + d v^{-n1} T2 with its adjoint as the white operator.
    static TrianglePair commuting(double c, double d, double v, const Window& w) {
        if (w.dims != 2) throw LatticeError("TrianglePair: window must be 2D");
        double lv = std::log(v);
        auto A = Field::real(w, [&](const Vec& n) { return c * std::exp(lv * n[1]); });
        auto B = Field::real(w, [&](const Vec& n) { return d * std::exp(-lv * n[0]); });
        return {w, A, B, A, B};
    }
};

/// Pair for psi' = g psi: every coefficient picks up g_n / g_{n+offset}.
inline TrianglePair gauge_transform(const TrianglePair& p, const std::function<double(const Vec&)>& g) {
    auto scaled = [&](const Field& f, const Vec& off) {
        return Field::real(p.window, [&](const Vec& n) { return f[n].real() * g(n) / g(n + off); });
    };
    return {p.window, scaled(p.a, T1), scaled(p.b, T2), scaled(p.c, -T1), scaled(p.d, -T2)};
}

struct Curvature {
    Field A, B;
    Field A_formula, B_formula; ///< transcribed closed forms, kept for comparison
    Field B_scale;              ///< largest intermediate term of the B transport
    double formula_deviation = 0;
};

namespace detail {

struct Transport {
    cplx value;
    double scale;
};

/// Carries (psi_{n-T1}, psi_n) once around the six triangles at n and returns the new psi_{n-T1}.
inline Transport transport(const TrianglePair& p, const Vec& n, cplx left, cplx centre) {
    double scale = 0;
    // psi_target = -(sum of terms) / pivot; scale tracks the largest term seen.
    auto step = [&](std::initializer_list<cplx> terms, cplx pivot, const Vec& at) {
        if (pivot == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "vanishing coefficient in vertex star", at);
        cplx s = 0;
        for (cplx t : terms) {
            s += t;
            scale = std::max(scale, std::abs(t / pivot));
        }
        return -s / pivot;
    };
    cplx s = step({centre, p.c[n] * left}, p.d[n], n);                        // n-T2
    cplx t = step({s, p.b[n - T2] * centre}, p.a[n - T2], n - T2);            // n+T1-T2
    const Vec cr = mutation::on(mutation::Site::CurvatureTransport) ? n : n + T1;
    cplx r = step({p.c[cr] * centre, p.d[n + T1] * t}, 1.0, n + T1);         // n+T1
    cplx u = step({centre, p.a[n] * r}, p.b[n], n);                           // n+T2
    cplx v = step({u, p.d[n + T2] * centre}, p.c[n + T2], n + T2);            // n-T1+T2
    cplx x = step({p.a[n - T1] * centre, p.b[n - T1] * v}, 1.0, n - T1);     // n-T1
    return {x, scale};
}

inline Window star_domain(const Window& w) {
    auto s = inset(w, 1);
    if (!s) throw LatticeError("curvature: window too small");
    return *s;
}

} // namespace detail

/// Curvature (A_n, B_n) from transporting the edge data around each vertex star.
inline Curvature curvature(const TrianglePair& p) {
    auto D = detail::star_domain(p.window);
    Curvature k{Field(D), Field(D), Field(D), Field(D), Field(D), 0.0};
    D.for_each([&](std::size_t i, const Vec& n) {
        k.A.values[i] = detail::transport(p, n, 1.0, 0.0).value;
        auto tb = detail::transport(p, n, 0.0, 1.0);
        k.B.values[i] = tb.value;
        k.B_scale.values[i] = tb.scale;
        const auto &a = p.a, &b = p.b, &c = p.c, &d = p.d;
        k.A_formula.values[i] = b[n - T1] * d[n + T1] / (b[n] * c[n + T2] * d[n] * a[n - T2]);
        k.B_formula.values[i] =
            b[n - T1] / c[n + T2] *
                (1.0 / b[n] * (d[n + T1] / a[n - T2] * (1.0 / d[n] - b[n - T2]) - c[n + T1] + 1.0) - d[n + T2]) -
            a[n - T1];
        k.formula_deviation = std::max({k.formula_deviation, std::abs(k.A_formula.values[i] - k.A.values[i]),
                                        std::abs(k.B_formula.values[i] - k.B.values[i])});
    });
    for (Field* f : {&k.A, &k.B, &k.A_formula, &k.B_formula}) f->refresh_kind();
    return k;
}

struct FlatnessReport {
    bool flat = true;
    double max_A = 0; ///< max |A - 1|
    double max_B = 0; ///< max |B| relative to its terms
    std::optional<Vec> witness;
};

inline FlatnessReport flatness_check(const TrianglePair& p, double tol = 1e-9) {
    auto k = curvature(p);
    FlatnessReport r;
    k.A.window.for_each([&](std::size_t i, const Vec& n) {
        double da = std::abs(k.A.values[i] - 1.0);
        double db = std::abs(k.B.values[i]) / std::max(k.B_scale.values[i].real(), 1e-300);
        r.max_A = std::max(r.max_A, da);
        r.max_B = std::max(r.max_B, db);
        if ((da > tol || db > tol) && r.flat) {
            r.flat = false;
            r.witness = n;
        }
    });
    return r;
}

/// Site-wise ratio f with LHS = f RHS, coefficient by coefficient.
struct RatioReport {
    bool holds = false;
    std::optional<Field> f;
    double spread = 0; ///< largest relative disagreement of the per-offset ratios
    std::optional<Vec> witness;
};

inline RatioReport match_ratio(const StencilOperator& lhs, const StencilOperator& rhs, double tol) {
    auto D = intersect(lhs.domain(), rhs.domain());
    if (!D) throw LatticeError("ratio: disjoint domains");
    std::map<Vec, int> offs;
    for (const auto& o : lhs.offsets()) offs[o] = 1;
    for (const auto& o : rhs.offsets()) offs[o] = 1;
    RatioReport r;
    r.holds = true;
    Field f(*D);
    D->for_each([&](std::size_t i, const Vec& n) {
        double scale = 0;
        for (const auto& [o, _] : offs) scale = std::max({scale, std::abs(lhs.coeff(o, n)), std::abs(rhs.coeff(o, n))});
        std::optional<cplx> ratio;
        double dev = 0;
        for (const auto& [o, _] : offs) {
            cplx l = lhs.coeff(o, n), q = rhs.coeff(o, n);
            bool lz = std::abs(l) <= 1e-14 * scale, rz = std::abs(q) <= 1e-14 * scale;
            if (lz && rz) continue;
            if (rz) throw ComputeError(ErrorCode::ZeroPivot, "right side vanishes where left side does not", n);
            cplx v = l / q;
            if (!ratio) ratio = v;
            else dev = std::max(dev, std::abs(v - *ratio) / std::abs(*ratio));
        }
        if (!ratio || *ratio == 0.0) dev = std::numeric_limits<double>::infinity();
        else f.values[i] = *ratio;
        r.spread = std::max(r.spread, dev);
        if (dev > tol && r.holds) {
            r.holds = false;
            r.witness = n;
        }
    });
    f.refresh_kind();
    if (r.holds) r.f = f;
    return r;
}

/// (Q1 - 1)(Q2 - 1) - 1 against (Q2 - 1)(Q1 - 1) - 1.
inline RatioReport commutation_ratio(const StencilOperator& Q1, const StencilOperator& Q2, double tol = 1e-9) {
    auto P1 = plus_identity(Q1, -1.0), P2 = plus_identity(Q2, -1.0);
    return match_ratio(plus_identity(compose(P1, P2), -1.0), plus_identity(compose(P2, P1), -1.0), tol);
}

inline RatioReport ratio_relation_check(const TrianglePair& p, double tol = 1e-9) {
    return commutation_ratio(p.Q1(), p.Q2(), tol);
}

enum class Order { Fan, RowMajor };

namespace detail {

struct Triangle {
    std::array<Vec, 3> v; ///< v[0] carries the unit coefficient
    bool black;
};

/// Black at p: {p, p+T1, p+T2}; white at p: {p, p-T1, p-T2}.
inline cplx triangle_coeff(const TrianglePair& P, const Triangle& t, int k) {
    if (k == 0) return 1.0;
    const Vec& p = t.v[0];
    if (t.black) return k == 1 ? P.a[p] : P.b[p];
    return k == 1 ? P.c[p] : P.d[p];
}

inline std::optional<Triangle> make_triangle(const Window& w, const Vec& p, bool black) {
    Triangle t{{p, black ? p + T1 : p - T1, black ? p + T2 : p - T2}, black};
    for (const auto& q : t.v)
        if (!w.contains(q)) return std::nullopt;
    return t;
}

/// The six triangles with a vertex at n, anticlockwise from the white one at n.
inline std::vector<Triangle> fan(const Window& w, const Vec& n) {
    std::vector<Triangle> r;
    const std::array<std::pair<Vec, bool>, 6> at{{{n, false},
                                                 {n - T2, true},
                                                 {n + T1, false},
                                                 {n, true},
                                                 {n + T2, false},
                                                 {n - T1, true}}};
    for (const auto& [p, black] : at)
        if (auto t = make_triangle(w, p, black)) r.push_back(*t);
    return r;
}

} // namespace detail

/// Solution from psi_{n0-T1} = v0, psi_{n0} = v1 by solving triangle after triangle.
inline Field propagate_from_edge(const TrianglePair& p, const Vec& n0, cplx v0, cplx v1,
                                 std::optional<Window> window = std::nullopt, Order order = Order::Fan,
                                 double tol = 1e-9) {
    auto fc = flatness_check(p, tol);
    if (!fc.flat) throw ComputeError(ErrorCode::NotFlat, "curvature is nontrivial", *fc.witness);
    const Window W = window ? *window : p.window;
    if (!p.window.contains(W)) throw LatticeError("propagate: window exceeds the pair's window");
    if (!W.contains(n0) || !W.contains(n0 - T1)) throw LatticeError("propagate: seed edge outside window");
    Field psi(W, ScalarKind::real);
    std::vector<char> known(W.size(), 0);
    auto set = [&](const Vec& q, cplx v) {
        psi[q] = v;
        known[W.index(q)] = 1;
    };
    set(n0 - T1, v0);
    set(n0, v1);
    std::size_t count = 2;
    // Solves the one unknown vertex of t if exactly two are known; returns it.
    auto solve = [&](const detail::Triangle& t) -> std::optional<Vec> {
        int unknown = -1, nk = 0;
        for (int k = 0; k < 3; ++k) {
            if (known[W.index(t.v[std::size_t(k)])]) ++nk;
            else unknown = k;
        }
        if (nk != 2) return std::nullopt;
        cplx piv = detail::triangle_coeff(p, t, unknown);
        if (piv == 0.0) return std::nullopt;
        cplx s = 0;
        for (int k = 0; k < 3; ++k)
            if (k != unknown) s += detail::triangle_coeff(p, t, k) * psi[t.v[std::size_t(k)]];
        set(t.v[std::size_t(unknown)], -s / piv);
        ++count;
        return t.v[std::size_t(unknown)];
    };
    if (order == Order::Fan) {
        std::deque<Vec> queue{n0 - T1, n0};
        while (!queue.empty()) {
            Vec n = queue.front();
            queue.pop_front();
            bool progress = true;
            while (progress) {
                progress = false;
                for (const auto& t : detail::fan(W, n))
                    if (auto q = solve(t)) {
                        queue.push_back(*q);
                        progress = true;
                    }
            }
        }
    } else {
        bool progress = true;
        while (progress) {
            progress = false;
            W.for_each([&](std::size_t, const Vec& q) {
                for (bool black : {true, false})
                    if (auto t = detail::make_triangle(W, q, black))
                        if (solve(*t)) progress = true;
            });
        }
    }
    if (count != W.size()) {
        for (std::size_t i = 0; i < W.size(); ++i)
            if (!known[i]) throw ComputeError(ErrorCode::ZeroPivot, "vertex not reachable", W.point(i));
    }
    psi.refresh_kind();
    return psi;
}

/// max(|Q1 psi|, |Q2 psi|) / max |psi|.
inline double system_residual(const TrianglePair& p, const Field& psi) {
    auto Q1 = p.Q1(), Q2 = p.Q2();
    StencilOperator A(psi.window), B(psi.window);
    for (const auto& [o, f] : Q1.terms()) A.set(o, f);
    for (const auto& [o, f] : Q2.terms()) B.set(o, f);
    double m = psi.max_abs();
    if (m == 0.0) throw LatticeError("system_residual: zero field");
    return std::max(apply(A, psi).max_abs(), apply(B, psi).max_abs()) / m;
}

/// Row n2 of the commuting family:
/// c v^{n2} (psi_{n+T1} + psi_{n-T1}) + (1 + c^2 v^{2 n2} - d^2 v^{-2 n1}) psi_n.
inline StencilOperator line_equation(const tri::ExpQ2D& p, int n2, const Window& line) {
    if (std::abs(p.l[0][0]) > 1e-14 || std::abs(p.l[1][1]) > 1e-14 || std::abs(p.l[0][1] + p.l[1][0]) > 1e-14)
        throw ComputeError(ErrorCode::Domain, "line equation needs u = 1");
    if (line.dims != 1) throw LatticeError("line_equation: window must be 1D");
    double v = p.v();
    double cv = p.c * std::pow(v, n2);
    StencilOperator L(line);
    L.set(T1, Field::constant(line, cv));
    L.set(-T1, Field::constant(line, cv));
    L.set(Zero, Field::real(line, [&](const Vec& n) { return 1 + cv * cv - p.d * p.d * std::pow(v, -2.0 * n[0]); }));
    return L;
}

/// Solution of a three-term line operator from its first two values.
inline Field line_solution(const StencilOperator& L, cplx v0, cplx v1) {
    const Window& W = L.window();
    Field psi(W, ScalarKind::real);
    psi.values[0] = v0;
    if (W.size() > 1) psi.values[1] = v1;
    for (int n = W.lo[0] + 1; n < W.hi[0]; ++n) {
        Vec p{n, 0, 0};
        cplx up = L.coeff(T1, p);
        if (up == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "line recurrence pivot vanishes", p);
        psi[p + T1] = -(L.coeff(Zero, p) * psi[p] + L.coeff(-T1, p) * psi[p - T1]) / up;
    }
    psi.refresh_kind();
    return psi;
}

/// Relation (1 - Q1)(1 - Q2) - 1 = f ((1 - Q2)(1 - Q1) - 1) for a three-dimensional pair.
struct TetraConsistency {
    RatioReport ratio;
    std::optional<StencilOperator> in_plane; ///< (1 - Q1)(1 - Q2) - 1, offsets T_i - T_j only
};

inline TetraConsistency tetra_consistency_check(const StencilOperator& Q1, const StencilOperator& Q2,
                                                double tol = 1e-9) {
    if (Q1.window().dims != 3) throw LatticeError("tetra_consistency_check: operators must be 3D");
    TetraConsistency r{commutation_ratio(Q1, Q2, tol), std::nullopt};
    if (r.ratio.holds) {
        auto P1 = plus_identity(Q1, -1.0), P2 = plus_identity(Q2, -1.0);
        r.in_plane = plus_identity(compose(P1, P2), -1.0).pruned(0.0);
    }
    return r;
}

/// Restriction of an in-plane operator to n1 + n2 + n3 = s, in coordinates m = (n1, n2):
/// T1 - T3 -> T1, T2 - T3 -> T2, T1 - T2 -> T1 - T2.
inline StencilOperator plane_restriction(const StencilOperator& A, int s, const Window& plane) {
    if (plane.dims != 2) throw LatticeError("plane_restriction: plane window must be 2D");
    auto lift = [&](const Vec& m) { return Vec{m[0], m[1], s - m[0] - m[1]}; };
    plane.for_each([&](std::size_t, const Vec& m) {
        if (!A.domain().contains(lift(m))) throw LatticeError("plane_restriction: plane window leaves the domain");
    });
    StencilOperator R(plane);
    for (const auto& [o, f] : A.terms()) {
        if (o[0] + o[1] + o[2] != 0) throw LatticeError("plane_restriction: offset leaves the plane");
        Field g = Field::complex(plane, [&](const Vec& m) { return f[lift(m)]; });
        g.refresh_kind();
        R.set({o[0], o[1], 0}, g);
    }
    return R;
}

} // namespace ldx::flat
