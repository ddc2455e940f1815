#pragma once

#include <vector>

#include "ldx/lattice.hpp"
#include "ldx/mutation.hpp"

namespace ldx::hyp {

inline constexpr Vec T12{1, 1, 0};

/// L = a + b T1 + c T2 + d T1 T2 on a square-lattice window.
struct QuadOp {
    Window window;
    Field a, b, c, d;

    const Window& domain() const { return a.window; }

    StencilOperator op() const {
        StencilOperator L(window, domain());
        L.set(Zero, a);
        L.set(T1, b);
        L.set(T2, c);
        L.set(T12, d);
        return L;
    }

    static QuadOp from(const StencilOperator& L, double tol = 0.0) {
        for (const auto& [o, f] : L.terms())
            if (o != Zero && o != T1 && o != T2 && o != T12 && f.max_abs() > tol)
                throw LatticeError("operator has offset " + to_string(o, 2) + " outside the four-point stencil");
        auto get = [&](const Vec& o) { return L.has(o) ? L.field(o) : Field(L.domain()); };
        return {L.window(), get(Zero), get(T1), get(T2), get(T12)};
    }

    void require_nonvanishing() const {
        const char* names[] = {"a", "b", "c", "d"};
        const Field* fs[] = {&a, &b, &c, &d};
        for (int i = 0; i < 4; ++i)
            for (std::size_t k = 0; k < fs[i]->size(); ++k)
                if (fs[i]->values[k] == 0.0)
                    throw ComputeError(ErrorCode::ZeroPivot, std::string(names[i]) + " vanishes",
                                       fs[i]->window.point(k));
    }
};

/// Form a: L = f[(1 + u T1)(1 + v T2) + w]; form b: L = f[(1 + v T2)(1 + u T1) + w].
struct HypFactorization {
    Window window;
    Field f, u, v, w;
    bool form_b = false;

    const Window& domain() const { return f.window; }

    StencilOperator Q1() const {
        return StencilOperator::identity(window) + StencilOperator::term(window, T1, u);
    }
    StencilOperator Q2() const {
        return StencilOperator::identity(window) + StencilOperator::term(window, T2, v);
    }
    QuadOp reconstruct() const {
        auto inner = form_b ? compose(Q2(), Q1()) : compose(Q1(), Q2());
        auto L = compose(StencilOperator::diag(window, f), plus_diag(inner, w));
        return QuadOp::from(L);
    }
};

namespace detail {
inline Field ratio(const Window& D, const Field& num, const Field& den, const Vec& shift, const char* what) {
    Field r(D, ScalarKind::real);
    D.for_each([&](std::size_t i, const Vec& p) {
        cplx q = den[p - shift];
        if (q == 0.0) throw ComputeError(ErrorCode::ZeroPivot, std::string(what) + " divisor vanishes", p - shift);
        r.values[i] = num[p - shift] / q;
    });
    r.refresh_kind();
    return r;
}
inline void check_w(const Field& w) {
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w.values[i] == -1.0)
            throw ComputeError(ErrorCode::Degenerate, "w = -1 makes the invariants singular", w.window.point(i));
}
} // namespace detail

inline HypFactorization factorize_a(const QuadOp& L) {
    L.require_nonvanishing();
    auto D = intersect(L.domain(), Window(2, L.domain().lo + T1, L.domain().hi + T1));
    if (!D) throw LatticeError("factorize_a: domain too small");
    auto v = detail::ratio(*D, L.d, L.b, T1, "b");
    Field f(*D), u(*D), w(*D);
    D->for_each([&](std::size_t i, const Vec& p) {
        f.values[i] = L.c[p] / v.values[i];
        u.values[i] = L.b[p] / f.values[i];
        w.values[i] = L.a[p] / f.values[i] - 1.0;
    });
    for (auto* x : {&f, &u, &w}) x->refresh_kind();
    detail::check_w(w);
    return {L.window, f, u, v, w, false};
}

inline HypFactorization factorize_b(const QuadOp& L) {
    L.require_nonvanishing();
    auto D = intersect(L.domain(), Window(2, L.domain().lo + T2, L.domain().hi + T2));
    if (!D) throw LatticeError("factorize_b: domain too small");
    auto u = detail::ratio(*D, L.d, L.c, T2, "c");
    Field f(*D), v(*D), w(*D);
    D->for_each([&](std::size_t i, const Vec& p) {
        f.values[i] = L.b[p] / u.values[i];
        v.values[i] = L.c[p] / f.values[i];
        w.values[i] = L.a[p] / f.values[i] - 1.0;
    });
    for (auto* x : {&f, &v, &w}) x->refresh_kind();
    detail::check_w(w);
    return {L.window, f, u, v, w, true};
}

namespace detail {
inline Field reciprocal(const Field& w) {
    Field r(w.window, w.kind);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w.values[i] == 0.0) throw ComputeError(ErrorCode::Degenerate, "w vanishes", w.window.point(i));
        r.values[i] = 1.0 / w.values[i];
    }
    return r;
}
} // namespace detail

/// Laplace transform from a factorization: w Q_b w^{-1} Q_a + w with (Q_a, Q_b) = (Q1, Q2) for form a
/// and (Q2, Q1) for form b; the prefactor of the result is 1.
inline QuadOp laplace_from(const HypFactorization& F) {
    const Window& W = F.window;
    auto winv = detail::reciprocal(F.w);
    auto first = F.form_b ? F.Q2() : F.Q1();
    auto second = F.form_b ? F.Q1() : F.Q2();
    auto L = compose(StencilOperator::diag(W, F.w), second, StencilOperator::diag(W, winv), first);
    return QuadOp::from(plus_diag(L, F.w));
}

inline QuadOp laplace_first(const QuadOp& L) { return laplace_from(factorize_a(L)); }
inline QuadOp laplace_second(const QuadOp& L) { return laplace_from(factorize_b(L)); }

/// Image of a solution under the first-type transform: psi -> (1 + v T2) psi.
inline Field laplace_first_map(const QuadOp& L, const Field& psi) { return apply(factorize_a(L).Q2(), psi); }
inline Field laplace_second_map(const QuadOp& L, const Field& psi) { return apply(factorize_b(L).Q1(), psi); }

/// f_n L g_n: the coefficient of T^o becomes f_n c_o(n) g_{n+o}.
inline QuadOp gauge_transform(const QuadOp& L, const Field& f, const Field& g) {
    for (const Field* x : {&f, &g})
        for (std::size_t i = 0; i < x->size(); ++i)
            if (x->values[i] == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "gauge factor vanishes", x->window.point(i));
    auto G = compose(StencilOperator::diag(L.window, f), L.op(), StencilOperator::diag(L.window, g));
    return QuadOp::from(G);
}

struct HypInvariants {
    Field K1, K2, w, H;
};

/// K1 = b c_{+T1} / (d a_{+T1}), K2 = c b_{+T2} / (d a_{+T2}); (w, H) from form a with f = 1.
inline HypInvariants invariants(const QuadOp& L) {
    L.require_nonvanishing();
    auto D = intersect(L.domain(), Window(2, L.domain().lo - T12, L.domain().hi - T12));
    auto F = factorize_a(L);
    auto E = intersect(F.domain(), Window(2, F.domain().lo - T12, F.domain().hi - T12));
    if (!D || !E) throw LatticeError("invariants: domain too small");
    Field K1(*D), K2(*D), H(*E);
    D->for_each([&](std::size_t i, const Vec& p) {
        K1.values[i] = L.b[p] * L.c[p + T1] / (L.d[p] * L.a[p + T1]);
        K2.values[i] = L.c[p] * L.b[p + T2] / (L.d[p] * L.a[p + T2]);
    });
    E->for_each([&](std::size_t i, const Vec& p) {
        H.values[i] = F.v[p] * F.u[p + T2] / (F.u[p] * F.v[p + T1]);
    });
    for (auto* x : {&K1, &K2, &H}) x->refresh_kind();
    return {K1, K2, F.w, H};
}

/// Largest |K_i(A) - K_i(B)| relative to |K_i(A)| over the common domain.
inline double invariant_distance(const HypInvariants& A, const HypInvariants& B) {
    double m = 0;
    for (auto [x, y] : {std::pair{&A.K1, &B.K1}, {&A.K2, &B.K2}}) {
        auto D = intersect(x->window, y->window);
        if (!D) throw LatticeError("invariant fields share no points");
        D->for_each([&](std::size_t, const Vec& p) {
            m = std::max(m, std::abs((*x)[p] - (*y)[p]) / std::max(std::abs((*x)[p]), 1e-300));
        });
    }
    return m;
}

struct WH {
    Field w, H;
};

/// One Laplace step on (w, H):
///   1 + w~_{n+T1} = (1 + w_{n+T1}) H_n w_n w_{n+T1+T2} / (w_{n+T1} w_{n+T2}),
///   H~_n = (1 + w~_{n+T2}) / (1 + w_{n+T2}).
inline WH laplace_on_invariants(const Field& w, const Field& H) {
    auto Dn = intersect(H.window, Window(2, w.window.lo, w.window.hi - T12));
    if (!Dn) throw LatticeError("laplace_on_invariants: domain too small");
    Window Dw(2, Dn->lo + T1, Dn->hi + T1);
    Field wt(Dw);
    Dn->for_each([&](std::size_t, const Vec& n) {
        cplx den = w[n + T1] * w[n + T2];
        if (den == 0.0 || w[n] == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "w vanishes near site", n);
        cplx wn = mutation::on(mutation::Site::LaplaceInvariantStep) ? 1.0 : w[n];
        wt[n + T1] = (1.0 + w[n + T1]) * H[n] * wn * w[n + T12] / den - 1.0;
    });
    auto Dh = intersect(Window(2, Dw.lo - T2, Dw.hi - T2), Window(2, w.window.lo - T2, w.window.hi - T2));
    if (!Dh) throw LatticeError("laplace_on_invariants: domain too small for H");
    Field Ht(*Dh);
    Dh->for_each([&](std::size_t i, const Vec& n) {
        cplx den = 1.0 + w[n + T2];
        if (den == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "1 + w vanishes", n + T2);
        Ht.values[i] = (1.0 + wt[n + T2]) / den;
    });
    wt.refresh_kind();
    Ht.refresh_kind();
    return {wt, Ht};
}

/// Max deviation of the discrete Toda relation
///   (1+w^{k+2}_{n+T1})/(1+w^{k+1}_{n+T1}) * (1+w^k_{n+T2})/(1+w^{k+1}_{n+T2})
///     = w^{k+1}_n w^{k+1}_{n+T1+T2} / (w^{k+1}_{n+T1} w^{k+1}_{n+T2})
/// over all consecutive triples of the chain.
inline double toda_residual(const std::vector<Field>& chain) {
    if (chain.size() < 3) throw LatticeError("toda_residual needs at least three members");
    double m = 0;
    for (std::size_t k = 0; k + 2 < chain.size(); ++k) {
        const Field &w0 = chain[k], &w1 = chain[k + 1], &w2 = chain[k + 2];
        auto D = intersect(w1.window, Window(2, w1.window.lo, w1.window.hi - T12));
        D = D ? intersect(*D, Window(2, w2.window.lo - T1, w2.window.hi - T1)) : D;
        D = D ? intersect(*D, Window(2, w0.window.lo - T2, w0.window.hi - T2)) : D;
        if (!D) throw LatticeError("toda_residual: chain members share no stencil");
        D->for_each([&](std::size_t, const Vec& n) {
            cplx lhs = (1.0 + w2[n + T1]) / (1.0 + w1[n + T1]) * (1.0 + w0[n + T2]) / (1.0 + w1[n + T2]);
            cplx rhs = w1[n] * w1[n + T12] / (w1[n + T1] * w1[n + T2]);
            m = std::max(m, std::abs(lhs - rhs));
        });
    }
    return m;
}

/// Chain of potentials w^{(0..steps)} generated by iterated laplace_on_invariants.
inline std::vector<Field> toda_chain(const Field& w, const Field& H, int steps) {
    std::vector<Field> out{w};
    WH cur{w, H};
    for (int k = 0; k < steps; ++k) {
        cur = laplace_on_invariants(cur.w, cur.H);
        out.push_back(cur.w);
    }
    return out;
}

/// Pointwise deviation of the two-periodic chain recursion
///   w_{n+T1+T2} = w_n^{-1} (C + w_{n+T1})(C + w_{n+T2}) / ((1 + w_{n+T1})(1 + w_{n+T2})).
inline Field cyclic2_residual(const Field& w, double C) {
    Window D(2, w.window.lo, w.window.hi - T12);
    Field r(D);
    D.for_each([&](std::size_t i, const Vec& n) {
        cplx den = w[n] * (1.0 + w[n + T1]) * (1.0 + w[n + T2]);
        if (den == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "zero divisor", n);
        r.values[i] = w[n + T12] - (C + w[n + T1]) * (C + w[n + T2]) / den;
    });
    r.refresh_kind();
    return r;
}

/// Solution of the cyclic recursion from values on the bottom row and left column.
inline Field cyclic2_propagate(const Window& W, double C, const std::function<double(const Vec&)>& edge) {
    Field w(W);
    W.for_each([&](std::size_t i, const Vec& p) {
        if (p[0] == W.lo[0] || p[1] == W.lo[1]) {
            w.values[i] = edge(p);
            return;
        }
        Vec n = p - T12;
        w.values[i] = (C + w[n + T1]) * (C + w[n + T2]) / (w[n] * (1.0 + w[n + T1]) * (1.0 + w[n + T2]));
    });
    return w;
}

/// H companion of a two-periodic chain: H = (1 + w_{n+T2}) / (1 + C / w_{n+T2}).
inline Field cyclic2_H(const Field& w, double C) {
    Window D(2, w.window.lo, w.window.hi - T2);
    Field H(D);
    D.for_each([&](std::size_t i, const Vec& n) { H.values[i] = (1.0 + w[n + T2]) / (1.0 + C / w[n + T2]); });
    return H;
}

/// Solution of L psi = 0 from Goursat data on the bottom row and left column of the domain.
inline Field goursat_solution(const QuadOp& L, const std::function<cplx(const Vec&)>& edge) {
    L.require_nonvanishing();
    Window W(2, L.domain().lo, L.domain().hi + T12);
    W = *intersect(W, L.window);
    Field psi(W);
    W.for_each([&](std::size_t i, const Vec& p) {
        if (p[0] == W.lo[0] || p[1] == W.lo[1]) {
            psi.values[i] = edge(p);
            return;
        }
        Vec n = p - T12;
        psi.values[i] = -(L.a[n] * psi[n] + L.b[n] * psi[n + T1] + L.c[n] * psi[n + T2]) / L.d[n];
    });
    psi.refresh_kind();
    return psi;
}

/// Frame in which the ordered basis (e1-direction, e2-direction) becomes (T1, T2).
/// order 12: basis (T1^{e1}, T2^{e2}); order 21: basis (T2^{e1}, T1^{e2}).
inline AxisMap variant_frame(int e1, int e2, int order) {
    AxisMap M;
    if (order == 12) {
        M.sign = {e1, e2, 1};
    } else if (order == 21) {
        M.perm = {1, 0, 2};
        M.sign = {e1, e2, 1};
    } else {
        throw LatticeError("order must be 12 or 21");
    }
    return M;
}

/// One of the eight Laplace transformations: first type in the frame of the chosen ordered basis.
inline QuadOp laplace_variant(const QuadOp& L, int e1, int e2, int order) {
    if (std::abs(e1) != 1 || std::abs(e2) != 1) throw LatticeError("basis signs must be +-1");
    auto M = variant_frame(e1, e2, order);
    auto LM = transform(L.op(), M);
    // Right shift bringing the stencil back to {0, T1, T2, T1+T2}.
    Vec s{0, 0, 0};
    for (const auto& o : LM.offsets())
        for (int k = 0; k < 2; ++k) s[k] = std::max(s[k], -o[k]);
    const Window& W = LM.window();
    auto N = compose(LM, StencilOperator::shift(W, s));
    auto R = laplace_first(QuadOp::from(N));
    auto back = transform(compose(R.op(), StencilOperator::shift(W, -s)), M.inverse());
    return QuadOp::from(back);
}

} // namespace ldx::hyp
