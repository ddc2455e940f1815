#pragma once

#include <array>
#include <cmath>
#include <deque>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "ldx/lattice.hpp"
#include "ldx/mutation.hpp"

namespace ldx::tri {

inline constexpr Vec T21{-1, 1, 0};
inline constexpr Vec T12m{1, -1, 0};
inline constexpr std::array<Vec, 6> hex{T1, T2, T21, Vec{-1, 0, 0}, Vec{0, -1, 0}, T12m};

/// Basis pair (T1*, T2*) of factorization type j (j modulo 6, anticlockwise neighbours).
inline std::pair<Vec, Vec> basis_pair(int j) {
    int k = ((j - 1) % 6 + 6) % 6;
    return {hex[k], hex[(k + 1) % 6]};
}

/// Hermitian seven-point operator
/// a + b T1 + conj(c) T2 + d_{n-T1} T2T1^{-1} + conj(b)_{n-T1} T1^{-1} + c_{n-T2} T2^{-1} + conj(d)_{n-T2} T1T2^{-1}.
/// Real coefficients give the real self-adjoint layout.
struct TriOp {
    Window window;
    Field a, b, c, d;

    Window domain() const {
        std::optional<Window> D = inset(window, 1);
        for (const auto& W : {a.window, b.window, translate(b.window, T1), c.window, translate(c.window, T2),
                              translate(d.window, T1), translate(d.window, T2)})
            if (D) D = intersect(*D, W);
        if (!D) throw LatticeError("TriOp: empty domain");
        return *D;
    }

    StencilOperator op() const {
        Window D = domain();
        StencilOperator L(window, D);
        auto make = [&](auto fn) {
            Field f(D, ScalarKind::complex);
            D.for_each([&](std::size_t i, const Vec& n) { f.values[i] = fn(n); });
            f.refresh_kind();
            return f;
        };
        L.set(Zero, make([&](const Vec& n) { return a[n]; }));
        L.set(T1, make([&](const Vec& n) { return b[n]; }));
        L.set(T2, make([&](const Vec& n) { return std::conj(c[n]); }));
        L.set(T21, make([&](const Vec& n) { return d[n - T1]; }));
        L.set(-T1, make([&](const Vec& n) { return std::conj(b[n - T1]); }));
        L.set(-T2, make([&](const Vec& n) { return c[n - T2]; }));
        L.set(T12m, make([&](const Vec& n) { return std::conj(d[n - T2]); }));
        return L;
    }

    static TriOp from(const StencilOperator& L) {
        const Window& D = L.domain();
        Field dd(translate(D, -T1), ScalarKind::complex);
        const Field& src = L.field(T21);
        dd.window.for_each([&](std::size_t i, const Vec& m) { dd.values[i] = src[m + T1]; });
        dd.refresh_kind();
        return {L.window(), L.field(Zero), L.field(T1), map(L.field(T2), [](cplx z) { return std::conj(z); }), dd};
    }
};

inline bool is_hermitian(const StencilOperator& L, double tol = 1e-12) {
    return static_cast<bool>(interior_equal_rel(adjoint(L), L, tol));
}

/// Q = x + y T_{e1} + z T_{e2}.
struct TriQ {
    Window window;
    Vec e1{T1}, e2{T2};
    Field x, y, z;

    StencilOperator op() const {
        return StencilOperator::diag(window, x) + StencilOperator::term(window, e1, y) +
               StencilOperator::term(window, e2, z);
    }
};

/// L = Q_j Q_j^+ + w_j.
struct TriFactorization {
    int j = 1;
    TriQ Q;
    Field w;

    StencilOperator reconstruct() const { return plus_diag(compose(Q.op(), adjoint(Q.op())), w); }
};

/// Unique factorization of type j with x > 0. Works for real and Hermitian layouts.
inline TriFactorization factorize_elliptic(const StencilOperator& L, int j, double tol = 1e-12) {
    if (L.window().dims != 2) throw LatticeError("factorize_elliptic: needs a 2D window");
    auto [e1, e2] = basis_pair(j);
    const Window& DL = L.domain();
    const Field& A = L.field(Zero);
    const Field& B = L.field(e1);
    const Field& C = L.field(e2);
    const Field& Dd = L.field(e1 - e2);
    auto Dx = intersect(translate(DL, e1), translate(DL, e2));
    if (!Dx) throw LatticeError("factorize_elliptic: domain too small");
    Field x(*Dx);
    std::string tag = " (type " + std::to_string(j) + ")";
    Dx->for_each([&](std::size_t i, const Vec& n) {
        cplx den = Dd[n - e1];
        if (den == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "edge coefficient vanishes" + tag, n - e1);
        cplx x2 = mutation::on(mutation::Site::EllipticX2) ? B[n - e1] * std::conj(C[n - e2]) * den
                                                          : B[n - e1] * std::conj(C[n - e2]) / den;
        if (std::abs(x2.imag()) > tol * std::abs(x2))
            throw ComputeError(ErrorCode::ConditionViolated, "x^2 is not real" + tag, n, {n, n - e1, n - e2});
        if (x2.real() <= 0.0)
            throw ComputeError(ErrorCode::NegativeDiscriminant, "x^2 <= 0" + tag, n, {n, n - e1, n - e2});
        x.values[i] = std::sqrt(x2.real());
    });
    auto Dy = intersect(DL, translate(*Dx, -e1));
    auto Dz = intersect(DL, translate(*Dx, -e2));
    if (!Dy || !Dz) throw LatticeError("factorize_elliptic: domain too small");
    Field y(*Dy, ScalarKind::complex), z(*Dz, ScalarKind::complex);
    Dy->for_each([&](std::size_t i, const Vec& n) { y.values[i] = B[n] / x[n + e1]; });
    Dz->for_each([&](std::size_t i, const Vec& n) { z.values[i] = C[n] / x[n + e2]; });
    y.refresh_kind();
    z.refresh_kind();
    std::optional<Window> Dw = intersect(DL, *Dx);
    if (Dw) Dw = intersect(*Dw, *Dy);
    if (Dw) Dw = intersect(*Dw, *Dz);
    if (!Dw) throw LatticeError("factorize_elliptic: domain too small");
    Field w(*Dw);
    Dw->for_each([&](std::size_t i, const Vec& n) {
        w.values[i] = A[n].real() - std::norm(x[n]) - std::norm(y[n]) - std::norm(z[n]);
    });
    return {j, TriQ{L.window(), e1, e2, x, y, z}, w};
}

/// P_j: w^{1/2} Q^+ w^{-1} Q w^{1/2} + w, or Q^+ w^{-1} Q + 1 for the relaxed variant (w only nonzero).
inline StencilOperator laplace_from(const TriFactorization& F, bool relaxed = false) {
    const Window& W = F.Q.window;
    auto Q = F.Q.op();
    auto Qp = adjoint(Q);
    for (std::size_t i = 0; i < F.w.size(); ++i) {
        double v = F.w.values[i].real();
        if (!relaxed && v <= 0.0)
            throw ComputeError(ErrorCode::Domain, "P_" + std::to_string(F.j) + " needs w > 0", F.w.window.point(i));
        if (v == 0.0) throw ComputeError(ErrorCode::Degenerate, "w vanishes", F.w.window.point(i));
    }
    auto inv = StencilOperator::diag(W, map(F.w, [](cplx v) { return 1.0 / v; }));
    if (relaxed) return plus_identity(compose(Qp, inv, Q), 1.0);
    auto s = StencilOperator::diag(W, map(F.w, [](cplx v) { return std::sqrt(v); }));
    return plus_diag(compose(s, Qp, inv, Q, s), F.w);
}

inline StencilOperator laplace_P(const StencilOperator& L, int j, bool relaxed = false) {
    return laplace_from(factorize_elliptic(L, j), relaxed);
}

/// psi -> w^{-1/2} Q^+ psi (or Q^+ psi for the relaxed variant).
inline Field laplace_P_map(const TriFactorization& F, const Field& psi, bool relaxed = false) {
    Field phi = apply(adjoint(F.Q.op()), psi);
    if (relaxed) return phi;
    auto D = intersect(phi.window, F.w.window);
    if (!D) throw LatticeError("laplace_P_map: empty domain");
    Field r(*D, phi.kind);
    D->for_each([&](std::size_t i, const Vec& n) { r.values[i] = phi[n] / std::sqrt(F.w[n].real()); });
    return r;
}

/// Quantities unchanged by L -> f L f: squared edge couplings and triangle loops, normalized by the diagonal.
struct TriInvariants {
    std::array<Field, 3> edge;
    Field black, white;
};

inline TriInvariants tri_invariants(const StencilOperator& L) {
    const Window& D = L.domain();
    const Field& a = L.field(Zero);
    TriInvariants I;
    std::array<Vec, 3> dirs{T1, T2, T21};
    for (int k = 0; k < 3; ++k) {
        Vec o = dirs[k];
        auto E = intersect(D, translate(D, -o));
        if (!E) throw LatticeError("tri_invariants: domain too small");
        const Field& fwd = L.field(o);
        const Field& bwd = L.field(-o);
        I.edge[k] = Field(*E, ScalarKind::complex);
        E->for_each([&](std::size_t i, const Vec& n) {
            I.edge[k].values[i] = fwd[n] * bwd[n + o] / (a[n] * a[n + o]);
        });
    }
    auto Db = intersect(intersect(D, translate(D, -T1)).value(), translate(D, -T2));
    auto Dw = intersect(intersect(D, translate(D, T1)).value(), translate(D, T2));
    if (!Db || !Dw) throw LatticeError("tri_invariants: domain too small");
    I.black = Field(*Db, ScalarKind::complex);
    Db->for_each([&](std::size_t i, const Vec& n) {
        I.black.values[i] = L.field(T1)[n] * L.field(T21)[n + T1] * L.field(-T2)[n + T2] /
                            (a[n] * a[n + T1] * a[n + T2]);
    });
    I.white = Field(*Dw, ScalarKind::complex);
    Dw->for_each([&](std::size_t i, const Vec& m) {
        I.white.values[i] = L.field(-T1)[m] * L.field(T12m)[m - T1] * L.field(T2)[m - T2] /
                            (a[m] * a[m - T1] * a[m - T2]);
    });
    return I;
}

namespace detail {
/// Largest |f - g| / max(1, |f|) on the common window; infinite without overlap.
inline double field_dev(const Field& f, const Field& g) {
    auto D = intersect(f.window, g.window);
    if (!D) return std::numeric_limits<double>::infinity();
    double m = 0;
    D->for_each([&](std::size_t, const Vec& p) { m = std::max(m, std::abs(f[p] - g[p]) / std::max(1.0, std::abs(f[p]))); });
    return m;
}
} // namespace detail

inline double invariant_distance(const TriInvariants& x, const TriInvariants& y) {
    double m = std::max(detail::field_dev(x.black, y.black), detail::field_dev(x.white, y.white));
    for (int k = 0; k < 3; ++k) m = std::max(m, detail::field_dev(x.edge[k], y.edge[k]));
    return m;
}

/// Deviations in the identities linking the factorizations of one parity.
struct OddEvenReport {
    double w_odd = 0, w_even = 0;
    double q_odd = 0, q_even = 0;
    std::optional<double> lt_odd, lt_even;

    bool ok(double tol) const {
        bool r = w_odd <= tol && w_even <= tol && q_odd <= tol && q_even <= tol;
        if (lt_odd) r = r && *lt_odd <= tol;
        if (lt_even) r = r && *lt_even <= tol;
        return r;
    }
};

namespace detail {
inline bool positive(const Field& w) {
    for (auto v : w.values)
        if (!(v.real() > 0.0)) return false;
    return true;
}
/// sqrt(w_n / w_{n-s}).
inline Field ratio_root(const Field& w, const Vec& s) {
    auto D = intersect(w.window, translate(w.window, s));
    if (!D) throw LatticeError("ratio_root: empty domain");
    Field r(*D);
    D->for_each([&](std::size_t i, const Vec& n) { r.values[i] = std::sqrt(w[n].real() / w[n - s].real()); });
    return r;
}
/// rho T_s^{-1} X T_s rho.
inline StencilOperator conj_shift(const StencilOperator& X, const Vec& s, const Field& rho) {
    const Window& W = X.window();
    auto R = StencilOperator::diag(W, rho);
    return compose(R, StencilOperator::shift(W, -s), X, StencilOperator::shift(W, s), R);
}
} // namespace detail

inline OddEvenReport odd_even_relations(const StencilOperator& L) {
    const Window& W = L.window();
    std::array<TriFactorization, 6> F;
    for (int j = 1; j <= 6; ++j) F[j - 1] = factorize_elliptic(L, j);
    auto qdev = [&](const TriFactorization& a, const TriFactorization& b, const Vec& s) {
        return interior_equal_rel(a.Q.op(), compose(b.Q.op(), StencilOperator::shift(W, s)), 0.0).deviation;
    };
    OddEvenReport r;
    r.w_odd = std::max(detail::field_dev(F[0].w, F[2].w), detail::field_dev(F[0].w, F[4].w));
    r.w_even = std::max(detail::field_dev(F[3].w, F[5].w), detail::field_dev(F[3].w, F[1].w));
    r.q_odd = std::max(qdev(F[0], F[2], T1), qdev(F[0], F[4], T2));
    r.q_even = std::max(qdev(F[3], F[5], -T1), qdev(F[3], F[1], -T2));
    if (detail::positive(F[0].w) && detail::positive(F[2].w) && detail::positive(F[4].w)) {
        auto L1 = laplace_from(F[0]);
        auto a = interior_equal_rel(L1, detail::conj_shift(laplace_from(F[2]), T1, detail::ratio_root(F[0].w, T1)), 0);
        auto b = interior_equal_rel(L1, detail::conj_shift(laplace_from(F[4]), T2, detail::ratio_root(F[0].w, T2)), 0);
        r.lt_odd = std::max(a.deviation, b.deviation);
    }
    if (detail::positive(F[1].w) && detail::positive(F[3].w) && detail::positive(F[5].w)) {
        auto L4 = laplace_from(F[3]);
        auto a = interior_equal_rel(L4, detail::conj_shift(laplace_from(F[5]), -T1, detail::ratio_root(F[3].w, -T1)), 0);
        auto b = interior_equal_rel(L4, detail::conj_shift(laplace_from(F[1]), -T2, detail::ratio_root(F[3].w, -T2)), 0);
        r.lt_even = std::max(a.deviation, b.deviation);
    }
    return r;
}

/// One factor of a coefficient product: L[off](n + shift), optionally conjugated.
struct CoeffRef {
    Vec off;
    Vec shift;
    bool conj = false;
};

/// n -> product of the referenced coefficients, on the sites where all of them exist.
inline Field coefficient_product(const StencilOperator& L, const std::vector<CoeffRef>& refs) {
    std::optional<Window> D = L.window();
    for (const auto& r : refs)
        if (D) D = intersect(*D, translate(L.domain(), -r.shift));
    if (!D) throw LatticeError("coefficient_product: empty domain");
    Field p(*D, ScalarKind::complex);
    D->for_each([&](std::size_t i, const Vec& n) {
        cplx v = 1.0;
        for (const auto& r : refs) {
            cplx c = L.field(r.off)[n + r.shift];
            v *= r.conj ? std::conj(c) : c;
        }
        p.values[i] = v;
    });
    return p;
}

/// Pointwise residual of a factorization criterion with a tolerance.
struct ConditionReport {
    Field residual;
    double tol = 1e-10;

    bool holds_at(const Vec& n) const { return residual[n].real() <= tol; }
    bool holds_everywhere() const {
        for (auto v : residual.values)
            if (!(v.real() <= tol)) return false;
        return true;
    }
    std::vector<Vec> failures() const {
        std::vector<Vec> out;
        residual.window.for_each([&](std::size_t i, const Vec& n) {
            if (!(residual.values[i].real() <= tol)) out.push_back(n);
        });
        return out;
    }
};

/// Criterion for L = Q1 Q2 + w (form 'a') or L = Q2 Q1 + w (form 'b'), Q1 = x + y T1 + z T2,
/// Q2 = p + q_{n-T1} T1^{-1} + r_{n-T2} T2^{-1}, for a general seven-point operator
/// a + b T1 + c T2 + d_{n-T1} T1^{-1}T2 + e_{n-T1} T1^{-1} + f_{n-T2} T2^{-1} + g_{n-T2} T1T2^{-1}.
inline ConditionReport factor_condition_nonsa(const StencilOperator& L, char form, double tol = 1e-10) {
    const Vec mT1 = -T1, mT2 = -T2;
    // coefficient name -> (offset, site shift) so that name_m = L[offset](m + shift)
    auto b = [&](Vec s) { return CoeffRef{T1, s}; };
    auto c = [&](Vec s) { return CoeffRef{T2, s}; };
    auto d = [&](Vec s) { return CoeffRef{T21, s + T1}; };
    auto e = [&](Vec s) { return CoeffRef{mT1, s + T1}; };
    auto f = [&](Vec s) { return CoeffRef{mT2, s + T2}; };
    auto g = [&](Vec s) { return CoeffRef{T12m, s + T2}; };
    Field lhs, rhs;
    if (form == 'a') {
        lhs = coefficient_product(L, {b(T2), d(Zero), f(T1)});
        rhs = coefficient_product(L, {g(Zero), e(T2), c(T1)});
    } else if (form == 'b') {
        lhs = coefficient_product(L, {f(Zero), d(Zero), b(Zero)});
        rhs = coefficient_product(L, {c(Zero), e(Zero), g(Zero)});
    } else {
        throw LatticeError("factor_condition_nonsa: form must be 'a' or 'b'");
    }
    Field res(lhs.window);
    lhs.window.for_each([&](std::size_t i, const Vec& n) {
        double s = std::max({std::abs(lhs[n]), std::abs(rhs[n]), 1e-300});
        res.values[i] = std::abs(lhs[n] - rhs[n]) / s;
    });
    return {res, tol};
}

namespace detail {
/// b_{n-T1} c_{n-T2} d_{n-T1-T2} (black) and d_n c_n b_n (white) in the Hermitian layout.
inline Field black_product(const StencilOperator& L) {
    return coefficient_product(L, {{T1, -T1}, {T2, -T2, true}, {T21, -T2}});
}
inline Field white_product(const StencilOperator& L) {
    return coefficient_product(L, {{T21, T1}, {T2, Zero, true}, {T1, Zero}});
}
inline ConditionReport imag_ratio(const Field& p, double tol) {
    Field r(p.window);
    for (std::size_t i = 0; i < p.size(); ++i)
        r.values[i] = std::abs(p.values[i].imag()) / std::max(std::abs(p.values[i]), 1e-300);
    return {r, tol};
}
} // namespace detail

/// Criteria for L = Q Q^+ + w (form 'a') and L = Q^+ Q + w (form 'b') in the Hermitian layout:
/// the black or white triangle product must be real.
inline ConditionReport factor_condition_hermitian(const StencilOperator& L, char form, double tol = 1e-12) {
    if (form == 'a') return detail::imag_ratio(detail::black_product(L), tol);
    if (form == 'b') return detail::imag_ratio(detail::white_product(L), tol);
    throw LatticeError("factor_condition_hermitian: form must be 'a' or 'b'");
}

/// Phases modulo 2 pi, canonical branch (-pi, pi].
inline double canonical_phase(double x) {
    double r = std::remainder(x, 2 * std::numbers::pi);
    return r <= -std::numbers::pi ? r + 2 * std::numbers::pi : r;
}

/// Black and white triangle fluxes: exp(-i Phi1) = B_{n-T1} C_{n-T2} D_{n-T1-T2}, exp(i Phi2) = D_n C_n B_n.
struct FluxField {
    Field black, white;

    double max_abs() const { return std::max(black.max_abs(), white.max_abs()); }
};

inline FluxField magnetic_flux(const StencilOperator& L) {
    auto phase = [](const Field& p, double sign) {
        Field r(p.window);
        p.window.for_each([&](std::size_t i, const Vec& n) {
            if (p.values[i] == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "edge coefficient vanishes", n);
            r.values[i] = canonical_phase(sign * std::arg(p.values[i]));
        });
        return r;
    };
    return {phase(detail::black_product(L), -1.0), phase(detail::white_product(L), 1.0)};
}

/// Phase gauge exp(i f) L exp(-i f) making every edge coefficient real and positive.
struct GaugeReduction {
    Field f;
    StencilOperator real_op;
};

inline GaugeReduction gauge_reduce_to_real(const StencilOperator& L, double tol = 1e-10) {
    auto flux = magnetic_flux(L);
    std::vector<Vec> bad;
    for (const Field* F : {&flux.black, &flux.white})
        F->window.for_each([&](std::size_t i, const Vec& n) {
            if (std::abs(F->values[i].real()) > tol) bad.push_back(n);
        });
    if (!bad.empty())
        throw ComputeError(ErrorCode::NontrivialFlux, std::to_string(bad.size()) + " triangles carry flux", bad.front(),
                           bad);
    const Window& W = L.window();
    const Window& D = L.domain();
    Field f(W);
    std::vector<char> seen(W.size(), 0);
    std::deque<Vec> queue{D.lo};
    seen[W.index(D.lo)] = 1;
    while (!queue.empty()) {
        Vec p = queue.front();
        queue.pop_front();
        for (const auto& o : hex) {
            Vec q = p + o;
            if (!W.contains(q) || seen[W.index(q)]) continue;
            cplx c;
            double theta;
            if (D.contains(p) && (c = L.coeff(o, p)) != 0.0) {
                theta = std::arg(c);
            } else if (D.contains(q) && (c = L.coeff(-o, q)) != 0.0) {
                theta = -std::arg(c);
            } else {
                continue;
            }
            f[q] = f[p].real() + theta;
            seen[W.index(q)] = 1;
            queue.push_back(q);
        }
    }
    auto ph = [&](double s) { return map(f, [s](cplx v) { return std::polar(1.0, s * v.real()); }); };
    auto R = compose(StencilOperator::diag(W, ph(1.0)), L, StencilOperator::diag(W, ph(-1.0)));
    StencilOperator out(W, R.domain());
    for (const auto& [o, c] : R.terms()) {
        Field g = c;
        g.window.for_each([&](std::size_t i, const Vec& n) {
            cplx v = g.values[i];
            double scale = std::max(std::abs(v), 1.0);
            if (std::abs(v.imag()) > tol * scale || (o != Zero && v.real() < 0.0))
                throw ComputeError(ErrorCode::NontrivialFlux, "edge phase does not close", n, {n});
            g.values[i] = v.real();
        });
        g.kind = ScalarKind::real;
        out.set(o, g);
    }
    return {f, out};
}

/// 6 - sum of six unit-modulus hoppings carrying a homogeneous field Phi.
inline TriOp homogeneous_magnetic_operator(double Phi, const Window& w) {
    auto ph = [](double t) { return -std::polar(1.0, t); };
    return {w, Field::constant(w, 6.0), Field::complex(w, [&](const Vec& n) { return ph(Phi * n[1]); }),
            Field::complex(w, [&](const Vec& n) { return ph(Phi * n[0]); }),
            Field::complex(w, [&](const Vec& n) { return ph(Phi * (n[0] + n[1] + 1)); })};
}

/// Q = 1 + c e^{l1(n)} T1 + d e^{l2(n)} T2 with l_j(n) = l_{j1} n1 + l_{j2} n2.
struct ExpQ2D {
    double c = 1.0, d = 1.0;
    std::array<std::array<double, 2>, 2> l{};

    /// Landau family 1 + c u^{n1} v^{n2} T1 + d (u^2/v)^{n1} u^{n2} T2.
    static ExpQ2D q_landau(double c, double d, double u, double v) {
        if (!(u > 0) || !(v > 0)) throw LatticeError("q_landau: u and v must be positive");
        double lu = std::log(u), lv = std::log(v);
        return {c, d, {{{lu, lv}, {2 * lu - lv, lu}}}};
    }
    double u() const { return std::exp(l[0][0]); }
    double v() const { return std::exp(l[0][1]); }
    bool landau_constraint(double tol = 1e-12) const {
        return std::abs(l[0][0] - l[1][1]) <= tol && std::abs(2 * l[0][0] - l[0][1] - l[1][0]) <= tol;
    }
    ExpQ2D with(double c2, double d2) const { return {c2, d2, l}; }
    double l1(const Vec& n) const { return l[0][0] * n[0] + l[0][1] * n[1]; }
    double l2(const Vec& n) const { return l[1][0] * n[0] + l[1][1] * n[1]; }
};

inline TriQ exp_Q(const ExpQ2D& p, const Window& w) {
    if (p.c == 0.0 || p.d == 0.0) throw LatticeError("exp_Q: c and d must be nonzero");
    return {w, T1, T2, Field::constant(w, 1.0), Field::real(w, [&](const Vec& n) { return p.c * std::exp(p.l1(n)); }),
            Field::real(w, [&](const Vec& n) { return p.d * std::exp(p.l2(n)); })};
}

inline TriQ q_landau_Q(const ExpQ2D& p, const Window& w) { return exp_Q(p, w); }

/// Relative deviation of Q Q^+ - 1 = q (Q'^+ Q' - 1), Q' with constants (u^2 c, u^2 d); q defaults to u^{-2}.
inline double q_landau_relation_residual(const ExpQ2D& p, const Window& w, std::optional<double> q = std::nullopt) {
    double u2 = p.u() * p.u();
    double qq = q ? *q : 1.0 / u2;
    auto Q = q_landau_Q(p, w).op();
    auto Qp = q_landau_Q(p.with(u2 * p.c, u2 * p.d), w).op();
    auto lhs = plus_identity(compose(Q, adjoint(Q)), -1.0);
    auto rhs = qq * plus_identity(compose(adjoint(Qp), Qp), -1.0);
    return interior_equal_rel(lhs, rhs, 0.0).deviation;
}

/// Constants after conjugation by T1 (first) and T2 (second): (c e^{l11}, d e^{l21}), (c e^{l12}, d e^{l22}).
inline std::pair<ExpQ2D, ExpQ2D> translated_params(const ExpQ2D& p) {
    return {p.with(p.c * std::exp(p.l[0][0]), p.d * std::exp(p.l[1][0])),
            p.with(p.c * std::exp(p.l[0][1]), p.d * std::exp(p.l[1][1]))};
}

/// Relative deviation of T_s X_p T_s^{-1} from X_{primed}, X = Q, Q^+ or Q Q^+.
enum class CovariantOp { Q, Qplus, L };

inline double conjugation_residual(const ExpQ2D& p, const ExpQ2D& primed, const Vec& s, CovariantOp which,
                                   const Window& w) {
    auto build = [&](const ExpQ2D& x) {
        auto Q = exp_Q(x, w).op();
        switch (which) {
        case CovariantOp::Q: return Q;
        case CovariantOp::Qplus: return adjoint(Q);
        default: return compose(Q, adjoint(Q));
        }
    };
    auto lhs = compose(StencilOperator::shift(w, s), build(p), StencilOperator::shift(w, -s));
    return interior_equal_rel(lhs, build(primed), 0.0).deviation;
}

struct CovarianceReport {
    double t1 = 0, t2 = 0;
    bool ok(double tol) const { return t1 <= tol && t2 <= tol; }
};

/// Checks T_k X T_k^{-1} = X' for X in {Q, Q^+, QQ^+} with the translated constants.
inline CovarianceReport translation_covariance(const ExpQ2D& p, const Window& w) {
    auto [p1, p2] = translated_params(p);
    CovarianceReport r;
    for (auto which : {CovariantOp::Q, CovariantOp::Qplus, CovariantOp::L}) {
        r.t1 = std::max(r.t1, conjugation_residual(p, p1, T1, which, w));
        r.t2 = std::max(r.t2, conjugation_residual(p, p2, T2, which, w));
    }
    return r;
}

} // namespace ldx::tri
