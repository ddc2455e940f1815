#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "ldx/lattice.hpp"
#include "ldx/mutation.hpp"

namespace ldx::tet {

inline constexpr std::array<Vec, 3> axes{T1, T2, T3};
/// Unordered axis pairs (k, j), k < j.
inline constexpr std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};

inline int pair_index(int k, int j) {
    if (k > j) std::swap(k, j);
    return k == 0 ? j - 1 : 2;
}

/// Self-adjoint tetrahedral operator
///   a_n + sum_k (b_{k,n} T_k + b_{k,n-T_k} T_k^{-1}) + sum_{k<j} (c_{kj,n-T_j} T_k T_j^{-1} + c_{kj,n-T_k} T_j T_k^{-1}).
/// All fields live on `window`; the operator domain drops the lower face on each axis.
struct TetraOp {
    Window window;
    Field a;
    std::array<Field, 3> b;
    std::array<Field, 3> c; ///< indexed by pair_index

    const Field& cpair(int k, int j) const { return c[std::size_t(pair_index(k, j))]; }

    Window op_domain() const {
        Vec lo = window.lo;
        for (int k = 0; k < 3; ++k) lo[k] += 1;
        return Window(3, lo, window.hi);
    }

    StencilOperator op() const {
        if (window.dims != 3) throw LatticeError("TetraOp: window must be 3D");
        auto D = op_domain();
        StencilOperator L(window, D);
        L.set(Zero, a);
        for (int k = 0; k < 3; ++k) {
            const Vec& t = axes[std::size_t(k)];
            L.set(t, b[std::size_t(k)]);
            L.set(-t, Field::real(D, [&](const Vec& n) { return b[std::size_t(k)][n - t].real(); }));
        }
        for (auto [k, j] : pairs) {
            const Vec& tk = axes[std::size_t(k)];
            const Vec& tj = axes[std::size_t(j)];
            const Field& ckj = cpair(k, j);
            L.set(tk - tj, Field::real(D, [&](const Vec& n) { return ckj[n - tj].real(); }));
            L.set(tj - tk, Field::real(D, [&](const Vec& n) { return ckj[n - tk].real(); }));
        }
        return L;
    }

    /// Reads a, b, c off a self-adjoint operator with the tetrahedral stencil.
    static TetraOp from_operator(const StencilOperator& L, double tol = 1e-12) {
        const Window& D = L.domain();
        if (D.dims != 3) throw LatticeError("TetraOp: operator must be 3D");
        Vec hi = D.hi;
        for (int k = 0; k < 3; ++k) hi[k] -= 1;
        Window W(3, D.lo, hi);
        TetraOp t{W, Field::real(W, [&](const Vec& n) { return L.coeff(Zero, n).real(); }), {}, {}};
        double scale = 0;
        for (const auto& [o, f] : L.terms()) scale = std::max(scale, f.max_abs());
        auto check = [&](cplx have, cplx want, const Vec& n) {
            if (std::abs(have - want) > tol * scale)
                throw ComputeError(ErrorCode::ConditionViolated, "operator is not self-adjoint", n);
        };
        for (int k = 0; k < 3; ++k) {
            const Vec& tk = axes[std::size_t(k)];
            t.b[std::size_t(k)] = Field::real(W, [&](const Vec& n) { return L.coeff(tk, n).real(); });
            W.for_each([&](std::size_t, const Vec& n) {
                if (D.contains(n + tk)) check(L.coeff(-tk, n + tk), L.coeff(tk, n), n);
            });
        }
        for (auto [k, j] : pairs) {
            const Vec& tk = axes[std::size_t(k)];
            const Vec& tj = axes[std::size_t(j)];
            auto& ckj = t.c[std::size_t(pair_index(k, j))];
            ckj = Field::real(W, [&](const Vec& m) { return L.coeff(tk - tj, m + tj).real(); });
            W.for_each([&](std::size_t, const Vec& m) {
                if (D.contains(m + tk)) check(L.coeff(tj - tk, m + tk), ckj[m], m);
            });
        }
        return t;
    }
};

enum class Form { QQplus, QplusQ };

/// Outcome of the factorization criterion on the sites where it can be evaluated.
struct TetraCondition {
    Window domain;
    std::vector<char> holds;
    Field x2; ///< common value of the pair ratios (mean over pairs)
    bool all = true;
    std::optional<Vec> first_failure;
    double spread = 0; ///< largest relative disagreement between pairs
};

/// Pair ratios b_{k,n-T_k} b_{j,n-T_j} / c_{kj,n-T_k-T_j} (QQ^+) or b_{k,n} b_{j,n} / c_{kj,n} (Q^+Q).
inline TetraCondition tetra_factor_condition(const TetraOp& L, Form form = Form::QQplus, double tol = 1e-10) {
    TetraCondition r;
    r.domain = form == Form::QQplus ? L.op_domain() : L.window;
    r.holds.assign(r.domain.size(), 1);
    r.x2 = Field(r.domain, ScalarKind::real);
    r.domain.for_each([&](std::size_t i, const Vec& n) {
        std::array<double, 3> v{};
        for (auto [k, j] : pairs) {
            const Vec& tk = axes[std::size_t(k)];
            const Vec& tj = axes[std::size_t(j)];
            Vec pk = form == Form::QQplus ? n - tk : n;
            Vec pj = form == Form::QQplus ? n - tj : n;
            Vec pc = form == Form::QQplus ? n - tk - tj : n;
            double den = L.cpair(k, j)[pc].real();
            if (den == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "vanishing diagonal connection", pc);
            v[std::size_t(pair_index(k, j))] =
                L.b[std::size_t(k)][pk].real() * L.b[std::size_t(j)][pj].real() / den;
        }
        double mean = (v[0] + v[1] + v[2]) / 3;
        double dev = 0;
        for (double x : v) dev = std::max(dev, std::abs(x - mean));
        dev /= std::max(std::abs(mean), 1e-300);
        r.spread = std::max(r.spread, dev);
        r.x2.values[i] = mean;
        if (dev > tol) {
            r.holds[i] = 0;
            if (r.all) r.first_failure = n;
            r.all = false;
        }
    });
    return r;
}

/// Q = x_n + sum_k y_{k,n} T_k with L = Q Q^+ + w (or Q^+ Q + w).
struct TetraFactorization {
    Window window;
    Form form = Form::QQplus;
    Field x;
    std::array<Field, 3> y;
    Field w;

    StencilOperator Q() const {
        const Window& D = x.window;
        StencilOperator q(window, D);
        q.set(Zero, x);
        for (int k = 0; k < 3; ++k) q.set(axes[std::size_t(k)], y[std::size_t(k)]);
        return q;
    }
    /// Q Q^+ + w or Q^+ Q + w, on the window the factorization was computed for.
    StencilOperator product() const {
        auto q = Q();
        auto P = form == Form::QQplus ? compose(q, adjoint(q)) : compose(adjoint(q), q);
        auto D = intersect(P.domain(), w.window);
        if (!D) throw LatticeError("factorization: empty product domain");
        return plus_diag(P.restricted(*D), w.restrict(*D));
    }
};

inline TetraFactorization tetra_factorize(const TetraOp& L, Form form = Form::QQplus, double tol = 1e-10) {
    auto cond = tetra_factor_condition(L, form, tol);
    if (!cond.all) throw ComputeError(ErrorCode::ConditionViolated, "factorization condition fails", *cond.first_failure);
    const Window& X = cond.domain;
    TetraFactorization f;
    f.form = form;
    f.window = L.window;
    Field x(X, ScalarKind::real);
    X.for_each([&](std::size_t i, const Vec& n) {
        double v = cond.x2.values[i].real();
        if (!(v > 0)) throw ComputeError(ErrorCode::NegativeDiscriminant, "x^2 is not positive", n);
        x.values[i] = std::sqrt(v);
    });
    // QQ^+: b_{k,n} = y_{k,n} x_{n+T_k}; Q^+Q: b_{k,n} = x_n y_{k,n}.
    Window D = X;
    if (form == Form::QQplus) {
        Vec hi = X.hi;
        for (int k = 0; k < 3; ++k) hi[k] -= 1;
        D = Window(3, X.lo, hi);
    }
    f.x = x.restrict(D);
    for (int k = 0; k < 3; ++k) {
        const Vec& tk = axes[std::size_t(k)];
        f.y[std::size_t(k)] = Field::real(D, [&](const Vec& n) {
            bool shifted = form == Form::QQplus && !mutation::on(mutation::Site::TetraY);
            double xb = shifted ? x[n + tk].real() : x[n].real();
            return L.b[std::size_t(k)][n].real() / xb;
        });
    }
    if (form == Form::QQplus) {
        f.w = Field::real(D, [&](const Vec& n) {
            double s = L.a[n].real() - std::norm(x[n]);
            for (int k = 0; k < 3; ++k) s -= std::norm(f.y[std::size_t(k)][n]);
            return s;
        });
    } else {
        Vec lo = D.lo;
        for (int k = 0; k < 3; ++k) lo[k] += 1;
        Window E(3, lo, D.hi);
        f.w = Field::real(E, [&](const Vec& n) {
            double s = L.a[n].real() - std::norm(x[n]);
            for (int k = 0; k < 3; ++k) s -= std::norm(f.y[std::size_t(k)][n - axes[std::size_t(k)]]);
            return s;
        });
    }
    return f;
}

/// Products b_{i,n-T_i} c_{jk,n-T_j-T_k} over the three skew edge pairs of the white tetrahedron below n.
inline std::array<double, 3> skew_products(const TetraOp& L, const Vec& n) {
    std::array<double, 3> r{};
    for (int i = 0; i < 3; ++i) {
        int j = (i + 1) % 3, k = (i + 2) % 3;
        const Vec& ti = axes[std::size_t(i)];
        r[std::size_t(i)] = L.b[std::size_t(i)][n - ti].real() *
                            L.cpair(j, k)[n - axes[std::size_t(j)] - axes[std::size_t(k)]].real();
    }
    return r;
}

/// Q = 1 + c e^{l_1(n)} T1 + d e^{l_2(n)} T2 + f e^{l_3(n)} T3, l_j(n) = sum_i l_{ji} n_i.
struct ExpQ3D {
    double c = 1, d = 1, f = 1;
    std::array<std::array<double, 3>, 3> l{};
    double h = 0;

    double lj(int j, const Vec& n) const {
        const auto& r = l[std::size_t(j)];
        return r[0] * n[0] + r[1] * n[1] + r[2] * n[2];
    }
    double coeff(int j) const { return j == 0 ? c : j == 1 ? d : f; }
    ExpQ3D scaled(double s) const {
        ExpQ3D p = *this;
        p.c *= s;
        p.d *= s;
        p.f *= s;
        return p;
    }
    /// Largest |l_ij + l_ji - h|.
    double relation_defect() const {
        double m = 0;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) m = std::max(m, std::abs(l[i][j] + l[j][i] - h));
        return m;
    }
    /// h = 0, zero diagonal, antisymmetric off-diagonal part.
    static ExpQ3D commuting(double c, double d, double f, double l12, double l13, double l23) {
        ExpQ3D p{c, d, f, {}, 0.0};
        p.l[0][1] = l12;
        p.l[1][0] = -l12;
        p.l[0][2] = l13;
        p.l[2][0] = -l13;
        p.l[1][2] = l23;
        p.l[2][1] = -l23;
        return p;
    }
};

/// f = 0 switches the third axis off.
inline StencilOperator exp_Q3(const ExpQ3D& p, const Window& w) {
    if (w.dims != 3) throw LatticeError("exp_Q3: window must be 3D");
    if (p.c == 0.0 || p.d == 0.0) throw LatticeError("exp_Q3: c and d must be nonzero");
    StencilOperator Q = StencilOperator::identity(w);
    for (int j = 0; j < 3; ++j) {
        if (p.coeff(j) == 0.0) continue;
        Q.set(axes[std::size_t(j)], Field::real(w, [&](const Vec& n) { return p.coeff(j) * std::exp(p.lj(j, n)); }));
    }
    return Q;
}

/// Relative deviation of Q Q^+ - 1 - q (Q'^+ Q' - 1), Q' with constants e^{h}(c, d, f); q defaults to e^{-h}.
inline double q_relation_residual_3d(const ExpQ3D& p, const Window& w, std::optional<double> q = std::nullopt,
                                   std::optional<double> scale = std::nullopt) {
    double qq = q ? *q : std::exp(-p.h);
    auto Q = exp_Q3(p, w);
    auto Qp = exp_Q3(p.scaled(scale ? *scale : std::exp(p.h)), w);
    auto lhs = plus_identity(compose(Q, adjoint(Q)), -1.0);
    auto rhs = qq * plus_identity(compose(adjoint(Qp), Qp), -1.0);
    return interior_equal_rel(lhs, rhs, 0.0).deviation;
}

} // namespace ldx::tet
