#pragma once

#include <cmath>
#include <vector>

#include "ldx/lattice.hpp"
#include "ldx/mutation.hpp"

namespace ldx::oned {

/// L = c_n T + v_n + c_{n-1} T^{-1}; c and v are sampled on `domain`.
struct Jacobi1D {
    Window window;
    Field c;
    Field v;

    Jacobi1D(const Window& w, Field c_, Field v_) : window(w), c(std::move(c_)), v(std::move(v_)) {
        if (w.dims != 1) throw LatticeError("Jacobi1D needs a 1D window");
        if (!c.is_real() || !v.is_real()) throw LatticeError("Jacobi1D coefficients must be real");
        if (!(c.window == v.window)) throw LatticeError("Jacobi1D: c and v windows differ");
    }
    const Window& domain() const { return c.window; }

    StencilOperator op() const {
        auto d = shrink(domain(), {-T1});
        if (!d) throw LatticeError("Jacobi1D domain too small");
        StencilOperator L(window, *d);
        L.set(Zero, v);
        L.set(T1, c);
        Field cm(*d);
        d->for_each([&](std::size_t i, const Vec& p) { cm.values[i] = c[p - T1]; });
        L.set(-T1, cm);
        return L;
    }
};

/// Q = a_n + b_n T.
struct FirstOrder1D {
    Window window;
    Field a;
    Field b;

    StencilOperator Q() const {
        StencilOperator q(window, a.window);
        q.set(Zero, a);
        q.set(T1, b);
        return q;
    }
    StencilOperator Qplus() const { return adjoint(Q()); }
};

/// Q_{c,a} = 1 + c a^n T.
struct ExpQ1D {
    double c = 1.0;
    double a = 1.0;

    ExpQ1D(double c_, double a_) : c(c_), a(a_) {
        if (a == 0.0 || c == 0.0) throw LatticeError("ExpQ1D needs nonzero c and a");
    }
    StencilOperator Q(const Window& w) const {
        auto coeff = Field::real(w, [&](const Vec& p) { return c * std::pow(a, p[0]); });
        return StencilOperator::identity(w) + StencilOperator::term(w, T1, coeff);
    }
    StencilOperator Qplus(const Window& w) const { return adjoint(Q(w)); }
};

/// Charlier data: Q^+ = 1 + s_n T with s_n = sqrt(b (n0 + n)), zero off the half-line.
struct CharlierParams {
    double b = 1.0;
    int n0 = 0;

    CharlierParams(double b_, int n0_) : b(b_), n0(n0_) {
        if (!(b > 0)) throw LatticeError("Charlier slope must be positive");
    }
    double s(int n) const { return n + n0 > 0 ? std::sqrt(b * (n + n0)) : 0.0; }
    StencilOperator Qplus(const Window& w) const {
        auto sf = Field::real(w, [&](const Vec& p) { return s(p[0]); });
        return StencilOperator::identity(w) + StencilOperator::term(w, T1, sf);
    }
    StencilOperator Q(const Window& w) const { return adjoint(Qplus(w)); }
};

inline Field real_field(const Window& w, const std::vector<double>& v) {
    Field f(w);
    for (std::size_t i = 0; i < v.size(); ++i) f.values[i] = v[i];
    return f;
}

/// Factorizes L + alpha = Q Q^+ by the forward discrete Riccati recursion starting from b0.
/// signs[i] picks the branch of the square root at the i-th site (default +).
inline FirstOrder1D riccati_factorize(const Jacobi1D& L, double alpha, double b0, const std::vector<int>& signs = {}) {
    if (b0 == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "b0 must be nonzero");
    const Window& D = L.domain();
    const std::size_t N = D.size();
    auto sgn = [&](std::size_t i) { return i < signs.size() && signs[i] < 0 ? -1.0 : 1.0; };
    std::vector<double> a(N), b(N);
    double r = L.v.values[0].real() + alpha - b0 * b0;
    if (r < 0) throw ComputeError(ErrorCode::NegativeDiscriminant, "at first site", D.lo);
    a[0] = sgn(0) * std::sqrt(r);
    b[0] = b0;
    for (std::size_t i = 0; i + 1 < N; ++i) {
        if (b[i] == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "b vanishes at " + to_string(D.point(i), 1), D.point(i));
        a[i + 1] = L.c.values[i].real() / b[i];
        double disc = L.v.values[i + 1].real() + alpha - a[i + 1] * a[i + 1];
        if (disc < 0)
            throw ComputeError(ErrorCode::NegativeDiscriminant, "at " + to_string(D.point(i + 1), 1), D.point(i + 1));
        b[i + 1] = sgn(i + 1) * std::sqrt(disc);
    }
    return {L.window, real_field(D, a), real_field(D, b)};
}

/// Factorizes L + alpha = Q^+ Q (Q = a + bT) backward from a seed b_end at the domain's right end.
inline FirstOrder1D riccati_factorize_dual(const Jacobi1D& L, double alpha, double b_end, const std::vector<int>& signs = {}) {
    if (b_end == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "seed must be nonzero");
    const Window& D = L.domain();
    const std::size_t N = D.size();
    auto sgn = [&](std::size_t i) { return i < signs.size() && signs[i] < 0 ? -1.0 : 1.0; };
    std::vector<double> a(N), b(N);
    b[N - 1] = b_end;
    for (std::size_t i = N - 1;; --i) {
        if (b[i] == 0.0) throw ComputeError(ErrorCode::ZeroPivot, "b vanishes at " + to_string(D.point(i), 1), D.point(i));
        a[i] = L.c.values[i].real() / b[i];
        if (i == 0) break;
        double disc = L.v.values[i].real() + alpha - a[i] * a[i];
        if (disc < 0) throw ComputeError(ErrorCode::NegativeDiscriminant, "at " + to_string(D.point(i), 1), D.point(i));
        b[i - 1] = sgn(i - 1) * std::sqrt(disc);
    }
    return {L.window, real_field(D, a), real_field(D, b)};
}

/// Jacobi form of Q^+ Q - alpha: c~ = a b, v~ = a^2 + b_{n-1}^2 - alpha.
inline Jacobi1D darboux(const FirstOrder1D& q, double alpha = 0.0) {
    auto d = shrink(q.a.window, {-T1});
    if (!d) throw LatticeError("darboux: window too small");
    Field c(*d), v(*d);
    d->for_each([&](std::size_t i, const Vec& p) {
        c.values[i] = q.a[p] * q.b[p];
        v.values[i] = q.a[p] * q.a[p] + q.b[p - T1] * q.b[p - T1] - alpha;
    });
    return {q.window, c, v};
}

/// Inverse step: Q Q^+ - alpha for a factorization L + alpha = Q^+ Q.
inline Jacobi1D darboux_dual(const FirstOrder1D& q, double alpha = 0.0) {
    auto d = shrink(q.a.window, {T1});
    if (!d) throw LatticeError("darboux: window too small");
    Field c(*d), v(*d);
    d->for_each([&](std::size_t i, const Vec& p) {
        c.values[i] = q.b[p] * q.a[p + T1];
        v.values[i] = q.a[p] * q.a[p] + q.b[p] * q.b[p] - alpha;
    });
    return {q.window, c, v};
}

/// Ground state of Q^+ psi = 0 for the Charlier operator, psi = 1 at k = n + n0 = 1.
inline Field charlier_ground_state(const CharlierParams& p, const Window& w) {
    if (w.dims != 1) throw LatticeError("Charlier ground state needs a 1D window");
    if (w.lo[0] + p.n0 < 1) throw ComputeError(ErrorCode::Domain, "window leaves the half-line n + n0 >= 1", w.lo);
    Field f(w);
    // psi_{k+1} = -psi_k / sqrt(b k), psi_1 = 1
    double logm = 0.0, sign = 1.0;
    int k = 1;
    auto advance = [&](int to) {
        for (; k < to; ++k) {
            logm -= 0.5 * std::log(p.b * (mutation::on(mutation::Site::CharlierStep) ? k + 1 : k));
            sign = -sign;
        }
    };
    w.for_each([&](std::size_t i, const Vec& n) {
        advance(n[0] + p.n0);
        f.values[i] = sign * std::exp(logm);
    });
    return f;
}

/// Ground state extended by zero to sites with n + n0 <= 0.
inline Field charlier_ground_state_ext(const CharlierParams& p, const Window& w) {
    Field f(w);
    auto k0 = std::max(w.lo[0], 1 - p.n0);
    if (k0 > w.hi[0]) return f;
    auto g = charlier_ground_state(p, Window::line(k0, w.hi[0]));
    g.window.for_each([&](std::size_t i, const Vec& n) { f[n] = g.values[i]; });
    return f;
}

/// Alpha realizing Q Q^+ - Q^+ Q = alpha for the Charlier pair.
inline double charlier_alpha(const CharlierParams& p) { return -p.b; }

/// Max interior deviation of Q Q^+ - Q^+ Q - alpha on the half-line window.
inline double heisenberg_residual(const CharlierParams& p, double alpha, const Window& w) {
    if (w.lo[0] + p.n0 < 1) throw ComputeError(ErrorCode::Domain, "window leaves the half-line n + n0 >= 1", w.lo);
    auto Qp = p.Qplus(w), Q = p.Q(w);
    auto lhs = compose(Q, Qp) - compose(Qp, Q);
    return interior_equal(lhs, StencilOperator::identity(w, alpha), 0.0).deviation;
}

/// Ladder states Q^k psi0 for k = 0..kmax, each on the window `w` shrunk from the left by k.
/// The ground state is extended by zero below the half-line so the left edge stays exact.
inline std::vector<Field> charlier_ladder(const CharlierParams& p, int kmax, const Window& w) {
    Window ext = Window::line(std::min(w.lo[0], 1 - p.n0) - kmax, w.hi[0]);
    auto Q = p.Q(ext);
    std::vector<Field> out;
    Field cur = charlier_ground_state_ext(p, ext);
    for (int k = 0; k <= kmax; ++k) {
        out.push_back(cur.restrict(w));
        if (k == kmax) break;
        auto next = apply(Q, cur);
        Field full(ext);
        next.window.for_each([&](std::size_t i, const Vec& n) { full[n] = next.values[i]; });
        cur = full;
    }
    return out;
}

/// P_k = Q^k psi0 / psi0 on the admissible part of w.
inline std::vector<Field> charlier_polynomials(const CharlierParams& p, int kmax, const Window& w) {
    if (w.lo[0] + p.n0 < 1) throw ComputeError(ErrorCode::Domain, "window leaves the half-line n + n0 >= 1", w.lo);
    auto psi0 = charlier_ground_state(p, w);
    std::vector<Field> out;
    for (auto& s : charlier_ladder(p, kmax, w)) {
        Field P(w);
        w.for_each([&](std::size_t i, const Vec&) { P.values[i] = s.values[i] / psi0.values[i]; });
        out.push_back(P);
    }
    return out;
}

/// Deviation of Q_c Q_c^+ - 1 - q (Q_{c1}^+ Q_{c1} - 1) with c1 = c a^2, relative to the largest coefficient.
inline double q_osc_relation_residual(const ExpQ1D& e, const Window& w, double q, double c1) {
    auto lhs = plus_identity(compose(e.Q(w), e.Qplus(w)), -1.0);
    ExpQ1D e1(c1, e.a);
    auto rhs = q * plus_identity(compose(e1.Qplus(w), e1.Q(w)), -1.0);
    return interior_equal_rel(lhs, rhs, 0.0).deviation;
}

/// The relation with the factor that makes it hold: q = a^{-2}, c1 = c a^2.
inline double q_osc_relation_residual(const ExpQ1D& e, const Window& w) {
    return q_osc_relation_residual(e, w, 1.0 / (e.a * e.a), e.c * e.a * e.a);
}

/// Deviation of tau Q_{c,a} tau^{-1} against Q^+_{c,a'} (a' = 1/a for the true identity).
inline double tau_conjugate(const ExpQ1D& e, const Window& w, std::optional<double> a_rhs = std::nullopt) {
    if (w.lo[0] + w.hi[0] != 1) throw ComputeError(ErrorCode::Domain, "window not symmetric under n -> 1 - n", w.lo);
    auto lhs = transform(e.Q(w), AxisMap::tau());
    ExpQ1D r(e.c, a_rhs.value_or(1.0 / e.a));
    return interior_equal_rel(lhs, r.Qplus(w), 0.0).deviation;
}

/// Branch labels of the level table: L carries lambda_0 when |a| > 1, Ltilde when |a| < 1.
enum class Branch { L, Ltilde };

/// Predicted levels in [0, 1) for the given branch.
inline std::vector<double> q_osc_levels(double a, int count, Branch br) {
    if (std::abs(a) == 1.0) throw ComputeError(ErrorCode::Domain, "|a| = 1 has no discrete levels");
    const bool big = std::abs(a) > 1.0;
    const int start = (big == (br == Branch::L)) ? 0 : 1;
    std::vector<double> out;
    for (int n = start; n < start + count; ++n) out.push_back(1.0 - std::pow(big ? a : 1.0 / a, -2.0 * n));
    return out;
}

/// Operator of a branch: L is Q^+ Q (ground state from Q psi = 0), Ltilde is Q Q^+.
inline StencilOperator q_osc_operator(const ExpQ1D& e, const Window& w, Branch br) {
    return br == Branch::L ? compose(e.Qplus(w), e.Q(w)) : compose(e.Q(w), e.Qplus(w));
}

/// Solution of Q_{c,a} psi = 0 (by_Q) or Q^+ psi = 0, max |psi| = 1.
inline Field q_osc_ground_state(const ExpQ1D& e, const Window& w, bool by_Q) {
    const std::size_t N = w.size();
    std::vector<double> lg(N), sg(N);
    lg[0] = 0;
    sg[0] = 1;
    const double la = std::log(std::abs(e.a)), lc = std::log(std::abs(e.c));
    for (std::size_t i = 0; i + 1 < N; ++i) {
        int n = w.lo[0] + int(i);
        // Q: psi_{n+1} = -psi_n / (c a^n); Q^+: psi_{n+1} = -c a^n psi_n
        double lr = lc + n * la;
        double s = -((e.c < 0) != (e.a < 0 && n % 2 != 0) ? -1.0 : 1.0);
        lg[i + 1] = lg[i] + (by_Q ? -lr : lr);
        sg[i + 1] = sg[i] * s;
    }
    return from_log(w, lg, sg);
}

struct LadderState {
    Field psi;
    double lambda;
    StencilOperator op;
};

inline Field embed(const Field& f, const Window& w) {
    Field g(w, f.kind);
    f.window.for_each([&](std::size_t i, const Vec& p) { g[p] = f.values[i]; });
    return g;
}

/// Level-k eigenfunction of the branch operator for Q_{c,a} built by creation operators.
/// The returned psi lives on w (zero outside the region where all creation steps are defined).
inline LadderState ladder_eigenfunction_1d(double c, double a, int k, const Window& w, Branch br) {
    if (std::abs(a) == 1.0) throw ComputeError(ErrorCode::Domain, "|a| = 1");
    if (k < 0) throw ComputeError(ErrorCode::Domain, "negative level");
    const bool big = std::abs(a) > 1.0;
    // Branch carrying lambda_0: |a| > 1 -> L (Q^+Q), |a| < 1 -> Ltilde (QQ^+).
    const bool own = big == (br == Branch::L);
    if (!own && k == 0) throw ComputeError(ErrorCode::Domain, "level 0 is absent on this branch");
    const double lambda = 1.0 - std::pow(big ? a : 1.0 / a, -2.0 * k);
    const double step = big ? a * a : 1.0 / (a * a);
    // Ground state at c * step^k, then creation operators down to c.
    Field psi = q_osc_ground_state(ExpQ1D(c * std::pow(step, k), a), w, big);
    for (int j = k - 1; j >= 0; --j) {
        ExpQ1D ej(c * std::pow(step, j), a);
        psi = embed(apply(big ? ej.Qplus(w) : ej.Q(w), psi), w);
    }
    ExpQ1D e(c, a);
    if (!own) psi = embed(apply(big ? e.Q(w) : e.Qplus(w), psi), w);
    return {normalized(psi), lambda, q_osc_operator(e, w, br)};
}

} // namespace ldx::oned
