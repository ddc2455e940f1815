#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ldx/elliptic.hpp"
#include "ldx/lapack.hpp"
#include "ldx/lattice.hpp"
#include "ldx/oned.hpp"

namespace ldx::gs {

using Mat = std::vector<std::vector<double>>;

enum class Color { Black, White };

inline Mat negated(Mat m) {
    for (auto& row : m)
        for (auto& x : row) x = -x;
    return m;
}

inline void check_square(const Mat& m, std::size_t n, const char* what) {
    if (m.size() != n) throw LatticeError(std::string(what) + ": wrong matrix size");
    for (const auto& row : m)
        if (row.size() != n) throw LatticeError(std::string(what) + ": wrong matrix size");
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Mat& m) {
    const std::size_t n = m.size();
    check_square(m, n, "min_eigenvalue");
    std::vector<double> a(n * n), w(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = m[i][j];
    if (LAPACKE_dsyev(LAPACK_ROW_MAJOR, 'N', 'U', lapack_int(n), a.data(), lapack_int(n), w.data()) != 0)
        throw ComputeError(ErrorCode::NotConverged, "symmetric eigensolver failed");
    return w[0];
}

/// 1 + sum_j c_j e^{l_j(n)} T_j with l_j(n) = sum_i l[j][i] n_i.
inline StencilOperator exp_Q(const Mat& l, const std::vector<double>& c, const Window& w) {
    const std::size_t N = std::size_t(w.dims);
    check_square(l, N, "exp_Q");
    if (c.size() != N) throw LatticeError("exp_Q: need one constant per axis");
    auto Q = StencilOperator::identity(w);
    for (std::size_t j = 0; j < N; ++j) {
        if (c[j] == 0.0) throw LatticeError("exp_Q: constants must be nonzero");
        Vec e{0, 0, 0};
        e[j] = 1;
        auto f = Field::real(w, [&](const Vec& n) {
            double s = 0;
            for (std::size_t i = 0; i < N; ++i) s += l[j][i] * n[i];
            return c[j] * std::exp(s);
        });
        Q = Q + StencilOperator::term(w, e, f);
    }
    return Q;
}

/// The matrix of 2K_2 for a case tag: a, b, c', c'' (2D) or 1a, 1b, 1c (3D). White cases use -l.
inline Mat k2_matrix(const std::string& tag, const Mat& l, Color color = Color::Black) {
    if (color == Color::White) return k2_matrix(tag, negated(l), Color::Black);
    if (l.size() == 2) {
        check_square(l, 2, "k2_matrix");
        const double l11 = l[0][0], l12 = l[0][1], l21 = l[1][0], l22 = l[1][1];
        if (tag == "a") return {{l11, l12}, {l12, l22}};
        if (tag == "b") return {{l11, l21}, {l21, l22}};
        if (tag == "c'") return {{l11, l12}, {l12, l22 - l21 + l12}};
        if (tag == "c''") return {{l11 - l12 + l21, l21}, {l21, l22}};
    } else if (l.size() == 3) {
        check_square(l, 3, "k2_matrix");
        const double m = l[0][1] - l[1][0];
        if (tag == "1a") return {{l[0][0], l[0][1], l[0][2]}, {l[0][1], l[1][1], l[1][2]}, {l[0][2], l[1][2], l[2][2]}};
        if (tag == "1b")
            return {{l[0][0], l[0][1], l[0][2]}, {l[0][1], l[1][1] + m, l[1][2]}, {l[0][2], l[1][2], l[2][2]}};
        if (tag == "1c")
            return {{l[0][0], l[0][1], l[0][2]},
                    {l[0][1], l[1][1] + m, l[1][2] + m},
                    {l[0][2], l[1][2] + m, l[2][2] - l[2][0] + l[0][2]}};
    }
    throw ComputeError(ErrorCode::Domain, "unknown case tag '" + tag + "' for " + std::to_string(l.size()) + "D");
}

/// Separation data of a case: psi = e^{-K_2} w^{t.n} phi_{kappa.n}.
struct Separation {
    Vec kappa;
    Vec t;
};

inline Separation separation_for(const std::string& tag) {
    if (tag == "a") return {{1, 0, 0}, {0, 1, 0}};
    if (tag == "b") return {{0, 1, 0}, {1, 0, 0}};
    if (tag == "c'") return {{1, 1, 0}, {1, 0, 0}};
    if (tag == "c''") return {{1, 1, 0}, {0, 1, 0}};
    if (tag == "1a") return {{1, 0, 0}, {0, 1, 1}};
    if (tag == "1b") return {{1, 1, 0}, {0, 0, 1}};
    if (tag == "1c") return {{1, 1, 1}, {1, 0, 0}};
    throw ComputeError(ErrorCode::Domain, "unknown case tag '" + tag + "'");
}

struct GroundState {
    Field psi;
    Color color = Color::Black;
    /// 2K_2 of the black construction (built from -l for white states).
    Mat k2;
    Vec kappa{};
    double w = 1.0;
    /// Set when w was quantized; the state then vanishes on a half-space of s = kappa.n (black) or -kappa.n (white).
    std::optional<int> q;
    /// True: vanishes for s > q. False: vanishes for s <= q.
    bool vanishes_above = true;

    bool forced_zero(const Vec& n) const {
        if (!q) return false;
        int s = 0;
        for (int i = 0; i < 3; ++i) s += kappa[i] * n[i];
        if (color == Color::White) s = -s;
        return vanishes_above ? s > *q : s <= *q;
    }
};

namespace detail {

struct Term {
    bool shifts;
    double coeff;
    double g;
    int t;
};

inline double eval(const std::vector<Term>& terms, bool shifts, double w, int s, bool with_one) {
    double v = with_one ? 1.0 : 0.0;
    for (const auto& x : terms)
        if (x.shifts == shifts) v += x.coeff * (x.t ? w : 1.0) * std::exp(x.g * s);
    return v;
}

inline double magnitude(const std::vector<Term>& terms, bool shifts, double w, int s, bool with_one) {
    double v = with_one ? 1.0 : 0.0;
    for (const auto& x : terms)
        if (x.shifts == shifts) v += std::abs(x.coeff * (x.t ? w : 1.0)) * std::exp(x.g * s);
    return v;
}

} // namespace detail

/// Black zero mode psi_n = e^{-n.M.n/2} w^{t.n} phi_{kappa.n} of exp_Q(l, c), with phi solving
/// A(s) phi_s + B(s) phi_{s+1} = 0. Without q or w, w is quantized at q = 0 when phi would otherwise grow
/// faster than exponentially on a side the quantization can cut off, and w = 1 otherwise.
inline GroundState build_separated(const Mat& l, const std::vector<double>& c, const Mat& M, const Vec& kappa,
                                   const Vec& t, std::optional<int> q, std::optional<double> w_in, const Window& win) {
    const int N = win.dims;
    if (N < 2) throw LatticeError("build_separated: window must be 2D or 3D");
    check_square(l, std::size_t(N), "build_separated");
    check_square(M, std::size_t(N), "build_separated");
    if (c.size() != std::size_t(N)) throw LatticeError("build_separated: need one constant per axis");
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            if (M[i][j] != M[j][i]) throw LatticeError("build_separated: K_2 matrix must be symmetric");
    if (!(min_eigenvalue(M) > 0)) throw ComputeError(ErrorCode::Domain, "quadratic form is not positive definite");
    double scale = 1.0;
    for (const auto& row : l)
        for (double x : row) scale = std::max(scale, std::abs(x));
    bool any_shift = false;
    std::vector<detail::Term> terms;
    for (int j = 0; j < N; ++j) {
        if (kappa[j] != 0 && kappa[j] != 1)
            throw ComputeError(ErrorCode::NotConstructible, "separated equation is not first order");
        if (t[j] != 0 && t[j] != 1) throw ComputeError(ErrorCode::NotConstructible, "w exponents must be 0 or 1");
        any_shift = any_shift || kappa[j] == 1;
        double rk = 0, kk = 0;
        for (int i = 0; i < N; ++i) {
            rk += (l[j][i] - M[j][i]) * kappa[i];
            kk += kappa[i] * kappa[i];
        }
        double g = kk > 0 ? rk / kk : 0.0;
        for (int i = 0; i < N; ++i)
            if (std::abs(l[j][i] - M[j][i] - g * kappa[i]) > 1e-12 * scale)
                throw ComputeError(ErrorCode::ConditionViolated,
                                   "reduced coefficients depend on more than kappa.n (side condition fails)");
        terms.push_back({kappa[j] == 1, c[j] * std::exp(-M[j][j] / 2), g, t[j]});
    }
    if (!any_shift) throw ComputeError(ErrorCode::NotConstructible, "kappa must shift at least one axis");

    bool wA = false, wB = false;
    double gAp = 0, gAm = 0, gBp = -INFINITY, gBm = -INFINITY;
    for (const auto& x : terms) {
        if (x.shifts) {
            wB = wB || x.t;
            gBp = std::max(gBp, x.g);
            gBm = std::max(gBm, -x.g);
        } else {
            wA = wA || x.t;
            gAp = std::max(gAp, x.g);
            gAm = std::max(gAm, -x.g);
        }
    }
    const double eps = 1e-12 * scale;
    const bool grows_forward = gAp > gBp + eps, grows_backward = gBm > gAm + eps;

    GroundState gs;
    gs.k2 = M;
    gs.kappa = kappa;
    std::optional<bool> cut_above;
    if (q) {
        if (wA && (grows_forward || !wB)) cut_above = true;
        else if (wB) cut_above = false;
        else throw ComputeError(ErrorCode::NotConstructible, "w does not enter the reduced equation");
    } else if (!w_in) {
        if (grows_forward && wA) cut_above = true;
        else if (grows_backward && wB) cut_above = false;
        if (cut_above) q = 0;
    }
    double w = w_in.value_or(1.0);
    if (cut_above) {
        // Root in w of A(q) (cut above) or B(q) (cut below).
        const bool in_b = !*cut_above;
        double s0 = in_b ? 0.0 : 1.0, s1 = 0;
        for (const auto& x : terms)
            if (x.shifts == in_b) (x.t ? s1 : s0) += x.coeff * std::exp(x.g * *q);
        w = -s0 / s1;
        if (!std::isfinite(w) || w == 0.0)
            throw ComputeError(ErrorCode::NotConstructible, "no quantization root for q = " + std::to_string(*q));
        gs.q = q;
        gs.vanishes_above = *cut_above;
    }
    if (w == 0.0) throw ComputeError(ErrorCode::Domain, "w must be nonzero");
    gs.w = w;

    int smin = 0, smax = 0;
    for (int i = 0; i < N; ++i) {
        smin += kappa[i] * win.lo[i];
        smax += kappa[i] * win.hi[i];
    }
    int lo = smin, hi = smax + 1, anchor = std::clamp(0, smin, smax + 1);
    if (gs.q) {
        anchor = gs.vanishes_above ? *gs.q : *gs.q + 1;
        lo = std::min(lo, anchor);
        hi = std::max(hi, anchor);
    }
    const std::size_t len = std::size_t(hi - lo + 1);
    std::vector<double> lphi(len, -INFINITY), sphi(len, 0.0);
    lphi[std::size_t(anchor - lo)] = 0.0;
    sphi[std::size_t(anchor - lo)] = 1.0;
    const bool fwd_allowed = !gs.q || !gs.vanishes_above, bwd_allowed = !gs.q || gs.vanishes_above;
    auto is_zero = [&](bool shifts, int s) {
        double v = detail::eval(terms, shifts, w, s, !shifts);
        return std::abs(v) <= 1e-14 * detail::magnitude(terms, shifts, w, s, !shifts);
    };
    if (fwd_allowed)
        for (int s = anchor; s < hi; ++s) {
            std::size_t i = std::size_t(s - lo);
            if (sphi[i] == 0.0) break;
            if (is_zero(true, s))
                throw ComputeError(ErrorCode::NotConstructible, "reduced equation has a zero shift coefficient",
                                   Vec{s, 0, 0});
            double a = detail::eval(terms, false, w, s, true), b = detail::eval(terms, true, w, s, false);
            if (a == 0.0) break;
            lphi[i + 1] = lphi[i] + std::log(std::abs(a)) - std::log(std::abs(b));
            sphi[i + 1] = -sphi[i] * (a > 0 ? 1 : -1) * (b > 0 ? 1 : -1);
        }
    if (bwd_allowed)
        for (int s = anchor - 1; s >= lo; --s) {
            std::size_t i = std::size_t(s - lo);
            if (sphi[i + 1] == 0.0) break;
            if (is_zero(false, s))
                throw ComputeError(ErrorCode::NotConstructible, "reduced equation has a zero diagonal coefficient",
                                   Vec{s, 0, 0});
            double a = detail::eval(terms, false, w, s, true), b = detail::eval(terms, true, w, s, false);
            if (b == 0.0) break;
            lphi[i] = lphi[i + 1] + std::log(std::abs(b)) - std::log(std::abs(a));
            sphi[i] = -sphi[i + 1] * (a > 0 ? 1 : -1) * (b > 0 ? 1 : -1);
        }

    const double lw = std::log(std::abs(w));
    std::vector<double> lg(win.size()), sg(win.size());
    win.for_each([&](std::size_t k, const Vec& n) {
        double quad = 0;
        int s = 0, tn = 0;
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) quad += n[i] * M[i][j] * n[j];
            s += kappa[i] * n[i];
            tn += t[i] * n[i];
        }
        std::size_t i = std::size_t(s - lo);
        lg[k] = -quad / 2 + tn * lw + lphi[i];
        sg[k] = sphi[i] * (w < 0 && (tn % 2 != 0) ? -1.0 : 1.0);
    });
    gs.psi = from_log(win, lg, sg);
    return gs;
}

struct GroundStateSpec {
    Color color = Color::Black;
    std::string case_tag = "a";
    /// l[j][i]: exponent of n_i in the coefficient of T_j.
    Mat l;
    /// c, d (, f).
    std::vector<double> c;
    std::optional<int> q;
    std::optional<double> w;
    Window window = Window::square(-20, 20);
};

inline Window reflected(const Window& w) { return Window(w.dims, -w.hi, -w.lo); }

/// g(n) = f(-n) on the reflected window.
inline Field reflect(const Field& f) {
    Field g(reflected(f.window), f.kind);
    f.window.for_each([&](std::size_t i, const Vec& p) { g[-p] = f.values[i]; });
    return g;
}

/// Q psi = 0 (black) or Q^+ psi = 0 (white) for Q = exp_Q(l, c). White states are black states for
/// (-l, c_j e^{-l_jj}) reflected through the origin.
inline GroundState build_ground_state(const GroundStateSpec& spec) {
    const std::size_t N = spec.l.size();
    if ((N != 2 && N != 3) || spec.window.dims != int(N))
        throw LatticeError("build_ground_state: l and window must both be 2D or 3D");
    check_square(spec.l, N, "build_ground_state");
    if (spec.c.size() != N) throw LatticeError("build_ground_state: need one constant per axis");
    auto sep = separation_for(spec.case_tag);
    if ((N == 2) != (spec.case_tag.front() != '1'))
        throw ComputeError(ErrorCode::Domain, "case '" + spec.case_tag + "' does not match dimension");
    if (spec.color == Color::Black)
        return build_separated(spec.l, spec.c, k2_matrix(spec.case_tag, spec.l), sep.kappa, sep.t, spec.q, spec.w,
                               spec.window);
    Mat lb = negated(spec.l);
    std::vector<double> cb(N);
    for (std::size_t j = 0; j < N; ++j) cb[j] = spec.c[j] * std::exp(-spec.l[j][j]);
    auto gs = build_separated(lb, cb, k2_matrix(spec.case_tag, lb), sep.kappa, sep.t, spec.q, spec.w,
                              reflected(spec.window));
    gs.psi = reflect(gs.psi);
    gs.color = Color::White;
    return gs;
}

inline GroundState build_ground_state_3d(const GroundStateSpec& spec) {
    if (spec.l.size() != 3) throw LatticeError("build_ground_state_3d: l must be 3x3");
    return build_ground_state(spec);
}

/// The operator a state of this spec is a zero mode of.
inline StencilOperator defining_operator(const GroundStateSpec& spec) {
    auto Q = exp_Q(spec.l, spec.c, spec.window);
    return spec.color == Color::Black ? Q : adjoint(Q);
}

/// max |op psi| over the operator domain divided by max |psi|.
inline double zero_mode_residual(const StencilOperator& op, const Field& psi) {
    double n = psi.max_abs();
    if (n == 0.0) throw LatticeError("zero_mode_residual: zero field");
    return apply(op, psi).max_abs() / n;
}

/// max |psi| on the outermost layer of its window divided by max |psi|.
inline double tail_ratio(const Field& psi) {
    double edge = 0;
    psi.window.for_each([&](std::size_t i, const Vec& p) {
        if (psi.window.depth(p) == 0) edge = std::max(edge, std::abs(psi.values[i]));
    });
    return edge / psi.max_abs();
}

/// max |psi| within `layers` of the window boundary divided by max |psi|.
inline double edge_ratio(const Field& psi, int layers) {
    double edge = 0;
    psi.window.for_each([&](std::size_t i, const Vec& p) {
        if (psi.window.depth(p) < layers) edge = std::max(edge, std::abs(psi.values[i]));
    });
    return edge / psi.max_abs();
}

/// Parameter regions of the q-Landau family with a known spectrum: a', a'' (u < 1) and b', b'' (u > 1).
enum class LandauRegion { None, A1, A2, B1, B2 };

inline LandauRegion landau_region(double u, double v) {
    if (!(u > 0) || !(v > 0)) return LandauRegion::None;
    const double iu = 1 / u, iv = 1 / v;
    if (u < 1) {
        if (iu * iu * iu > iv && iv > iu) return LandauRegion::A1;
        if (iu > std::max(v, iv)) return LandauRegion::A2;
    } else if (u > 1) {
        if (u * u * u > v && v > u) return LandauRegion::B1;
        if (u > std::max(v, iv)) return LandauRegion::B2;
    }
    return LandauRegion::None;
}

struct LadderSpec {
    double c = 1.0, d = 1.0, u = 0.8, v = 1.2;
    int k = 0;
    /// L = Q Q^+ or Ltilde = Q^+ Q for the q-Landau Q.
    oned::Branch branch = oned::Branch::L;
};

inline StencilOperator landau_operator(const tri::ExpQ2D& p, const Window& w, oned::Branch br) {
    auto Q = tri::exp_Q(p, w).op();
    return br == oned::Branch::L ? compose(Q, adjoint(Q)) : compose(adjoint(Q), Q);
}

inline std::vector<double> landau_levels(double u, int count, oned::Branch br) {
    const bool own = (u < 1) == (br == oned::Branch::L);
    std::vector<double> out;
    for (int j = own ? 0 : 1; j < (own ? 0 : 1) + count; ++j) out.push_back(1.0 - std::pow(u < 1 ? u : 1 / u, 2.0 * j));
    return out;
}

/// Level-k eigenfunction of L or Ltilde built from a ground state by creation operators with constants
/// stepped by u^{-2} (u < 1, white ground state) or u^2 (u > 1, black ground state).
inline oned::LadderState ladder_eigenfunction(const LadderSpec& s, const Window& w, std::optional<int> q = {}) {
    if (landau_region(s.u, s.v) == LandauRegion::None)
        throw ComputeError(ErrorCode::Domain, "(u, v) outside the regions with a known spectrum");
    if (s.k < 0) throw ComputeError(ErrorCode::Domain, "negative level");
    const bool small = s.u < 1;
    const bool own = small == (s.branch == oned::Branch::L);
    if (!own && s.k == 0) throw ComputeError(ErrorCode::Domain, "level 0 is absent on this branch");
    const auto p = tri::ExpQ2D::q_landau(s.c, s.d, s.u, s.v);
    const double step = small ? 1 / (s.u * s.u) : s.u * s.u;
    const double g0 = std::pow(step, s.k);
    GroundStateSpec gspec;
    gspec.color = small ? Color::White : Color::Black;
    gspec.l = {{p.l[0][0], p.l[0][1]}, {p.l[1][0], p.l[1][1]}};
    gspec.c = {s.c * g0, s.d * g0};
    gspec.q = q;
    gspec.window = w;
    gspec.case_tag.clear();
    for (const char* tag : {"a", "b", "c'", "c''"})
        if (min_eigenvalue(k2_matrix(tag, gspec.l, gspec.color)) > 0) {
            gspec.case_tag = tag;
            break;
        }
    if (gspec.case_tag.empty()) throw ComputeError(ErrorCode::NotConstructible, "no ground-state case applies");
    std::optional<GroundState> g = build_ground_state(gspec);
    if (!q && g->q) {
        // Each creation step loses one boundary layer; centre the ground state by scanning q.
        const int margin = s.k + 2, span = 2 * (w.extent(0) + w.extent(1));
        double best = edge_ratio(g->psi, margin);
        for (int cand = -span; cand <= span; ++cand) {
            gspec.q = cand;
            try {
                auto h = build_ground_state(gspec);
                double e = edge_ratio(h.psi, margin);
                if (e < best) {
                    best = e;
                    g = std::move(h);
                }
            } catch (const ComputeError&) {
            }
        }
    }
    Field psi = g->psi;
    for (int j = s.k - 1; j >= 0; --j) {
        double f = std::pow(step, j);
        auto Q = tri::exp_Q(p.with(s.c * f, s.d * f), w).op();
        psi = oned::embed(apply(small ? Q : adjoint(Q), psi), w);
    }
    auto Q = tri::exp_Q(p, w).op();
    if (!own) psi = oned::embed(apply(small ? adjoint(Q) : Q, psi), w);
    const double lambda = 1.0 - std::pow(small ? s.u : 1 / s.u, 2.0 * s.k);
    return {normalized(psi), lambda, landau_operator(p, w, s.branch)};
}

} // namespace ldx::gs
