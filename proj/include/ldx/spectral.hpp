#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ldx/lapack.hpp"
#include "ldx/lattice.hpp"

namespace ldx::spec {

enum class Boundary { Dirichlet };

inline constexpr std::size_t dense_limit = 4000;

/// Truncation of an operator to its domain; rows and columns are domain points in row-major order.
struct AssembledMatrix {
    Window window;
    std::size_t dim = 0;
    bool hermitian = false;
    bool is_complex = false;
    Boundary boundary = Boundary::Dirichlet;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col;
    std::vector<cplx> val;

    cplx at(std::size_t i, std::size_t j) const {
        auto b = col.begin() + row_ptr[i], e = col.begin() + row_ptr[i + 1];
        auto it = std::lower_bound(b, e, j);
        return it != e && *it == j ? val[it - col.begin()] : cplx(0.0);
    }
    double max_abs() const {
        double m = 0;
        for (auto v : val) m = std::max(m, std::abs(v));
        return m;
    }
    void matvec(const cplx* x, cplx* y) const {
        for (std::size_t i = 0; i < dim; ++i) {
            cplx s = 0;
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
            y[i] = s;
        }
    }
    /// Row-major dense copy.
    std::vector<cplx> dense() const {
        std::vector<cplx> a(dim * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) a[i * dim + col[k]] = val[k];
        return a;
    }
};

inline AssembledMatrix assemble(const StencilOperator& op, Boundary boundary = Boundary::Dirichlet) {
    AssembledMatrix M;
    M.window = op.domain();
    M.dim = M.window.size();
    M.boundary = boundary;
    M.row_ptr.assign(M.dim + 1, 0);
    std::vector<std::pair<std::size_t, cplx>> row;
    M.window.for_each([&](std::size_t i, const Vec& p) {
        row.clear();
        for (const auto& [o, f] : op.terms()) {
            Vec q = p + o;
            if (!M.window.contains(q) || f[p] == 0.0) continue;
            row.emplace_back(M.window.index(q), f[p]);
        }
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [j, v] : row) {
            if (!M.col.empty() && M.col.size() > M.row_ptr[i] && M.col.back() == j) {
                M.val.back() += v;
                continue;
            }
            M.col.push_back(j);
            M.val.push_back(v);
            if (v.imag() != 0.0) M.is_complex = true;
        }
        M.row_ptr[i + 1] = M.col.size();
    });
    double tol = 1e-13 * M.max_abs();
    M.hermitian = true;
    for (std::size_t i = 0; i < M.dim && M.hermitian; ++i)
        for (std::size_t k = M.row_ptr[i]; k < M.row_ptr[i + 1]; ++k)
            if (std::abs(M.val[k] - std::conj(M.at(M.col[k], i))) > tol) {
                M.hermitian = false;
                break;
            }
    return M;
}

struct EigenResult {
    std::vector<double> values;
    /// vectors[j] pairs with values[j]; empty unless requested.
    std::vector<std::vector<cplx>> vectors;
};

enum class Solver { Auto, Dense, Lanczos };

namespace detail {

inline EigenResult dense_eigs(const AssembledMatrix& M, std::size_t k, bool want) {
    const lapack_int n = static_cast<lapack_int>(M.dim);
    std::vector<double> w(M.dim);
    EigenResult r;
    const char job = want ? 'V' : 'N';
    lapack_int info;
    std::vector<double> ar;
    std::vector<cplx> ac;
    if (!M.is_complex) {
        ar.resize(M.dim * M.dim, 0.0);
        for (std::size_t i = 0; i < M.dim; ++i)
            for (std::size_t q = M.row_ptr[i]; q < M.row_ptr[i + 1]; ++q) ar[i * M.dim + M.col[q]] = M.val[q].real();
        info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, job, 'U', n, ar.data(), n, w.data());
    } else {
        ac = M.dense();
        info = LAPACKE_zheevd(LAPACK_ROW_MAJOR, job, 'U', n, ac.data(), n, w.data());
    }
    if (info != 0)
        throw ComputeError(ErrorCode::NotConverged, "dense eigensolver failed, info=" + std::to_string(info));
    k = std::min(k, M.dim);
    r.values.assign(w.begin(), w.begin() + k);
    if (want) {
        r.vectors.assign(k, std::vector<cplx>(M.dim));
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t i = 0; i < M.dim; ++i)
                r.vectors[j][i] = M.is_complex ? ac[i * M.dim + j] : cplx(ar[i * M.dim + j]);
    }
    return r;
}

/// Lanczos with full reorthogonalization; Ritz pairs accepted when |beta_m s_{m,i}| <= tol ||M||.
inline EigenResult lanczos_eigs(const AssembledMatrix& M, std::size_t k, bool want, double tol = 1e-12,
                                std::uint64_t seed = 7) {
    const std::size_t n = M.dim;
    k = std::min(k, n);
    const double scale = std::max(M.max_abs(), 1e-300);
    std::vector<std::vector<cplx>> V;
    std::vector<double> alpha, beta;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<cplx> v(n), w(n);
    for (auto& x : v) x = nd(rng);
    auto norm = [](const std::vector<cplx>& x) {
        double s = 0;
        for (auto c : x) s += std::norm(c);
        return std::sqrt(s);
    };
    double nv = norm(v);
    for (auto& x : v) x /= nv;
    std::vector<double> theta, S;
    std::size_t m = 0;
    double achieved = std::numeric_limits<double>::infinity();
    while (m < n) {
        V.push_back(v);
        M.matvec(v.data(), w.data());
        cplx a = 0;
        for (std::size_t i = 0; i < n; ++i) a += std::conj(v[i]) * w[i];
        alpha.push_back(a.real());
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& u : V) {
                cplx h = 0;
                for (std::size_t i = 0; i < n; ++i) h += std::conj(u[i]) * w[i];
                for (std::size_t i = 0; i < n; ++i) w[i] -= h * u[i];
            }
        double b = norm(w);
        ++m;
        bool check = m >= k && (m % 10 == 0 || m == n || b <= 1e-14 * scale);
        if (check) {
            theta = alpha;
            std::vector<double> e(beta.begin(), beta.end());
            e.resize(m);
            S.assign(m * m, 0.0);
            lapack_int info = LAPACKE_dstev(LAPACK_ROW_MAJOR, 'V', static_cast<lapack_int>(m), theta.data(), e.data(),
                                            S.data(), static_cast<lapack_int>(m));
            if (info != 0) throw ComputeError(ErrorCode::NotConverged, "tridiagonal eigensolver failed");
            achieved = 0;
            for (std::size_t i = 0; i < k; ++i) achieved = std::max(achieved, std::abs(b * S[(m - 1) * m + i]));
            if (achieved <= tol * scale || m == n || b <= 1e-14 * scale) break;
        }
        beta.push_back(b);
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / b;
    }
    if (theta.size() < k || achieved > tol * scale)
        throw ComputeError(ErrorCode::NotConverged,
                           "Lanczos residual " + std::to_string(achieved / scale) + " after " + std::to_string(m) +
                               " steps");
    EigenResult r;
    r.values.assign(theta.begin(), theta.begin() + k);
    if (want) {
        r.vectors.assign(k, std::vector<cplx>(n, 0.0));
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t q = 0; q < m; ++q)
                for (std::size_t i = 0; i < n; ++i) r.vectors[j][i] += S[q * m + j] * V[q][i];
    }
    return r;
}

} // namespace detail

/// k smallest eigenvalues (ascending) of a Hermitian assembled matrix.
inline EigenResult eigs_lowest(const AssembledMatrix& M, std::size_t k, bool want_vectors = false,
                               Solver solver = Solver::Auto) {
    if (!M.hermitian) throw LatticeError("eigs_lowest: matrix is not Hermitian");
    if (M.dim == 0) throw LatticeError("eigs_lowest: empty matrix");
    if (solver == Solver::Dense || (solver == Solver::Auto && M.dim <= dense_limit))
        return detail::dense_eigs(M, k, want_vectors);
    return detail::lanczos_eigs(M, k, want_vectors);
}

/// Fraction of |v|^2 within `layers` steps of the window boundary.
inline double boundary_mass(const Window& w, const std::vector<cplx>& v, int layers = 2) {
    double edge = 0, total = 0;
    w.for_each([&](std::size_t i, const Vec& p) {
        double m = std::norm(v[i]);
        total += m;
        if (w.depth(p) < layers) edge += m;
    });
    return total > 0 ? edge / total : 1.0;
}

struct Prediction {
    double lambda;
    std::string ref;
};

struct Match {
    double predicted = 0;
    std::string ref;
    double nearest = std::numeric_limits<double>::quiet_NaN();
    double distance = std::numeric_limits<double>::infinity();
    double boundary_mass = 1.0;
    bool localized = false;
    std::optional<double> grown_distance;
    bool stable = true;
    bool pass = false;
};

struct SpectrumReport {
    Window window;
    std::optional<Window> grown;
    std::vector<double> computed;
    std::vector<Match> matches;
    bool pass = false;
};

struct VerifyOptions {
    double tol = 1e-6;
    double mass_tol = 1e-6;
    int layers = 2;
    std::optional<Window> grown;
};

using OperatorFactory = std::function<StencilOperator(const Window&)>;

namespace detail {
/// Per prediction: the most localized eigenvalue within tol, else the nearest one.
inline std::vector<Match> match_predictions(const Window& domain, const EigenResult& E,
                                            const std::vector<Prediction>& preds, const VerifyOptions& opt) {
    std::vector<double> mass(E.values.size());
    for (std::size_t j = 0; j < E.values.size(); ++j) mass[j] = boundary_mass(domain, E.vectors[j], opt.layers);
    std::vector<Match> out;
    for (const auto& p : preds) {
        Match m;
        m.predicted = p.lambda;
        m.ref = p.ref;
        std::optional<std::size_t> best;
        for (std::size_t j = 0; j < E.values.size(); ++j) {
            double d = std::abs(E.values[j] - p.lambda);
            if (d <= opt.tol) {
                if (!best || std::abs(E.values[*best] - p.lambda) > opt.tol || mass[j] < mass[*best]) best = j;
            } else if (!best || (std::abs(E.values[*best] - p.lambda) > opt.tol &&
                                 d < std::abs(E.values[*best] - p.lambda))) {
                best = j;
            }
        }
        if (best) {
            m.nearest = E.values[*best];
            m.distance = std::abs(m.nearest - p.lambda);
            m.boundary_mass = mass[*best];
            m.localized = m.boundary_mass < opt.mass_tol;
        }
        m.pass = m.distance <= opt.tol && m.localized;
        out.push_back(m);
    }
    return out;
}
} // namespace detail

namespace detail {
using Run = std::function<std::vector<Match>(const Window&, std::vector<double>*)>;

inline SpectrumReport verify_with(const Run& run, const Window& window, const VerifyOptions& opt) {
    SpectrumReport rep;
    rep.window = window;
    rep.grown = opt.grown;
    rep.matches = run(window, &rep.computed);
    if (opt.grown) {
        auto g = run(*opt.grown, nullptr);
        for (std::size_t i = 0; i < g.size(); ++i) {
            auto& m = rep.matches[i];
            m.grown_distance = g[i].distance;
            m.stable = g[i].pass && std::abs(g[i].distance - m.distance) < opt.tol / 10;
            m.pass = m.pass && m.stable;
        }
    }
    rep.pass = std::all_of(rep.matches.begin(), rep.matches.end(), [](const Match& m) { return m.pass; });
    return rep;
}
} // namespace detail

/// Compares predicted eigenvalues with the Dirichlet truncation of make(window), optionally on a grown window too.
inline SpectrumReport verify_spectrum(const OperatorFactory& make, const std::vector<Prediction>& preds,
                                      const Window& window, const VerifyOptions& opt = {}) {
    auto run = [&](const Window& w, std::vector<double>* computed) {
        auto M = assemble(make(w));
        auto E = eigs_lowest(M, M.dim, true, Solver::Dense);
        if (computed) *computed = E.values;
        return detail::match_predictions(M.window, E, preds, opt);
    };
    return detail::verify_with(run, window, opt);
}

/// Truncation of a factor F: columns are the points of D = domain(F^+ F), rows every point F^+ reaches from D.
/// The Dirichlet truncation of F^+ F equals a^* a.
struct FactorMatrix {
    Window domain;
    std::size_t rows = 0, cols = 0;
    bool is_complex = false;
    /// Row-major rows x cols.
    std::vector<cplx> a;
};

inline FactorMatrix assemble_factor(const StencilOperator& F) {
    FactorMatrix R;
    R.domain = compose(adjoint(F), F).domain();
    R.cols = R.domain.size();
    const Window& W = F.window();
    std::vector<long> row_of(W.size(), -1);
    std::vector<Vec> row_pts;
    R.domain.for_each([&](std::size_t, const Vec& p) {
        for (const auto& o : F.offsets()) {
            Vec k = p - o;
            if (!W.contains(k) || row_of[W.index(k)] >= 0) continue;
            row_of[W.index(k)] = long(row_pts.size());
            row_pts.push_back(k);
        }
    });
    R.rows = row_pts.size();
    R.a.assign(R.rows * R.cols, 0.0);
    for (std::size_t r = 0; r < R.rows; ++r)
        for (const auto& [o, f] : F.terms()) {
            Vec q = row_pts[r] + o;
            if (!R.domain.contains(q)) continue;
            cplx v = f[row_pts[r]];
            R.a[r * R.cols + R.domain.index(q)] += v;
            if (v.imag() != 0.0) R.is_complex = true;
        }
    return R;
}

namespace detail {
/// Eigenpairs of a^* a as squared singular values of a (preconditioned Jacobi SVD, high relative accuracy
/// on graded factors), ascending.
inline EigenResult factored_eigs(FactorMatrix R) {
    const lapack_int m = lapack_int(R.rows), n = lapack_int(R.cols);
    if (m < n) throw LatticeError("factored_eigs: factor has fewer rows than columns");
    std::vector<double> sva(R.cols), stat(7);
    std::vector<lapack_int> istat(3);
    lapack_int info;
    std::vector<double> vr;
    std::vector<cplx> vc;
    if (!R.is_complex) {
        std::vector<double> ar(R.a.size());
        for (std::size_t i = 0; i < ar.size(); ++i) ar[i] = R.a[i].real();
        vr.assign(R.cols * R.cols, 0.0);
        info = LAPACKE_dgejsv(LAPACK_ROW_MAJOR, 'F', 'N', 'V', 'R', 'N', 'N', m, n, ar.data(), n, sva.data(),
                              nullptr, 1, vr.data(), n, stat.data(), istat.data());
    } else {
        vc.assign(R.cols * R.cols, 0.0);
        info = LAPACKE_zgejsv(LAPACK_ROW_MAJOR, 'F', 'N', 'V', 'R', 'N', 'N', m, n, R.a.data(), n, sva.data(),
                              nullptr, 1, vc.data(), n, stat.data(), istat.data());
    }
    if (info != 0) throw ComputeError(ErrorCode::NotConverged, "Jacobi SVD failed, info=" + std::to_string(info));
    const double scale = stat[0] / stat[1];
    EigenResult r;
    r.values.resize(R.cols);
    r.vectors.assign(R.cols, std::vector<cplx>(R.cols));
    for (std::size_t j = 0; j < R.cols; ++j) {
        std::size_t s = R.cols - 1 - j;
        double sigma = scale * sva[s];
        r.values[j] = sigma * sigma;
        for (std::size_t i = 0; i < R.cols; ++i)
            r.vectors[j][i] = R.is_complex ? vc[i * R.cols + s] : cplx(vr[i * R.cols + s]);
    }
    return r;
}
} // namespace detail

/// Eigenpairs of the Dirichlet truncation of F^+ F, ascending.
inline EigenResult factored_eigs(const StencilOperator& F) { return detail::factored_eigs(assemble_factor(F)); }

/// verify_spectrum for L = F^+ F, with eigenvalues taken as squared singular values of the truncated factor.
/// Independent of the dense path; cost grows quickly past a few thousand points.
inline SpectrumReport verify_factored_spectrum(const OperatorFactory& make_factor, const std::vector<Prediction>& preds,
                                               const Window& window, const VerifyOptions& opt = {}) {
    auto run = [&](const Window& w, std::vector<double>* computed) {
        auto R = assemble_factor(make_factor(w));
        Window D = R.domain;
        auto E = detail::factored_eigs(std::move(R));
        if (computed) *computed = E.values;
        return detail::match_predictions(D, E, preds, opt);
    };
    return detail::verify_with(run, window, opt);
}

/// ||L psi - lambda psi||_inf on the interior divided by ||psi||_inf.
inline double eigen_residual(const StencilOperator& op, const Field& psi, double lambda) {
    double n = psi.max_abs();
    if (n == 0.0) throw LatticeError("eigen_residual: zero vector");
    Field r = apply(op, psi);
    double m = 0;
    r.window.for_each([&](std::size_t i, const Vec& p) { m = std::max(m, std::abs(r.values[i] - lambda * psi[p])); });
    return m / n;
}

} // namespace ldx::spec
