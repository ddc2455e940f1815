#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldx {

using cplx = std::complex<double>;
/// Lattice point or offset; unused trailing axes are zero.
using Vec = std::array<int, 3>;

enum class ScalarKind { real, complex };

class LatticeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ErrorCode {
    Domain,
    NegativeDiscriminant,
    ZeroPivot,
    Degenerate,
    ConditionViolated,
    NotFlat,
    NontrivialFlux,
    NotConstructible,
    NotConverged,
};

inline const char* name(ErrorCode c) {
    switch (c) {
    case ErrorCode::Domain: return "Domain";
    case ErrorCode::NegativeDiscriminant: return "NegativeDiscriminant";
    case ErrorCode::ZeroPivot: return "ZeroPivot";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::ConditionViolated: return "ConditionViolated";
    case ErrorCode::NotFlat: return "NotFlat";
    case ErrorCode::NontrivialFlux: return "NontrivialFlux";
    case ErrorCode::NotConstructible: return "NotConstructible";
    case ErrorCode::NotConverged: return "NotConverged";
    }
    return "?";
}

/// Numerical failure tied to a lattice site.
class ComputeError : public LatticeError {
public:
    ComputeError(ErrorCode code, const std::string& what, Vec site = {0, 0, 0}, std::vector<Vec> sites = {})
        : LatticeError(std::string(name(code)) + ": " + what), code(code), site(site), sites(std::move(sites)) {}
    ErrorCode code;
    Vec site;
    std::vector<Vec> sites;
};

inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec operator-(const Vec& a) { return {-a[0], -a[1], -a[2]}; }
inline Vec operator*(int s, const Vec& a) { return {s * a[0], s * a[1], s * a[2]}; }

inline constexpr Vec T1{1, 0, 0};
inline constexpr Vec T2{0, 1, 0};
inline constexpr Vec T3{0, 0, 1};
inline constexpr Vec Zero{0, 0, 0};

inline std::string to_string(const Vec& v, int dims = 3) {
    std::ostringstream os;
    os << '(';
    for (int k = 0; k < dims; ++k) os << (k ? "," : "") << v[k];
    os << ')';
    return os.str();
}

/// Rectangular box of lattice points with inclusive bounds.
struct Window {
    static constexpr std::size_t default_cap = 10'000'000;

    int dims = 1;
    Vec lo{0, 0, 0};
    Vec hi{0, 0, 0};

    Window() = default;
    Window(int d, Vec lo_, Vec hi_, std::size_t cap = default_cap) : dims(d), lo(lo_), hi(hi_) {
        if (d < 1 || d > 3) throw LatticeError("window dims must be 1, 2 or 3");
        for (int k = d; k < 3; ++k) lo[k] = hi[k] = 0;
        for (int k = 0; k < d; ++k)
            if (lo[k] > hi[k]) throw LatticeError("window lo > hi on axis " + std::to_string(k));
        if (size() > cap) throw LatticeError("window exceeds point cap");
    }

    static Window line(int lo, int hi) { return Window(1, {lo, 0, 0}, {hi, 0, 0}); }
    static Window square(int lo, int hi) { return Window(2, {lo, lo, 0}, {hi, hi, 0}); }
    static Window cube(int lo, int hi) { return Window(3, {lo, lo, lo}, {hi, hi, hi}); }

    long extent(int k) const { return long(hi[k]) - lo[k] + 1; }
    std::size_t size() const {
        std::size_t s = 1;
        for (int k = 0; k < dims; ++k) s *= std::size_t(extent(k));
        return s;
    }
    bool contains(const Vec& p) const {
        for (int k = 0; k < 3; ++k)
            if (p[k] < lo[k] || p[k] > hi[k]) return false;
        return true;
    }
    bool contains(const Window& w) const { return w.dims == dims && contains(w.lo) && contains(w.hi); }
    /// Row-major index, last active axis fastest.
    std::size_t index(const Vec& p) const {
        std::size_t i = 0;
        for (int k = 0; k < dims; ++k) i = i * std::size_t(extent(k)) + std::size_t(p[k] - lo[k]);
        return i;
    }
    Vec point(std::size_t i) const {
        Vec p = lo;
        for (int k = dims - 1; k >= 0; --k) {
            auto e = std::size_t(extent(k));
            p[k] = lo[k] + int(i % e);
            i /= e;
        }
        return p;
    }
    /// Distance (in lattice steps) from p to the nearest face of the window.
    int depth(const Vec& p) const {
        int d = 1 << 30;
        for (int k = 0; k < dims; ++k) d = std::min({d, p[k] - lo[k], hi[k] - p[k]});
        return d;
    }
    bool operator==(const Window& o) const { return dims == o.dims && lo == o.lo && hi == o.hi; }

    template <class F>
    void for_each(F&& f) const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) f(i, point(i));
    }

    std::string str() const {
        std::ostringstream os;
        for (int k = 0; k < dims; ++k) os << (k ? "x" : "") << '[' << lo[k] << ',' << hi[k] << ']';
        return os.str();
    }
};

/// Box of points p in w with p + off in w for every offset; empty result is nullopt.
inline std::optional<Window> shrink(const Window& w, const std::vector<Vec>& offsets) {
    Vec lo = w.lo, hi = w.hi;
    for (const auto& o : offsets)
        for (int k = 0; k < w.dims; ++k) {
            lo[k] = std::max(lo[k], w.lo[k] - o[k]);
            hi[k] = std::min(hi[k], w.hi[k] - o[k]);
        }
    for (int k = 0; k < w.dims; ++k)
        if (lo[k] > hi[k]) return std::nullopt;
    return Window(w.dims, lo, hi);
}

inline std::optional<Window> intersect(const Window& a, const Window& b) {
    if (a.dims != b.dims) throw LatticeError("window dims mismatch");
    Vec lo, hi;
    for (int k = 0; k < 3; ++k) {
        lo[k] = std::max(a.lo[k], b.lo[k]);
        hi[k] = std::min(a.hi[k], b.hi[k]);
        if (lo[k] > hi[k]) return std::nullopt;
    }
    return Window(a.dims, lo, hi);
}

/// Points of w at depth at least r.
inline std::optional<Window> inset(const Window& w, int r) {
    Vec lo = w.lo, hi = w.hi;
    for (int k = 0; k < w.dims; ++k) {
        lo[k] += r;
        hi[k] -= r;
        if (lo[k] > hi[k]) return std::nullopt;
    }
    return Window(w.dims, lo, hi);
}

inline Window translate(const Window& w, const Vec& s) { return Window(w.dims, w.lo + s, w.hi + s); }

/// Real or complex values on a window.
struct Field {
    Window window;
    std::vector<cplx> values;
    ScalarKind kind = ScalarKind::real;

    Field() = default;
    Field(const Window& w, ScalarKind k = ScalarKind::real) : window(w), values(w.size(), 0.0), kind(k) {}
    Field(const Window& w, std::vector<cplx> v, ScalarKind k) : window(w), values(std::move(v)), kind(k) {
        if (values.size() != w.size()) throw LatticeError("field length does not match window");
    }

    static Field constant(const Window& w, cplx c) {
        Field f(w, c.imag() == 0.0 ? ScalarKind::real : ScalarKind::complex);
        std::fill(f.values.begin(), f.values.end(), c);
        return f;
    }
    template <class F>
    static Field real(const Window& w, F&& fn) {
        Field f(w, ScalarKind::real);
        w.for_each([&](std::size_t i, const Vec& p) { f.values[i] = double(fn(p)); });
        return f;
    }
    template <class F>
    static Field complex(const Window& w, F&& fn) {
        Field f(w, ScalarKind::complex);
        w.for_each([&](std::size_t i, const Vec& p) { f.values[i] = cplx(fn(p)); });
        return f;
    }
    /// Throws if any value vanishes.
    Field& require_nonvanishing(const char* what = "field") {
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] == 0.0)
                throw LatticeError(std::string(what) + " vanishes at " + to_string(window.point(i), window.dims));
        return *this;
    }

    std::size_t size() const { return values.size(); }
    bool is_real() const { return kind == ScalarKind::real; }
    cplx& operator[](const Vec& p) { return values[window.index(p)]; }
    const cplx& operator[](const Vec& p) const { return values[window.index(p)]; }
    cplx at(const Vec& p) const {
        if (!window.contains(p)) throw LatticeError("point " + to_string(p, window.dims) + " outside " + window.str());
        return values[window.index(p)];
    }
    double re(const Vec& p) const { return values[window.index(p)].real(); }

    double max_abs() const {
        double m = 0;
        for (auto v : values) m = std::max(m, std::abs(v));
        return m;
    }
    /// Copy restricted to a sub-window.
    Field restrict(const Window& w) const {
        if (!window.contains(w)) throw LatticeError("restriction window not contained");
        Field f(w, kind);
        w.for_each([&](std::size_t i, const Vec& p) { f.values[i] = (*this)[p]; });
        return f;
    }
    /// Marks the field real after checking imaginary parts are below tol.
    Field& make_real(double tol = 0.0) {
        for (auto& v : values) {
            if (std::abs(v.imag()) > tol * std::max(1.0, std::abs(v))) throw LatticeError("field is not real");
            v = v.real();
        }
        kind = ScalarKind::real;
        return *this;
    }
    void refresh_kind() {
        kind = ScalarKind::real;
        for (auto v : values)
            if (v.imag() != 0.0) {
                kind = ScalarKind::complex;
                return;
            }
    }
};

inline Field map(const Field& f, const std::function<cplx(cplx)>& fn) {
    Field g(f.window, f.kind);
    for (std::size_t i = 0; i < f.size(); ++i) g.values[i] = fn(f.values[i]);
    g.refresh_kind();
    return g;
}

/// Scales f so that max |f| = 1.
inline Field normalized(Field f) {
    double m = f.max_abs();
    if (m == 0.0) throw ComputeError(ErrorCode::Degenerate, "cannot normalize a zero field");
    for (auto& v : f.values) v /= m;
    return f;
}

/// Builds a field from log-magnitudes and signs, scaled so that max |value| = 1.
inline Field from_log(const Window& w, const std::vector<double>& logmag, const std::vector<double>& sign) {
    double top = -INFINITY;
    for (double l : logmag) top = std::max(top, l);
    if (!std::isfinite(top)) throw ComputeError(ErrorCode::Degenerate, "field vanishes identically");
    Field f(w, ScalarKind::real);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = sign[i] * std::exp(logmag[i] - top);
    return f;
}

/// Max |f - g| over the common window.
inline double max_diff(const Field& f, const Field& g) {
    auto w = intersect(f.window, g.window);
    if (!w) throw LatticeError("fields share no points");
    double m = 0;
    w->for_each([&](std::size_t, const Vec& p) { m = std::max(m, std::abs(f[p] - g[p])); });
    return m;
}

/// Difference operator sum_off c_off(n) T^off. Coefficients live on `domain`, a sub-box of `window`.
class StencilOperator {
public:
    StencilOperator() = default;
    explicit StencilOperator(const Window& window) : window_(window), domain_(window) {}
    StencilOperator(const Window& window, const Window& domain) : window_(window), domain_(domain) {
        if (!window.contains(domain)) throw LatticeError("operator domain outside window");
    }

    static StencilOperator identity(const Window& w, cplx c = 1.0) {
        StencilOperator op(w);
        op.set(Zero, Field::constant(w, c));
        return op;
    }
    static StencilOperator shift(const Window& w, const Vec& off, cplx c = 1.0) {
        StencilOperator op(w);
        op.set(off, Field::constant(w, c));
        return op;
    }
    /// Multiplication by a field (the field's window becomes the domain).
    static StencilOperator diag(const Window& w, const Field& f) {
        StencilOperator op(w, f.window);
        op.set(Zero, f);
        return op;
    }
    /// Single term c(n) T^off with c sampled on the domain.
    static StencilOperator term(const Window& w, const Vec& off, const Field& c) {
        StencilOperator op(w, c.window);
        op.set(off, c);
        return op;
    }

    const Window& window() const { return window_; }
    const Window& domain() const { return domain_; }
    const std::map<Vec, Field>& terms() const { return terms_; }
    ScalarKind kind() const {
        for (const auto& [o, f] : terms_)
            if (!f.is_real()) return ScalarKind::complex;
        return ScalarKind::real;
    }
    int radius() const {
        int r = 0;
        for (const auto& [o, f] : terms_)
            for (int k = 0; k < 3; ++k) r = std::max(r, std::abs(o[k]));
        return r;
    }
    std::vector<Vec> offsets() const {
        std::vector<Vec> v;
        for (const auto& [o, f] : terms_) v.push_back(o);
        return v;
    }
    bool has(const Vec& off) const { return terms_.count(off) != 0; }

    /// Sets (or replaces) the coefficient field of an offset; the field must cover the domain.
    void set(const Vec& off, const Field& c) {
        if (!c.window.contains(domain_)) throw LatticeError("coefficient field does not cover operator domain");
        terms_[off] = c.window == domain_ ? c : c.restrict(domain_);
    }
    /// Coefficient at point p, zero for an absent offset.
    cplx coeff(const Vec& off, const Vec& p) const {
        auto it = terms_.find(off);
        if (it == terms_.end()) return 0.0;
        return it->second.at(p);
    }
    const Field& field(const Vec& off) const {
        auto it = terms_.find(off);
        if (it == terms_.end()) throw LatticeError("offset " + to_string(off) + " absent");
        return it->second;
    }

    /// Points of the domain at which every offset stays inside the window.
    std::optional<Window> interior() const {
        auto s = shrink(window_, offsets());
        if (!s) return std::nullopt;
        return intersect(*s, domain_);
    }

    /// Same operator with coefficients cut down to a smaller domain.
    StencilOperator restricted(const Window& d) const {
        StencilOperator op(window_, d);
        for (const auto& [o, f] : terms_) op.set(o, f);
        return op;
    }
    /// Drops offsets whose coefficients are all below tol.
    StencilOperator pruned(double tol = 0.0) const {
        StencilOperator op(window_, domain_);
        for (const auto& [o, f] : terms_)
            if (f.max_abs() > tol) op.terms_[o] = f;
        return op;
    }

private:
    Window window_;
    Window domain_;
    std::map<Vec, Field> terms_;
};

inline Field apply(const StencilOperator& op, const Field& f) {
    if (!(f.window == op.window()))
        throw LatticeError("apply: field window " + f.window.str() + " != operator window " + op.window().str());
    auto in = op.interior();
    if (!in) throw LatticeError("apply: empty interior");
    Field r(*in, ScalarKind::real);
    in->for_each([&](std::size_t i, const Vec& p) {
        cplx s = 0.0;
        for (const auto& [o, c] : op.terms()) s += c[p] * f[p + o];
        r.values[i] = s;
    });
    r.kind = (f.is_real() && op.kind() == ScalarKind::real) ? ScalarKind::real : ScalarKind::complex;
    return r;
}

/// (A B) with (a T^alpha)(b T^beta) = a_n b_{n+alpha} T^{alpha+beta}.
inline StencilOperator compose(const StencilOperator& A, const StencilOperator& B) {
    if (!(A.window() == B.window())) throw LatticeError("compose: window mismatch");
    const Window& W = A.window();
    Vec lo = A.domain().lo, hi = A.domain().hi;
    for (const auto& o : A.offsets())
        for (int k = 0; k < W.dims; ++k) {
            lo[k] = std::max(lo[k], B.domain().lo[k] - o[k]);
            hi[k] = std::min(hi[k], B.domain().hi[k] - o[k]);
        }
    for (int k = 0; k < W.dims; ++k)
        if (lo[k] > hi[k]) throw LatticeError("compose: empty domain");
    Window D(W.dims, lo, hi);
    std::map<Vec, Field> acc;
    for (const auto& [oa, ca] : A.terms())
        for (const auto& [ob, cb] : B.terms()) {
            Vec o = oa + ob;
            auto it = acc.find(o);
            if (it == acc.end()) it = acc.emplace(o, Field(D, ScalarKind::real)).first;
            Field& t = it->second;
            D.for_each([&](std::size_t i, const Vec& p) { t.values[i] += ca[p] * cb[p + oa]; });
        }
    StencilOperator r(W, D);
    for (auto& [o, f] : acc) {
        f.refresh_kind();
        r.set(o, f);
    }
    return r;
}

template <class... Ops>
StencilOperator compose(const StencilOperator& A, const StencilOperator& B, const Ops&... rest) {
    return compose(compose(A, B), rest...);
}

/// Formal adjoint: (c, off) -> (conj(c)_{n-off}, -off).
inline StencilOperator adjoint(const StencilOperator& A) {
    const Window& W = A.window();
    Vec lo = A.domain().lo, hi = A.domain().hi;
    for (const auto& o : A.offsets())
        for (int k = 0; k < W.dims; ++k) {
            lo[k] = std::max(lo[k], A.domain().lo[k] + o[k]);
            hi[k] = std::min(hi[k], A.domain().hi[k] + o[k]);
        }
    for (int k = 0; k < W.dims; ++k)
        if (lo[k] > hi[k]) throw LatticeError("adjoint: empty domain");
    Window D(W.dims, lo, hi);
    StencilOperator r(W, D);
    for (const auto& [o, c] : A.terms()) {
        Field f(D, c.kind);
        D.for_each([&](std::size_t i, const Vec& p) { f.values[i] = std::conj(c[p - o]); });
        r.set(-o, f);
    }
    return r;
}

/// Linear combination alpha A + beta B on the common domain.
inline StencilOperator combine(cplx alpha, const StencilOperator& A, cplx beta, const StencilOperator& B) {
    if (!(A.window() == B.window())) throw LatticeError("add: window mismatch");
    auto D = intersect(A.domain(), B.domain());
    if (!D) throw LatticeError("add: disjoint domains");
    std::map<Vec, Field> acc;
    auto accumulate = [&](cplx s, const StencilOperator& X) {
        for (const auto& [o, c] : X.terms()) {
            auto it = acc.find(o);
            if (it == acc.end()) it = acc.emplace(o, Field(*D, ScalarKind::real)).first;
            D->for_each([&](std::size_t i, const Vec& p) { it->second.values[i] += s * c[p]; });
        }
    };
    accumulate(alpha, A);
    accumulate(beta, B);
    StencilOperator r(A.window(), *D);
    for (auto& [o, f] : acc) {
        f.refresh_kind();
        r.set(o, f);
    }
    return r;
}

inline StencilOperator operator+(const StencilOperator& A, const StencilOperator& B) { return combine(1.0, A, 1.0, B); }
inline StencilOperator operator-(const StencilOperator& A, const StencilOperator& B) { return combine(1.0, A, -1.0, B); }
inline StencilOperator operator*(const StencilOperator& A, const StencilOperator& B) { return compose(A, B); }
inline StencilOperator operator*(cplx s, const StencilOperator& A) {
    StencilOperator r(A.window(), A.domain());
    for (const auto& [o, c] : A.terms()) {
        Field f = c;
        for (auto& v : f.values) v *= s;
        f.refresh_kind();
        r.set(o, f);
    }
    return r;
}

/// A + s on A's domain.
inline StencilOperator plus_identity(const StencilOperator& A, cplx s) {
    return combine(1.0, A, s, StencilOperator::identity(A.window()));
}
/// A + diag(f).
inline StencilOperator plus_diag(const StencilOperator& A, const Field& f) {
    return combine(1.0, A, 1.0, StencilOperator::diag(A.window(), f));
}

struct Comparison {
    bool equal = true;
    double deviation = 0.0;
    Vec site{0, 0, 0};
    Vec offset{0, 0, 0};
    explicit operator bool() const { return equal; }
};

/// Coefficient-wise comparison on the common domain (optionally a caller-given sub-window).
inline Comparison interior_equal(const StencilOperator& A, const StencilOperator& B, double tol,
                                 std::optional<Window> on = std::nullopt) {
    if (!(A.window() == B.window())) throw LatticeError("interior_equal: window mismatch");
    auto D = intersect(A.domain(), B.domain());
    if (D && on) D = intersect(*D, *on);
    Comparison c;
    if (!D) {
        c.equal = false;
        c.deviation = std::numeric_limits<double>::infinity();
        return c;
    }
    std::map<Vec, int> offs;
    for (const auto& o : A.offsets()) offs[o] = 1;
    for (const auto& o : B.offsets()) offs[o] = 1;
    for (const auto& [o, _] : offs)
        D->for_each([&](std::size_t, const Vec& p) {
            double d = std::abs(A.coeff(o, p) - B.coeff(o, p));
            if (d > c.deviation) {
                c.deviation = d;
                c.site = p;
                c.offset = o;
            }
        });
    c.equal = c.deviation <= tol;
    return c;
}

/// Same comparison scaled by the largest coefficient magnitude of A.
inline Comparison interior_equal_rel(const StencilOperator& A, const StencilOperator& B, double tol,
                                     std::optional<Window> on = std::nullopt) {
    auto c = interior_equal(A, B, 0.0, on);
    double scale = 0;
    for (const auto& [o, f] : A.terms()) scale = std::max(scale, f.max_abs());
    c.deviation /= std::max(scale, 1e-300);
    c.equal = c.deviation <= tol;
    return c;
}

/// Lattice isometry n -> M n + origin, M a signed permutation.
struct AxisMap {
    std::array<int, 3> perm{0, 1, 2};
    std::array<int, 3> sign{1, 1, 1};
    Vec origin{0, 0, 0};

    static AxisMap reflect(int dims, std::array<int, 3> signs) {
        AxisMap m;
        m.sign = signs;
        for (int k = dims; k < 3; ++k) m.sign[k] = 1;
        return m;
    }
    static AxisMap swap12() {
        AxisMap m;
        m.perm = {1, 0, 2};
        return m;
    }
    /// n -> 1 - n on a line.
    static AxisMap tau() {
        AxisMap m;
        m.sign = {-1, 1, 1};
        m.origin = {1, 0, 0};
        return m;
    }
    /// Linear part only: image coordinate k is sign[k] * p[perm[k]].
    Vec linear(const Vec& p) const {
        Vec r;
        for (int k = 0; k < 3; ++k) r[k] = sign[k] * p[perm[k]];
        return r;
    }
    Vec operator()(const Vec& p) const { return linear(p) + origin; }
    AxisMap inverse() const {
        AxisMap m;
        for (int k = 0; k < 3; ++k) {
            m.perm[perm[k]] = k;
            m.sign[perm[k]] = sign[k];
        }
        m.origin = -m.linear(origin);
        return m;
    }
    Window operator()(const Window& w) const {
        Vec a = (*this)(w.lo), b = (*this)(w.hi), lo, hi;
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(a[k], b[k]);
            hi[k] = std::max(a[k], b[k]);
        }
        return Window(w.dims, lo, hi);
    }
};

/// Pushforward of a field: g(M p) = f(p).
inline Field transform(const Field& f, const AxisMap& M) {
    Field g(M(f.window), f.kind);
    f.window.for_each([&](std::size_t i, const Vec& p) { g[M(p)] = f.values[i]; });
    return g;
}

/// Pushforward of an operator: T^off becomes T^{M off}, coefficients move with their sites.
inline StencilOperator transform(const StencilOperator& A, const AxisMap& M) {
    StencilOperator r(M(A.window()), M(A.domain()));
    for (const auto& [o, c] : A.terms()) r.set(M.linear(o), transform(c, M));
    return r;
}

} // namespace ldx
