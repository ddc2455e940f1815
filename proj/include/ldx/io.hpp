#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "ldx/lattice.hpp"

namespace ldx::io {

using json = nlohmann::json;

/// Malformed input; `path` names the offending field, e.g. `terms[2].coeffs[7]`.
class FormatError : public LatticeError {
public:
    FormatError(std::string path, const std::string& what)
        : LatticeError(path + ": " + what), path(std::move(path)), reason(what) {}
    std::string path;
    std::string reason;
};

namespace detail {

inline std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }
inline std::string at(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

inline const json& member(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw FormatError(path.empty() ? "<root>" : path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw FormatError(join(path, key), "missing");
    return *it;
}

inline int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw FormatError(path, "expected an integer");
    return j.get<int>();
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw FormatError(path, "expected a number");
    return j.get<double>();
}

inline cplx scalar(const json& j, const std::string& path, ScalarKind kind) {
    if (kind == ScalarKind::real) return number(j, path);
    if (j.is_number()) return j.get<double>();
    if (!j.is_array() || j.size() != 2) throw FormatError(path, "expected [re, im]");
    return {number(j[0], at(path, 0)), number(j[1], at(path, 1))};
}

inline Vec vec(const json& j, int dims, const std::string& path) {
    if (!j.is_array() || int(j.size()) != dims)
        throw FormatError(path, "expected " + std::to_string(dims) + " integers");
    Vec v{0, 0, 0};
    for (int k = 0; k < dims; ++k) v[std::size_t(k)] = integer(j[std::size_t(k)], at(path, std::size_t(k)));
    return v;
}

inline Window window(const json& j, int dims, const std::string& path) {
    if (!j.is_array() || int(j.size()) != dims)
        throw FormatError(path, "expected " + std::to_string(dims) + " [lo, hi] pairs");
    Vec lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < dims; ++k) {
        auto p = at(path, std::size_t(k));
        const json& r = j[std::size_t(k)];
        if (!r.is_array() || r.size() != 2) throw FormatError(p, "expected [lo, hi]");
        lo[std::size_t(k)] = integer(r[0], at(p, 0));
        hi[std::size_t(k)] = integer(r[1], at(p, 1));
        if (lo[std::size_t(k)] > hi[std::size_t(k)]) throw FormatError(p, "lo > hi");
    }
    return Window(dims, lo, hi);
}

inline json scalar_json(cplx z, ScalarKind kind) {
    if (kind == ScalarKind::real) return z.real();
    return json::array({z.real(), z.imag()});
}

} // namespace detail

inline ScalarKind parse_kind(const json& j, const std::string& path) {
    if (!j.is_string()) throw FormatError(path, "expected \"real\" or \"complex\"");
    auto s = j.get<std::string>();
    if (s == "real") return ScalarKind::real;
    if (s == "complex") return ScalarKind::complex;
    throw FormatError(path, "unknown scalar kind '" + s + "'");
}

inline int parse_dims(const json& j, const std::string& path) {
    int d = detail::integer(detail::member(j, "dims", path), detail::join(path, "dims"));
    if (d < 1 || d > 3) throw FormatError(detail::join(path, "dims"), "must be 1, 2 or 3");
    return d;
}

inline json window_json(const Window& w) {
    json out = json::array();
    for (int k = 0; k < w.dims; ++k) out.push_back({w.lo[std::size_t(k)], w.hi[std::size_t(k)]});
    return out;
}

inline Window parse_window(const json& j, int dims, const std::string& path = "window") {
    return detail::window(j, dims, path);
}

/// {"dims", "window", "values" (row-major), "scalar"}
inline json field_json(const Field& f) {
    json v = json::array();
    for (const auto& z : f.values) v.push_back(detail::scalar_json(z, f.kind));
    return {{"dims", f.window.dims},
            {"window", window_json(f.window)},
            {"scalar", f.kind == ScalarKind::real ? "real" : "complex"},
            {"values", v}};
}

inline Field parse_values(const json& j, const Window& w, ScalarKind kind, const std::string& path) {
    if (!j.is_array()) throw FormatError(path, "expected an array");
    if (j.size() != w.size())
        throw FormatError(path, "expected " + std::to_string(w.size()) + " values, got " + std::to_string(j.size()));
    Field f(w, kind);
    for (std::size_t i = 0; i < j.size(); ++i) f.values[i] = detail::scalar(j[i], detail::at(path, i), kind);
    return f;
}

inline Field parse_field(const json& j, const std::string& path = "") {
    using namespace detail;
    int d = parse_dims(j, path);
    Window w = window(member(j, "window", path), d, join(path, "window"));
    auto kind = j.contains("scalar") ? parse_kind(j["scalar"], join(path, "scalar")) : ScalarKind::real;
    return parse_values(member(j, "values", path), w, kind, join(path, "values"));
}

/// Operator interchange format. Coefficients are row-major over "domain", which defaults to "window".
inline json operator_json(const StencilOperator& op) {
    const Window& w = op.window();
    json terms = json::array();
    for (const auto& [o, f] : op.terms()) {
        json c = json::array();
        for (const auto& z : f.values) c.push_back(detail::scalar_json(z, op.kind()));
        json off = json::array();
        for (int k = 0; k < w.dims; ++k) off.push_back(o[std::size_t(k)]);
        terms.push_back({{"offset", off}, {"coeffs", c}});
    }
    json out{{"dims", w.dims},
             {"window", window_json(w)},
             {"scalar", op.kind() == ScalarKind::real ? "real" : "complex"},
             {"terms", terms}};
    if (!(op.domain() == w)) out["domain"] = window_json(op.domain());
    return out;
}

inline StencilOperator parse_operator(const json& j, const std::string& path = "") {
    using namespace detail;
    int d = parse_dims(j, path);
    Window w = window(member(j, "window", path), d, join(path, "window"));
    Window D = j.contains("domain") ? window(j["domain"], d, join(path, "domain")) : w;
    if (!w.contains(D)) throw FormatError(join(path, "domain"), "not inside the window");
    auto kind = parse_kind(member(j, "scalar", path), join(path, "scalar"));
    const json& terms = member(j, "terms", path);
    auto tp = join(path, "terms");
    if (!terms.is_array()) throw FormatError(tp, "expected an array");
    StencilOperator op(w, D);
    for (std::size_t t = 0; t < terms.size(); ++t) {
        auto p = at(tp, t);
        Vec o = vec(member(terms[t], "offset", p), d, join(p, "offset"));
        if (op.has(o)) throw FormatError(join(p, "offset"), "duplicate offset " + to_string(o, d));
        op.set(o, parse_values(member(terms[t], "coeffs", p), D, kind, join(p, "coeffs")));
    }
    return op;
}

inline json read_json(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw FormatError(file, "cannot open");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(file, std::string("invalid JSON: ") + e.what());
    }
}

inline StencilOperator read_operator(const std::string& file) {
    auto j = read_json(file);
    try {
        return parse_operator(j);
    } catch (const FormatError& e) {
        throw FormatError(file + ": " + e.path, e.reason);
    }
}

/// Rows "n1[,n2[,n3]],re[,im]" with a header line.
inline std::string field_csv(const Field& f) {
    std::ostringstream os;
    os.precision(17);
    const char* axes[] = {"n1", "n2", "n3"};
    for (int k = 0; k < f.window.dims; ++k) os << axes[k] << ',';
    os << (f.kind == ScalarKind::real ? "value\n" : "re,im\n");
    f.window.for_each([&](std::size_t i, const Vec& n) {
        for (int k = 0; k < f.window.dims; ++k) os << n[std::size_t(k)] << ',';
        os << f.values[i].real();
        if (f.kind == ScalarKind::complex) os << ',' << f.values[i].imag();
        os << '\n';
    });
    return os.str();
}

} // namespace ldx::io
