// lattice-darboux: command-line front end for the ldx library.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "ldx/consistency.hpp"
#include "ldx/demo.hpp"
#include "ldx/elliptic.hpp"
#include "ldx/groundstate.hpp"
#include "ldx/hyperbolic.hpp"
#include "ldx/io.hpp"
#include "ldx/oned.hpp"
#include "ldx/spectral.hpp"
#include "ldx/tetra.hpp"

namespace fs = std::filesystem;
using namespace ldx;
using io::json;

namespace {

constexpr const char* version = "0.1.0";

/// Bad flag values or inputs that are not a numerical failure.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string out = "ldx-out";
    std::optional<double> tol;
    std::string window;
    std::uint64_t seed = 20240901;
};

/// Everything a command produces. `report` goes to report.json, `files` next to it.
struct Run {
    json report = json::object();
    std::map<std::string, std::string> files;
    bool pass = true;
    std::ostringstream text;

    void check(const std::string& name, double value, double limit) {
        bool ok = value < limit;
        report["checks"].push_back({{"name", name}, {"value", value}, {"limit", limit}, {"pass", ok}});
        text << "  " << (ok ? "ok  " : "FAIL") << "  " << name << "  " << value << " < " << limit << '\n';
        pass = pass && ok;
    }
    void require(const std::string& name, bool ok) {
        report["checks"].push_back({{"name", name}, {"pass", ok}});
        text << "  " << (ok ? "ok  " : "FAIL") << "  " << name << '\n';
        pass = pass && ok;
    }
};

struct Context {
    Globals g;
    json parameters = json::object();
    json inputs = json::object();

    double tol(double fallback) const { return g.tol.value_or(fallback); }

    Window window(int dims, const Window& fallback) const {
        if (g.window.empty()) return fallback;
        std::vector<std::pair<int, int>> ranges;
        std::stringstream ss(g.window);
        std::string part;
        while (std::getline(ss, part, ',')) {
            auto colon = part.find(':', 1);
            if (colon == std::string::npos) throw UsageError("--window: expected lo:hi, got '" + part + "'");
            try {
                ranges.emplace_back(std::stoi(part.substr(0, colon)), std::stoi(part.substr(colon + 1)));
            } catch (const std::exception&) {
                throw UsageError("--window: bad integer in '" + part + "'");
            }
        }
        if (ranges.size() == 1) ranges.resize(std::size_t(dims), ranges.front());
        if (int(ranges.size()) != dims)
            throw UsageError("--window: need 1 or " + std::to_string(dims) + " ranges");
        Vec lo{}, hi{};
        for (int k = 0; k < dims; ++k) std::tie(lo[std::size_t(k)], hi[std::size_t(k)]) = ranges[std::size_t(k)];
        return Window(dims, lo, hi);
    }

    json load(const std::string& file) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw io::FormatError(file, "cannot open");
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        inputs[file] = sha256(bytes);
        try {
            return json::parse(bytes);
        } catch (const json::parse_error& e) {
            throw io::FormatError(file, std::string("invalid JSON: ") + e.what());
        }
    }

    StencilOperator load_operator(const std::string& file, int dims = 0) {
        auto j = load(file);
        try {
            auto op = io::parse_operator(j);
            if (dims && op.window().dims != dims)
                throw io::FormatError("dims", "expected " + std::to_string(dims) + ", got " + std::to_string(op.window().dims));
            return op;
        } catch (const io::FormatError& e) {
            throw io::FormatError(file + ": " + e.path, e.reason);
        }
    }

    static std::string sha256(const std::string& bytes) {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
        std::ostringstream os;
        for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
        return os.str();
    }
};

oned::Branch parse_branch(const std::string& s) {
    if (s == "L") return oned::Branch::L;
    if (s == "Ltilde") return oned::Branch::Ltilde;
    throw UsageError("--branch: expected L or Ltilde");
}

json vec_json(const Vec& v, int dims) {
    json out = json::array();
    for (int k = 0; k < dims; ++k) out.push_back(v[std::size_t(k)]);
    return out;
}

json summary_json(const Field& f) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0;
    for (const auto& z : f.values) {
        lo = std::min(lo, z.real());
        hi = std::max(hi, z.real());
        sum += z.real();
    }
    return {{"min", lo}, {"max", hi}, {"mean", f.values.empty() ? 0.0 : sum / double(f.size())}};
}

std::string table_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
    return os.str();
}

// ---- oned ------------------------------------------------------------------

struct OnedRiccati {
    std::string op;
    double alpha = 0, seed_b = 1;
    bool dual = false;
    Run operator()(Context& cx) const {
        Run r;
        auto L = cx.load_operator(op, 1);
        oned::Jacobi1D J(L.window(), L.field(T1), L.field(Zero));
        auto q = dual ? oned::riccati_factorize_dual(J, alpha, seed_b) : oned::riccati_factorize(J, alpha, seed_b);
        auto prod = dual ? compose(q.Qplus(), q.Q()) : compose(q.Q(), q.Qplus());
        auto dev = interior_equal_rel(prod, plus_identity(J.op(), alpha), 0.0).deviation;
        auto partner = dual ? oned::darboux_dual(q, alpha) : oned::darboux(q, alpha);
        r.report["a"] = io::field_json(q.a);
        r.report["b"] = io::field_json(q.b);
        r.report["partner"] = io::operator_json(partner.op());
        r.check("factorization reproduces L + alpha", dev, cx.tol(1e-12));
        r.files["factor.csv"] = io::field_csv(q.a) + "\n" + io::field_csv(q.b);
        return r;
    }
};

struct OnedCharlier {
    double b = 1;
    int n0 = 0, kmax = 4;
    Run operator()(Context& cx) const {
        Run r;
        oned::CharlierParams p(b, n0);
        auto w = cx.window(1, Window::line(1 - n0, 40 - n0));
        double tol = cx.tol(1e-13);
        r.check("commutator residual", oned::heisenberg_residual(p, oned::charlier_alpha(p), w), tol);
        auto psi = oned::charlier_ground_state(p, w);
        auto P = oned::charlier_polynomials(p, kmax, w);
        std::vector<std::vector<double>> rows;
        w.for_each([&](std::size_t i, const Vec& n) {
            std::vector<double> row{double(n[0]), psi.values[i].real()};
            for (const auto& f : P) row.push_back(f.values[i].real());
            rows.push_back(row);
        });
        std::vector<std::string> head{"n", "psi0"};
        for (int k = 0; k <= kmax; ++k) head.push_back("p" + std::to_string(k));
        r.files["charlier.csv"] = table_csv(head, rows);
        double orth = 0;
        auto dot = [&](std::size_t i, std::size_t j) {
            double s = 0;
            for (std::size_t n = 0; n < w.size(); ++n)
                s += (P[i].values[n] * P[j].values[n]).real() * std::norm(psi.values[n]);
            return s;
        };
        for (std::size_t i = 0; i < P.size(); ++i)
            for (std::size_t j = 0; j < i; ++j) orth = std::max(orth, std::abs(dot(i, j)) / std::sqrt(dot(i, i) * dot(j, j)));
        r.check("polynomial orthogonality", orth, 1e-10);
        r.report["alpha"] = oned::charlier_alpha(p);
        r.report["ground_state"] = io::field_json(psi);
        return r;
    }
};

struct OnedQosc {
    double c = 1, a = 2;
    int levels = 4;
    std::string branch = "L";
    Run operator()(Context& cx) const {
        Run r;
        auto br = parse_branch(branch);
        auto W = cx.window(1, Window::line(-40, 40));
        oned::ExpQ1D e(c, a);
        double tol = cx.tol(1e-9);
        auto lv = oned::q_osc_levels(a, levels, br);
        std::vector<std::vector<double>> rows;
        json states = json::array();
        for (int k = 0; k < levels; ++k) {
            auto s = oned::ladder_eigenfunction_1d(c, a, k, W, br);
            double res = spec::eigen_residual(s.op, s.psi, s.lambda);
            rows.push_back({double(k), s.lambda, lv[std::size_t(k)], res});
            r.check("ladder residual k=" + std::to_string(k), res, tol);
        }
        int m = std::min(1 - W.lo[0], W.hi[0]);
        auto S = Window::line(1 - m, m); // symmetric under n -> 1 - n
        r.check("relation residual", oned::q_osc_relation_residual(e, S), 1e-12);
        r.check("tau identity", oned::tau_conjugate(e, S), 1e-12);
        r.report["levels"] = lv;
        r.files["levels.csv"] = table_csv({"k", "lambda", "predicted", "residual"}, rows);
        return r;
    }
};

// ---- hyp -------------------------------------------------------------------

struct HypOp {
    std::string op;
    hyp::QuadOp load(Context& cx) const { return hyp::QuadOp::from(cx.load_operator(op, 2)); }
};

json invariants_json(const hyp::HypInvariants& I) {
    return {{"K1", io::field_json(I.K1)}, {"K2", io::field_json(I.K2)}, {"w", io::field_json(I.w)}, {"H", io::field_json(I.H)}};
}

struct HypFactorize : HypOp {
    std::string form = "a";
    Run operator()(Context& cx) const {
        Run r;
        auto L = load(cx);
        if (form != "a" && form != "b") throw UsageError("--form: expected a or b");
        auto F = form == "a" ? hyp::factorize_a(L) : hyp::factorize_b(L);
        r.report["f"] = io::field_json(F.f);
        r.report["u"] = io::field_json(F.u);
        r.report["v"] = io::field_json(F.v);
        r.report["w"] = io::field_json(F.w);
        r.check("reconstruction", interior_equal_rel(F.reconstruct().op(), L.op(), 0.0).deviation, cx.tol(1e-12));
        return r;
    }
};

struct HypLaplace : HypOp {
    bool second = false;
    Run operator()(Context& cx) const {
        Run r;
        auto L = load(cx);
        auto Lt = second ? hyp::laplace_second(L) : hyp::laplace_first(L);
        auto I = hyp::invariants(L);
        auto step = hyp::laplace_on_invariants(I.w, I.H);
        auto It = hyp::invariants(Lt);
        r.report["operator"] = io::operator_json(Lt.op());
        r.report["invariants"] = invariants_json(It);
        if (!second) {
            double d = std::max(max_diff(It.w.restrict(*intersect(It.w.window, step.w.window)), step.w.restrict(*intersect(It.w.window, step.w.window))),
                                max_diff(It.H.restrict(*intersect(It.H.window, step.H.window)), step.H.restrict(*intersect(It.H.window, step.H.window))));
            r.check("operator and invariant paths agree", d, cx.tol(1e-10));
        }
        return r;
    }
};

struct HypInvariantsCmd : HypOp {
    Run operator()(Context& cx) const {
        Run r;
        auto I = hyp::invariants(load(cx));
        r.report["invariants"] = invariants_json(I);
        r.files["K1.csv"] = io::field_csv(I.K1);
        r.files["K2.csv"] = io::field_csv(I.K2);
        return r;
    }
};

struct HypChain : HypOp {
    int steps = 4;
    bool toda_only = false;
    Run operator()(Context& cx) const {
        Run r;
        auto I = hyp::invariants(load(cx));
        auto chain = hyp::toda_chain(I.w, I.H, steps);
        r.check("toda residual", hyp::toda_residual(chain), cx.tol(1e-9));
        if (toda_only) return r;
        json arr = json::array();
        std::vector<std::vector<double>> rows;
        for (std::size_t s = 0; s < chain.size(); ++s) {
            arr.push_back(io::field_json(chain[s]));
            auto m = summary_json(chain[s]);
            rows.push_back({double(s), m["min"], m["max"], m["mean"]});
        }
        r.report["chain"] = arr;
        r.files["chain.csv"] = table_csv({"step", "min", "max", "mean"}, rows);
        return r;
    }
};

// ---- tri -------------------------------------------------------------------

struct TriFactorize {
    std::string op;
    int type = 1;
    Run operator()(Context& cx) const {
        Run r;
        auto L = cx.load_operator(op, 2);
        auto F = tri::factorize_elliptic(L, type);
        r.report["x"] = io::field_json(F.Q.x);
        r.report["y"] = io::field_json(F.Q.y);
        r.report["z"] = io::field_json(F.Q.z);
        r.report["w"] = io::field_json(F.w);
        r.check("reconstruction", interior_equal_rel(F.reconstruct(), L, 0.0).deviation, cx.tol(1e-12));
        return r;
    }
};

struct TriLaplace {
    std::string op;
    int type = 1;
    bool allow_nonpositive = false;
    Run operator()(Context& cx) const {
        Run r;
        auto L = cx.load_operator(op, 2);
        auto P = tri::laplace_P(L, type, allow_nonpositive);
        r.report["operator"] = io::operator_json(P);
        r.require("image is Hermitian", tri::is_hermitian(P, cx.tol(1e-10)));
        return r;
    }
};

struct TriFlux {
    std::string op;
    Run operator()(Context& cx) const {
        Run r;
        auto f = tri::magnetic_flux(cx.load_operator(op, 2));
        r.report["black"] = summary_json(f.black);
        r.report["white"] = summary_json(f.white);
        r.report["max_abs"] = f.max_abs();
        r.files["flux_black.csv"] = io::field_csv(f.black);
        r.files["flux_white.csv"] = io::field_csv(f.white);
        return r;
    }
};

struct TriGaugeReduce {
    std::string op;
    Run operator()(Context& cx) const {
        Run r;
        auto g = tri::gauge_reduce_to_real(cx.load_operator(op, 2), cx.tol(1e-10));
        r.report["phase"] = io::field_json(g.f);
        r.report["operator"] = io::operator_json(g.real_op);
        return r;
    }
};

struct TriQLandau {
    double u = 0.8, v = 1.2, c = 1, d = 1;
    Run operator()(Context& cx) const {
        Run r;
        auto p = tri::ExpQ2D::q_landau(c, d, u, v);
        auto W = cx.window(2, Window::square(-6, 6));
        r.check("relation residual", tri::q_landau_relation_residual(p, W), cx.tol(1e-12));
        r.report["Q"] = io::operator_json(tri::exp_Q(p, W).op());
        r.report["region"] = int(gs::landau_region(u, v));
        return r;
    }
};

// ---- gs --------------------------------------------------------------------

gs::GroundStateSpec parse_gs_spec(const json& j, const std::string& file) {
    if (!j.is_object()) throw io::FormatError(file, "expected an object");
    auto get = [&]<class T>(const char* key, T& out, bool required) {
        if (!j.contains(key)) {
            if (required) throw io::FormatError(file + ": " + key, "missing");
            return false;
        }
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw io::FormatError(file + ": " + key, "wrong type");
        }
        return true;
    };
    gs::GroundStateSpec s;
    std::string color;
    if (get("color", color, false)) {
        if (color != "black" && color != "white") throw io::FormatError(file + ": color", "expected black or white");
        s.color = color == "black" ? gs::Color::Black : gs::Color::White;
    }
    get("case", s.case_tag, false);
    get("l", s.l, true);
    get("c", s.c, true);
    int q = 0;
    double w = 0;
    if (get("q", q, false)) s.q = q;
    if (get("w", w, false)) s.w = w;
    int dims = int(s.l.size());
    if (dims != 2 && dims != 3) throw io::FormatError(file + ": l", "expected a 2x2 or 3x3 matrix");
    if (j.contains("window")) {
        try {
            s.window = io::parse_window(j.at("window"), dims);
        } catch (const io::FormatError& e) {
            throw io::FormatError(file + ": " + e.path, e.reason);
        }
    } else if (dims == 3) {
        s.window = Window::cube(-10, 10);
    }
    return s;
}

struct GsBuild {
    std::string spec;
    Run operator()(Context& cx) const {
        Run r;
        auto s = parse_gs_spec(cx.load(spec), spec);
        auto g = s.l.size() == 3 ? gs::build_ground_state_3d(s) : gs::build_ground_state(s);
        r.check("zero-mode residual", gs::zero_mode_residual(gs::defining_operator(s), g.psi), cx.tol(1e-12));
        r.check("tail ratio", gs::tail_ratio(g.psi), 1e-8);
        r.report["psi"] = io::field_json(g.psi);
        r.report["w"] = g.w;
        if (g.q) r.report["q"] = *g.q;
        r.report["kappa"] = vec_json(g.kappa, s.window.dims);
        r.files["psi.csv"] = io::field_csv(g.psi);
        return r;
    }
};

struct GsLadder {
    gs::LadderSpec s;
    std::string branch = "L";
    Run operator()(Context& cx) const {
        Run r;
        auto sp = s;
        sp.branch = parse_branch(branch);
        auto st = gs::ladder_eigenfunction(sp, cx.window(2, Window::square(-30, 30)));
        r.check("eigen residual", spec::eigen_residual(st.op, st.psi, st.lambda), cx.tol(1e-9));
        r.report["lambda"] = st.lambda;
        r.report["psi"] = io::field_json(st.psi);
        r.files["psi.csv"] = io::field_csv(st.psi);
        return r;
    }
};

struct GsLadder1D {
    double c = 1, a = 2;
    int k = 0;
    std::string branch = "L";
    Run operator()(Context& cx) const {
        Run r;
        auto st = oned::ladder_eigenfunction_1d(c, a, k, cx.window(1, Window::line(-40, 40)), parse_branch(branch));
        r.check("eigen residual", spec::eigen_residual(st.op, st.psi, st.lambda), cx.tol(1e-9));
        r.report["lambda"] = st.lambda;
        r.report["psi"] = io::field_json(st.psi);
        r.files["psi.csv"] = io::field_csv(st.psi);
        return r;
    }
};

// ---- flat ------------------------------------------------------------------

struct FlatPair {
    std::string pair;
    std::vector<double> commuting{1, 1, 2};

    /// {"window": [[lo,hi],[lo,hi]], "a": [...], "b": [...], "c": [...], "d": [...]}, row-major over the window.
    flat::TrianglePair load(Context& cx) const {
        if (pair.empty()) {
            if (commuting.size() != 3) throw UsageError("--commuting takes c d v");
            return flat::TrianglePair::commuting(commuting[0], commuting[1], commuting[2],
                                                 cx.window(2, Window::square(-5, 5)));
        }
        auto j = cx.load(pair);
        try {
            auto W = io::parse_window(io::detail::member(j, "window", ""), 2);
            auto f = [&](const char* k) {
                return io::parse_values(io::detail::member(j, k, ""), W, ScalarKind::real, k);
            };
            return {W, f("a"), f("b"), f("c"), f("d")};
        } catch (const io::FormatError& e) {
            throw io::FormatError(pair + ": " + e.path, e.reason);
        }
    }
};

struct FlatCheck : FlatPair {
    Run operator()(Context& cx) const {
        Run r;
        auto p = load(cx);
        auto f = flat::flatness_check(p, cx.tol(1e-9));
        auto rel = flat::ratio_relation_check(p, cx.tol(1e-9));
        r.report["max_A"] = f.max_A;
        r.report["max_B"] = f.max_B;
        if (f.witness) r.report["witness"] = vec_json(*f.witness, 2);
        r.report["ratio_spread"] = rel.spread;
        r.require("flat", f.flat);
        r.require("ratio relation agrees with flatness", rel.holds == f.flat);
        return r;
    }
};

struct FlatPropagate : FlatPair {
    std::vector<double> seeds{1, 1};
    std::vector<int> at{0, 0};
    std::string order = "fan";
    Run operator()(Context& cx) const {
        Run r;
        auto p = load(cx);
        if (order != "fan" && order != "row") throw UsageError("--order: expected fan or row");
        auto psi = flat::propagate_from_edge(p, {at[0], at[1], 0}, seeds[0], seeds[1], std::nullopt,
                                             order == "fan" ? flat::Order::Fan : flat::Order::RowMajor, cx.tol(1e-9));
        r.check("system residual", flat::system_residual(p, psi), 1e-10);
        r.report["psi"] = io::field_json(psi);
        r.files["psi.csv"] = io::field_csv(psi);
        return r;
    }
};

struct FlatCurvature : FlatPair {
    Run operator()(Context& cx) const {
        Run r;
        auto k = flat::curvature(load(cx));
        r.report["A"] = summary_json(k.A);
        r.report["B"] = summary_json(k.B);
        r.files["curvature_A.csv"] = io::field_csv(k.A);
        r.files["curvature_B.csv"] = io::field_csv(k.B);
        return r;
    }
};

// ---- tet -------------------------------------------------------------------

tet::Form parse_form(const std::string& s) {
    if (s == "QQplus") return tet::Form::QQplus;
    if (s == "QplusQ") return tet::Form::QplusQ;
    throw UsageError("--form: expected QQplus or QplusQ");
}

struct TetCondition {
    std::string op, form = "QQplus";
    Run operator()(Context& cx) const {
        Run r;
        auto L = tet::TetraOp::from_operator(cx.load_operator(op, 3));
        auto c = tet::tetra_factor_condition(L, parse_form(form), cx.tol(1e-10));
        r.report["spread"] = c.spread;
        if (c.first_failure) r.report["first_failure"] = vec_json(*c.first_failure, 3);
        r.report["x2"] = io::field_json(c.x2);
        r.require("condition holds everywhere", c.all);
        return r;
    }
};

struct TetFactorize {
    std::string op, form = "QQplus";
    Run operator()(Context& cx) const {
        Run r;
        auto L = tet::TetraOp::from_operator(cx.load_operator(op, 3));
        auto F = tet::tetra_factorize(L, parse_form(form), cx.tol(1e-10));
        r.report["x"] = io::field_json(F.x);
        for (std::size_t k = 0; k < 3; ++k) r.report["y"].push_back(io::field_json(F.y[k]));
        r.report["w"] = io::field_json(F.w);
        r.check("reconstruction", interior_equal_rel(F.product(), L.op(), 0.0).deviation, 1e-11);
        return r;
    }
};

struct TetRelation {
    double c = 1, d = 1, f = 1, h = 0, l12 = 0, l13 = 0, l23 = 0;
    Run operator()(Context& cx) const {
        Run r;
        tet::ExpQ3D p{c, d, f, {}, h};
        const double off[3][3] = {{0, l12, l13}, {0, 0, l23}, {0, 0, 0}};
        for (std::size_t i = 0; i < 3; ++i) {
            p.l[i][i] = h / 2;
            for (std::size_t j = i + 1; j < 3; ++j) {
                p.l[i][j] = off[i][j];
                p.l[j][i] = h - off[i][j];
            }
        }
        r.check("relation residual", tet::q_relation_residual_3d(p, cx.window(3, Window::cube(-3, 3))), cx.tol(1e-12));
        return r;
    }
};

// ---- spec ------------------------------------------------------------------

std::vector<spec::Prediction> parse_predictions(const json& j, const std::string& file) {
    const json* arr = &j;
    if (j.is_object()) {
        if (!j.contains("predictions")) throw io::FormatError(file + ": predictions", "missing");
        arr = &j["predictions"];
    }
    if (!arr->is_array()) throw io::FormatError(file + ": predictions", "expected an array");
    std::vector<spec::Prediction> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const json& e = (*arr)[i];
        auto path = file + ": predictions[" + std::to_string(i) + "]";
        if (e.is_number()) {
            out.push_back({e.get<double>(), ""});
            continue;
        }
        if (!e.is_object() || !e.contains("lambda") || !e["lambda"].is_number())
            throw io::FormatError(path + ".lambda", "expected a number");
        out.push_back({e["lambda"].get<double>(), e.value("ref", std::string())});
    }
    return out;
}

struct SpecVerify {
    std::string op, predict, builtin;
    int count = 3;
    double u = 0.8, v = 1.2, c = 1, d = 1, a = 2;
    Run operator()(Context& cx) const {
        Run r;
        std::vector<spec::Prediction> preds;
        spec::VerifyOptions opt;
        opt.tol = cx.tol(1e-6);
        spec::SpectrumReport rep;
        if (!builtin.empty()) {
            if (builtin == "q-landau") {
                auto p = tri::ExpQ2D::q_landau(c, d, u, v);
                for (double l : gs::landau_levels(u, count, oned::Branch::L)) preds.push_back({l, "q-Landau level"});
                auto W = cx.window(2, Window::square(0, 39));
                opt.grown = Window(2, W.lo - Vec{5, 5, 0}, W.hi + Vec{5, 5, 0});
                rep = spec::verify_spectrum([&](const Window& w) { return gs::landau_operator(p, w, oned::Branch::L); },
                                            preds, W, opt);
            } else if (builtin == "q-oscillator") {
                oned::ExpQ1D e(c, a);
                for (double l : oned::q_osc_levels(a, count, oned::Branch::L)) preds.push_back({l, "q-oscillator level"});
                auto W = cx.window(1, Window::line(-40, 40));
                opt.grown = Window(1, W.lo - Vec{20, 0, 0}, W.hi + Vec{20, 0, 0});
                rep = spec::verify_factored_spectrum([&](const Window& w) { return e.Q(w); }, preds, W, opt);
            } else {
                throw UsageError("--builtin: expected q-landau or q-oscillator");
            }
        } else {
            if (op.empty() || predict.empty()) throw UsageError("spec verify needs --op and --predict, or --builtin");
            auto L = cx.load_operator(op);
            preds = parse_predictions(cx.load(predict), predict);
            auto D = L.domain();
            auto inner = inset(D, 2);
            auto W = cx.g.window.empty() ? inner.value_or(D) : cx.window(D.dims, D);
            if (!(W == D)) opt.grown = D;
            rep = spec::verify_spectrum(
                [&](const Window& w) {
                    auto dom = intersect(D, w);
                    if (!dom) throw UsageError("--window does not meet the operator domain");
                    return L.restricted(*dom);
                },
                preds, W, opt);
        }
        json ms = json::array();
        std::vector<std::vector<double>> rows;
        r.text << "  predicted      nearest        distance   mass       stable\n";
        for (const auto& m : rep.matches) {
            ms.push_back({{"predicted", m.predicted}, {"ref", m.ref}, {"nearest", m.nearest}, {"distance", m.distance},
                          {"boundary_mass", m.boundary_mass}, {"localized", m.localized}, {"stable", m.stable},
                          {"pass", m.pass}});
            r.text << "  " << std::setw(12) << m.predicted << "  " << std::setw(12) << m.nearest << "  " << std::setw(9)
                   << m.distance << "  " << std::setw(9) << m.boundary_mass << "  " << (m.stable ? "yes" : "no") << '\n';
        }
        for (std::size_t i = 0; i < rep.computed.size(); ++i) rows.push_back({double(i), rep.computed[i]});
        r.report["matches"] = ms;
        r.report["computed"] = rep.computed;
        r.report["window"] = io::window_json(rep.window);
        r.files["eigenvalues.csv"] = table_csv({"index", "lambda"}, rows);
        r.require("all predictions matched", rep.pass);
        return r;
    }
};

// ---- demo ------------------------------------------------------------------

struct Demo {
    std::string filter, mutation;
    bool stop = false;
    Run operator()(Context& cx) const {
        Run r;
        auto site = mutation::Site::None;
        if (!mutation.empty()) {
            bool found = false;
            for (auto s : mutation::all)
                if (mutation::name(s) == mutation) site = s, found = true;
            if (!found) throw UsageError("--mutation: unknown site '" + mutation + "'");
        }
        mutation::Scope scope(site);
        auto results = demo::demo_suite({cx.g.seed, filter, stop});
        if (results.empty()) throw UsageError("--filter matched no scenario");
        json arr = json::array();
        json timing = json::object();
        for (const auto& s : results) {
            json checks = json::array();
            for (const auto& c : s.checks)
                checks.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"pass", c.pass}});
            json e{{"name", s.name}, {"criterion", s.criterion}, {"pass", s.pass}, {"checks", checks}};
            if (!s.error.empty()) e["error"] = s.error;
            arr.push_back(e);
            timing[s.name] = s.seconds;
            r.text << "  " << (s.pass ? "PASS" : "FAIL") << "  [" << s.criterion << "] " << s.name << '\n';
            if (!s.error.empty()) r.text << "        " << s.error << '\n';
            for (const auto& c : s.checks)
                if (!c.pass) r.text << "        " << c.name << ": " << c.value << " (limit " << c.limit << ")\n";
            r.pass = r.pass && s.pass;
        }
        r.report["scenarios"] = arr;
        r.report["mutation"] = std::string(mutation::name(site));
        r.files["timing.json"] = timing.dump(2) + "\n";
        return r;
    }
};

int finish(Context& cx, const std::string& command, Run& r, double seconds, const std::string& error = {}) {
    fs::create_directories(cx.g.out);
    r.report["command"] = command;
    r.report["pass"] = r.pass;
    if (!error.empty()) r.report["error"] = error;
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream(fs::path(cx.g.out) / name) << body;
    };
    write("report.json", r.report.dump(2) + "\n");
    json files = json::array({"report.json"});
    for (const auto& [name, body] : r.files) {
        write(name, body);
        files.push_back(name);
    }
    json manifest{{"command", command},       {"parameters", cx.parameters}, {"inputs", cx.inputs},
                  {"version", version},       {"wall_seconds", seconds},     {"seed", cx.g.seed},
                  {"summary", {{"pass", r.pass}, {"artifacts", files}}}};
    if (cx.g.tol) manifest["tol"] = *cx.g.tol;
    if (!cx.g.window.empty()) manifest["window"] = cx.g.window;
    if (!error.empty()) manifest["summary"]["error"] = error;
    write("manifest.json", manifest.dump(2) + "\n");
    std::cout << command << ": " << (r.pass ? "PASS" : "FAIL") << '\n' << r.text.str();
    if (!error.empty()) std::cout << "  error: " << error << '\n';
    std::cout << "  artifacts in " << cx.g.out << '\n';
    return r.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Darboux and Laplace transformations of lattice difference operators", "lattice-darboux"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);
    app.fallthrough();
    Context cx;
    app.add_option("--out", cx.g.out, "output directory")->capture_default_str();
    app.add_option("--tol", cx.g.tol, "tolerance override");
    app.add_option("--window", cx.g.window, "window as lo:hi[,lo:hi...]");
    app.add_option("--seed", cx.g.seed, "seed for randomized scenarios")->capture_default_str();

    std::vector<std::pair<CLI::App*, std::function<Run(Context&)>>> commands;
    auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, auto& cmd) {
        auto* sc = parent->add_subcommand(name, help);
        commands.emplace_back(sc, [&cmd](Context& c) { return cmd(c); });
        return sc;
    };

    auto* oned_app = app.add_subcommand("oned", "one-dimensional operators")->require_subcommand(1);
    OnedRiccati riccati;
    auto* sc = leaf(oned_app, "riccati", "factorize L + alpha = Q Q^+ by the Riccati recursion", riccati);
    sc->add_option("--op", riccati.op, "Jacobi operator JSON")->required();
    sc->add_option("--alpha", riccati.alpha);
    sc->add_option("--b0", riccati.seed_b, "seed value of b at the window edge");
    sc->add_flag("--dual", riccati.dual, "factor as Q^+ Q, recursing backward");
    OnedCharlier charlier;
    sc = leaf(oned_app, "charlier", "Charlier ground state, polynomials and commutator", charlier);
    sc->add_option("--b", charlier.b)->capture_default_str();
    sc->add_option("--n0", charlier.n0)->capture_default_str();
    sc->add_option("--kmax", charlier.kmax)->capture_default_str();
    OnedQosc qosc;
    sc = leaf(oned_app, "qosc", "q-oscillator ladder states and relations", qosc);
    sc->add_option("--c", qosc.c)->capture_default_str();
    sc->add_option("--a", qosc.a)->capture_default_str();
    sc->add_option("--levels", qosc.levels)->capture_default_str();
    sc->add_option("--branch", qosc.branch, "L or Ltilde")->capture_default_str();

    auto* hyp_app = app.add_subcommand("hyp", "hyperbolic square-lattice operators")->require_subcommand(1);
    HypFactorize hf;
    sc = leaf(hyp_app, "factorize", "f[(1 + uT1)(1 + vT2) + w] factorization", hf);
    sc->add_option("--op", hf.op)->required();
    sc->add_option("--form", hf.form, "a or b")->capture_default_str();
    HypLaplace hl;
    sc = leaf(hyp_app, "laplace", "Laplace transformation", hl);
    sc->add_option("--op", hl.op)->required();
    sc->add_flag("--second", hl.second, "use the second transformation");
    HypInvariantsCmd hi;
    sc = leaf(hyp_app, "invariants", "gauge invariants K1, K2, w, H", hi);
    sc->add_option("--op", hi.op)->required();
    HypChain hc;
    sc = leaf(hyp_app, "chain", "chain of Laplace transformations", hc);
    sc->add_option("--op", hc.op)->required();
    sc->add_option("--steps", hc.steps)->capture_default_str();
    HypChain ht;
    ht.toda_only = true;
    sc = leaf(hyp_app, "toda-check", "Toda residual along the chain", ht);
    sc->add_option("--op", ht.op)->required();
    sc->add_option("--steps", ht.steps)->capture_default_str();

    auto* tri_app = app.add_subcommand("tri", "triangular-lattice operators")->require_subcommand(1);
    TriFactorize tf;
    sc = leaf(tri_app, "factorize", "L = Q_j Q_j^+ + w_j", tf);
    sc->add_option("--op", tf.op)->required();
    sc->add_option("--type", tf.type)->check(CLI::Range(1, 6))->capture_default_str();
    TriLaplace tl;
    sc = leaf(tri_app, "laplace", "Laplace transformation P_j", tl);
    sc->add_option("--op", tl.op)->required();
    sc->add_option("--type", tl.type)->check(CLI::Range(1, 6))->capture_default_str();
    sc->add_flag("--allow-nonpositive-w", tl.allow_nonpositive);
    TriFlux tx;
    sc = leaf(tri_app, "flux", "magnetic flux through black and white triangles", tx);
    sc->add_option("--op", tx.op)->required();
    TriGaugeReduce tg;
    sc = leaf(tri_app, "gauge-reduce", "phase gauge to a real operator", tg);
    sc->add_option("--op", tg.op)->required();
    TriQLandau tq;
    sc = leaf(tri_app, "qlandau", "q-Landau relation", tq);
    sc->add_option("--u", tq.u)->capture_default_str();
    sc->add_option("--v", tq.v)->capture_default_str();
    sc->add_option("--c", tq.c)->capture_default_str();
    sc->add_option("--d", tq.d)->capture_default_str();

    auto* gs_app = app.add_subcommand("gs", "explicit ground states")->require_subcommand(1);
    GsBuild gb;
    sc = leaf(gs_app, "build", "separated ground state from a JSON spec", gb);
    sc->add_option("--spec", gb.spec)->required();
    GsLadder gl;
    sc = leaf(gs_app, "ladder", "q-Landau ladder state", gl);
    sc->add_option("--c", gl.s.c)->capture_default_str();
    sc->add_option("--d", gl.s.d)->capture_default_str();
    sc->add_option("--u", gl.s.u)->capture_default_str();
    sc->add_option("--v", gl.s.v)->capture_default_str();
    sc->add_option("--k", gl.s.k)->capture_default_str();
    sc->add_option("--branch", gl.branch)->capture_default_str();
    GsLadder1D g1;
    sc = leaf(gs_app, "ladder1d", "q-oscillator ladder state", g1);
    sc->add_option("--c", g1.c)->capture_default_str();
    sc->add_option("--a", g1.a)->capture_default_str();
    sc->add_option("--k", g1.k)->capture_default_str();
    sc->add_option("--branch", g1.branch)->capture_default_str();

    auto* flat_app = app.add_subcommand("flat", "compatibility of triangle-operator pairs")->require_subcommand(1);
    auto pair_opts = [](CLI::App* s, FlatPair& p) {
        s->add_option("--pair", p.pair, "pair JSON with window and a, b, c, d");
        s->add_option("--commuting", p.commuting, "c d v of the commuting family")->expected(3);
    };
    FlatCheck fc;
    pair_opts(sc = leaf(flat_app, "check", "flatness and ratio relation", fc), fc);
    FlatPropagate fp;
    pair_opts(sc = leaf(flat_app, "propagate", "solve Q1 psi = Q2 psi = 0 from two seeds", fp), fp);
    sc->add_option("--seed", fp.seeds, "v0 v1")->expected(2);
    sc->add_option("--at", fp.at, "n1 n2 of the second seed")->expected(2);
    sc->add_option("--order", fp.order, "fan or row")->capture_default_str();
    FlatCurvature fk;
    pair_opts(leaf(flat_app, "curvature", "curvature fields A and B", fk), fk);

    auto* tet_app = app.add_subcommand("tet", "tetrahedral-lattice operators")->require_subcommand(1);
    TetCondition tc;
    sc = leaf(tet_app, "condition", "factorization condition", tc);
    sc->add_option("--op", tc.op)->required();
    sc->add_option("--form", tc.form, "QQplus or QplusQ")->capture_default_str();
    TetFactorize tt;
    sc = leaf(tet_app, "factorize", "L = Q Q^+ + w", tt);
    sc->add_option("--op", tt.op)->required();
    sc->add_option("--form", tt.form)->capture_default_str();
    TetRelation tr;
    sc = leaf(tet_app, "relation", "three-dimensional q-relation", tr);
    sc->set_help_flag("--help", "Print this help message and exit");
    for (auto [flag, ref] : {std::pair{"--c", &tr.c}, {"--d", &tr.d}, {"--f", &tr.f}, {"--h", &tr.h},
                             {"--l12", &tr.l12}, {"--l13", &tr.l13}, {"--l23", &tr.l23}})
        sc->add_option(flag, *ref)->capture_default_str();

    auto* spec_app = app.add_subcommand("spec", "spectral verification")->require_subcommand(1);
    SpecVerify sv;
    sc = leaf(spec_app, "verify", "compare computed eigenvalues with predictions", sv);
    sc->add_option("--op", sv.op, "operator JSON");
    sc->add_option("--predict", sv.predict, "predictions JSON");
    sc->add_option("--builtin", sv.builtin, "q-landau or q-oscillator");
    sc->add_option("--count", sv.count, "number of builtin levels")->capture_default_str();
    for (auto [flag, ref] : {std::pair{"--u", &sv.u}, {"--v", &sv.v}, {"--c", &sv.c}, {"--d", &sv.d}, {"--a", &sv.a}})
        sc->add_option(flag, *ref)->capture_default_str();

    Demo dm;
    sc = leaf(&app, "demo", "run the acceptance scenarios", dm);
    sc->add_option("--filter", dm.filter, "run scenarios whose name contains this");
    sc->add_option("--mutation", dm.mutation, "activate a deliberate formula fault");
    sc->add_flag("--stop-on-failure", dm.stop);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    for (auto& [sub, fn] : commands) {
        if (!sub->parsed()) continue;
        std::string command;
        for (auto* a = sub; a && a != &app; a = a->get_parent()) command = a->get_name() + (command.empty() ? "" : " " + command);
        for (const auto* opt : sub->get_options())
            if (opt->count() > 0 && !opt->get_lnames().empty()) {
                auto res = opt->results();
                cx.parameters[opt->get_lnames().front()] = res.size() == 1 ? json(res.front()) : json(res);
            }
        auto t0 = std::chrono::steady_clock::now();
        auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
        try {
            Run r = fn(cx);
            return finish(cx, command, r, elapsed());
        } catch (const io::FormatError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        } catch (const UsageError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        } catch (const ComputeError& e) {
            Run r;
            r.pass = false;
            r.report["site"] = vec_json(e.site, 3);
            return finish(cx, command, r, elapsed(), e.what());
        } catch (const LatticeError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        }
    }
    std::cerr << app.help();
    return 2;
}
