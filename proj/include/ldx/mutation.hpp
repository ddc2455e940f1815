#pragma once

#include <array>
#include <string_view>

namespace ldx::mutation {

/// Deliberate single-formula faults used to check that the demo suite notices broken formulas.
enum class Site { None, CharlierStep, LaplaceInvariantStep, EllipticX2, CurvatureTransport, TetraY };

inline constexpr std::array<Site, 5> all{Site::CharlierStep, Site::LaplaceInvariantStep, Site::EllipticX2,
                                         Site::CurvatureTransport, Site::TetraY};

inline std::string_view name(Site s) {
    switch (s) {
    case Site::None: return "none";
    case Site::CharlierStep: return "oned.charlier-step";
    case Site::LaplaceInvariantStep: return "hyperbolic.laplace-invariant-step";
    case Site::EllipticX2: return "elliptic.x-squared";
    case Site::CurvatureTransport: return "consistency.curvature-transport";
    case Site::TetraY: return "tetra.y-recovery";
    }
    return "?";
}

inline Site& active() {
    static Site s = Site::None;
    return s;
}

inline bool on(Site s) { return active() == s; }

/// Activates a mutation for the lifetime of the object.
class Scope {
public:
    explicit Scope(Site s) : prev_(active()) { active() = s; }
    ~Scope() { active() = prev_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

private:
    Site prev_;
};

} // namespace ldx::mutation
