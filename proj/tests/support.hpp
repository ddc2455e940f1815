#pragma once

#include <random>

#include "ldx/lattice.hpp"

namespace ldx::prop {

/// Seeded source of random lattice data for property tests.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    double lognormal(double s = 0.3) { return std::exp(std::normal_distribution<double>(0.0, s)(rng)); }

    Field real_field(const Window& w, double lo = -1.0, double hi = 1.0) {
        return Field::real(w, [&](const Vec&) { return uniform(lo, hi); });
    }
    Field positive_field(const Window& w, double lo = 0.5, double hi = 1.5) { return real_field(w, lo, hi); }
    Field complex_field(const Window& w) {
        return Field::complex(w, [&](const Vec&) { return cplx(uniform(-1, 1), uniform(-1, 1)); });
    }
    Field phase_field(const Window& w) {
        return Field::complex(w, [&](const Vec&) { return std::polar(1.0, uniform(-M_PI, M_PI)); });
    }
    /// Operator with the given offsets and random coefficients on the full window.
    StencilOperator random_op(const Window& w, const std::vector<Vec>& offs, bool complex = false) {
        StencilOperator op(w);
        for (const auto& o : offs) op.set(o, complex ? complex_field(w) : real_field(w));
        return op;
    }
};

} // namespace ldx::prop
