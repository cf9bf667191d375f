#pragma once

#include <cmath>
#include <cstdint>

#include "aelstm/matrix.hpp"

namespace aelstm {

// Deterministic, platform-independent RNG. splitmix64 core with Box-Muller
// gaussians; the standard-library distributions are avoided on purpose so
// that seeded runs produce identical byte streams everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Stable seed derivation for sub-streams (episode x epoch, trial index, ...).
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline void fill_uniform(Matrix& m, Rng& rng, double lo, double hi) {
    for (std::size_t i = 0; i < m.size(); ++i) m.at_flat(i) = rng.uniform(lo, hi);
}

// Fan-in scaled uniform init for an affine weight (rows = fan_in).
inline void init_affine_weight(Matrix& w, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.rows()));
    fill_uniform(w, rng, -bound, bound);
}

}  // namespace aelstm
