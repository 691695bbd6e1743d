#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace edenet {

// Deterministic random source. mt19937_64 has a standard-mandated output
// sequence, and all draws below are derived from it with fixed arithmetic,
// so streams are reproducible across platforms and compilers (the std::*
// distribution classes are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform in [0, n)
    int uniform_int(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

    // standard normal via Box-Muller, one deviate per call
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace edenet
