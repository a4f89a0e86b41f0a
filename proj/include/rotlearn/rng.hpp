#pragma once

#include <cstdint>
#include <random>

namespace rotlearn {

/// splitmix64 step. Used to derive independent substream seeds; the output
/// for a given input is fixed by construction, not by library internals.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d4ecb549bb25b1ULL;
    return x ^ (x >> 31);
}

/// Seed for sample index i of a run seeded with `seed`. Iterations drawn from
/// per-index substreams are reproducible independent of execution order.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t i) {
    return splitmix64(seed ^ splitmix64(i + 1));
}

/// Deterministic RNG: mt19937_64 (bit-exact per the standard) with hand-rolled
/// uniform and Gaussian transforms. std::normal_distribution is implementation
/// defined, so Box-Muller is done here to keep streams identical everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; second value cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rotlearn
