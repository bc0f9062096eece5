#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace asq {

// Deterministic random stream with portable output.
//
// The engine (std::mt19937_64) has a fully specified sequence, and all
// variate transforms below are hand-rolled, so a given seed yields the same
// doubles on every platform.  std::uniform_real_distribution and friends are
// implementation-defined and must not be used where reproducibility matters.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Independent child stream: splitmix64 scrambling of (seed, index) so
    // that streams for different shards/rounds are decorrelated.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; caches the second variate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double two_pi = 6.283185307179586476925286766559;
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(two_pi * u2);
        have_spare_ = true;
        return r * std::cos(two_pi * u2);
    }

    // Uniform integer in [0, n) by rejection on the top bits.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t mask = ~std::uint64_t{0};
        std::uint64_t limit = mask - mask % n;
        std::uint64_t x = eng_();
        while (x >= limit) x = eng_();
        return x % n;
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace asq
