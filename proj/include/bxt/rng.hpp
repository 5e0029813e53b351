#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

namespace bxt {

// ============================================================================
// Seeded random streams
//
// Every source of randomness in the project is a named substream derived
// from one master seed, so results are identical no matter how many threads
// run the work. mt19937_64 is fully specified by the standard; the draw
// helpers below avoid std distributions, whose output is implementation
// defined.
// ============================================================================

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Child seed for substream `tag` of a parent stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= 0x2545f4914f6cdd1dULL * (tag + 1);
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

// Substream tags. Stage and tree tags are bases that the stage/tree index
// is added to.
namespace stream {
constexpr std::uint64_t split = 0x01;
constexpr std::uint64_t synth = 0x02;
constexpr std::uint64_t diagnose = 0x03;
constexpr std::uint64_t stage_base = 0x100;
constexpr std::uint64_t tree_base = 0x10000;
} // namespace stream

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Unbiased integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = gen_();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform draw strictly inside (lo, hi). Returns nullopt when no
    // representable double lies between lo and hi.
    std::optional<double> uniform_open(double lo, double hi) {
        if (!(lo < hi) || std::nextafter(lo, hi) >= hi) return std::nullopt;
        for (;;) {
            const double t = lo + uniform01() * (hi - lo);
            if (t > lo && t < hi) return t;
        }
    }

    // Standard normal via Box-Muller; the spare is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace bxt
