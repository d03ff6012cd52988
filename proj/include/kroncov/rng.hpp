#pragma once

#include <cstdint>
#include <random>

namespace kroncov {

// splitmix64 finalizer, used to derive independent substreams from
// (seed, index...) tuples so parallel trials are schedule-independent.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ b);
}

template <typename... Rest>
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, Rest... rest) {
    return mix64(mix64(a, b), static_cast<std::uint64_t>(rest)...);
}

// Deterministic Gaussian/uniform source. mt19937_64 output is fixed by the
// standard and the normal transform is hand-rolled (Box-Muller), so streams
// are bit-reproducible across platforms, unlike std::normal_distribution.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {
        // 53 random bits in (0, 1]
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    // uniform integer in [0, bound) via rejection, bound > 0
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace kroncov
