#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <string_view>

namespace dml {

/// Deterministic random source. Wraps mt19937_64 but does all
/// real-valued mapping explicitly so that streams are reproducible
/// bit-for-bit independent of the standard library's distribution
/// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). Lemire multiply-shift; bias is below
    /// 2^-64 per draw.
    std::size_t below(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    /// Standard normal via Box-Muller; caches the second variate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        // u1 = 0 would take log(0); nudge to the smallest representable draw
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Hierarchical seed derivation: jobs get seeds that depend only on
/// their identity (names and indices), never on scheduling order.
class SeedSequence {
public:
    explicit SeedSequence(std::uint64_t base) : state_(detail::splitmix64(base)) {}

    SeedSequence with(std::string_view name) const {
        SeedSequence s(*this);
        s.state_ = detail::splitmix64(s.state_ ^ detail::fnv1a(name));
        return s;
    }

    SeedSequence with(std::uint64_t index) const {
        SeedSequence s(*this);
        s.state_ = detail::splitmix64(s.state_ ^ index);
        return s;
    }

    std::uint64_t seed() const { return state_; }

private:
    std::uint64_t state_;
};

}  // namespace dml
