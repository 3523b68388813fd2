#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace grwlab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seedable, splittable generator. Streams for parallel work are derived
/// from (master seed, stream index) so results do not depend on which
/// worker ran which stream.
///
/// Distribution sampling is written out here rather than delegated to
/// <random> distributions, whose algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    static Rng stream(std::uint64_t master_seed, std::uint64_t index) {
        return Rng(splitmix64(master_seed ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
    }

    Rng split(std::uint64_t index) const { return stream(seed_, index); }

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Exponential with the given rate (rate > 0).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Standard normal (Box-Muller, one value per call).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace grwlab
