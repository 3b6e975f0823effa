#pragma once

// Seedable randomness with a fixed, documented algorithm so runs are
// bit-reproducible across standard libraries: std::mt19937_64 for the stream
// (its output sequence is fixed by the standard) plus hand-written transforms
// for uniform and normal variates (the std:: distributions are
// implementation-defined).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace rotcert {

/// SplitMix64 finalizer. Used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for task `index` of stream `stream` under `master`. Pure function of
/// its arguments, so parallel tasks never share generator state.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index = 0) {
    return splitmix64(splitmix64(splitmix64(master) ^ stream) + index);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one variate per call, no caching).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) %
               n;
    }

  private:
    std::mt19937_64 engine_;
};

/// Named stream identifiers for derive_seed.
namespace streams {
inline constexpr std::uint64_t kNoise = 0x6e6f697365ULL;
inline constexpr std::uint64_t kShots = 0x73686f7473ULL;
inline constexpr std::uint64_t kTrain = 0x747261696eULL;
inline constexpr std::uint64_t kAttack = 0x61747461636bULL;
inline constexpr std::uint64_t kAudit = 0x6175646974ULL;
inline constexpr std::uint64_t kSweep = 0x7377656570ULL;
inline constexpr std::uint64_t kData = 0x64617461ULL;
}  // namespace streams

}  // namespace rotcert
