#pragma once

// Seeded random streams with platform-independent variate transforms.
// std::mt19937_64 output is fixed by the standard; the <random> distributions
// are not, so uniform and exponential variates are derived here.

#include <cmath>
#include <cstdint>
#include <random>

namespace astrotimer {

enum class StreamId : std::uint64_t { PowerOn = 1, Loss = 2, Service = 3, Background = 4 };

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RandomStream {
public:
    RandomStream(std::uint64_t seed, StreamId stream)
        : engine_(splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL))) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace astrotimer
