#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nudgeq {

// splitmix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class StreamPurpose : std::uint64_t {
    arrivals = 1,
    sizes = 2,
    coin = 3,
    general = 4,
};

/// Single-owner random source. Identical seed gives an identical sequence.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Independent stream for (seed, replication, purpose).
    static RandomStream derive(std::uint64_t seed, std::uint64_t replication,
                               StreamPurpose purpose = StreamPurpose::general)
    {
        const std::uint64_t mixed =
            splitmix64(seed ^ splitmix64(replication + 0x632be59bd9b4e019ULL)) ^
            splitmix64(static_cast<std::uint64_t>(purpose) * 0xd1b54a32d192ed03ULL);
        return RandomStream(mixed);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

    double normal() { return normal_(engine_); }

    double gamma(double shape)
    {
        return std::gamma_distribution<double>(shape, 1.0)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace nudgeq
