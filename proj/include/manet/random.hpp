#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace manet {

__extension__ typedef unsigned __int128 uint128;

inline std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// SplitMix64 generator. Independent streams come from hashing (seed, keys...) into the
// starting state, e.g. derive(seed, {kNodeStream, node_id}).
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t state = 0) : state_(state) {}

    static Stream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
    {
        std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
        for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x9e3779b97f4a7c15ULL));
        return Stream(h);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return next(); }

    std::uint64_t next()
    {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound), bound >= 1 (Lemire's multiply-shift with rejection).
    std::uint64_t below(std::uint64_t bound)
    {
        std::uint64_t x = next();
        uint128 m = static_cast<uint128>(x) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = next();
                m = static_cast<uint128>(x) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

// Stream-purpose tags so that derived streams never collide between subsystems.
enum StreamTag : std::uint64_t {
    kHomesStream = 1,
    kTrafficStream = 2,
    kNodeStream = 3,
    kArrivalStream = 4,
    kPlanStream = 5,
    kCellStream = 6,
    kOracleStream = 7,
};

}  // namespace manet
