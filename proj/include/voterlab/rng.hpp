#pragma once

// Platform-independent random numbers.
//
// The engine is xoshiro256** (Blackman & Vigna), seeded through SplitMix64.
// Distributions are implemented here rather than taken from <random> because
// the standard distributions are implementation-defined and would break
// bit-for-bit replay across standard libraries.

#include <array>
#include <cstddef>
#include <cmath>
#include <cstdint>
#include <limits>

namespace voterlab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept {
        // Successive SplitMix64 outputs; never all zero.
        for (std::size_t i = 0; i < state_.size(); ++i) {
            state_[i] = splitmix64(seed + i * 0x9e3779b97f4a7c15ULL);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Exponential with the given rate (> 0).
    double exponential(double rate) noexcept {
        // 1 - uniform() lies in (0, 1], so the logarithm is finite.
        return -std::log1p(-uniform()) / rate;
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Uniform integer in [0, bound), bound > 0 (Lemire's nearly-divisionless method).
    std::uint64_t below(std::uint64_t bound) noexcept {
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    const std::array<std::uint64_t, 4>& state() const noexcept { return state_; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

/// Independent stream for one trial: a pure function of (master_seed, indices...).
inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t trial_index, std::uint64_t row_index = 0) noexcept {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ (row_index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
    h = splitmix64(h ^ (trial_index * 0xa0761d6478bd642fULL + 0xe7037ed1a0b428dbULL));
    return Rng(h);
}

}  // namespace voterlab
