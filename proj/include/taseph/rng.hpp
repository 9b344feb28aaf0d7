#pragma once

#include <cstdint>
#include <cmath>

// Counter-based randomness: every draw is a pure function of (seed, slot,
// stream, counter), so trajectories are reproducible independent of thread
// scheduling and sweeps can run rows in parallel without stream overlap.

namespace taseph::rng {

// Fixed stream ids carving up the per-slot key space.
enum Stream : std::uint64_t {
    stream_init    = 0x01,
    stream_coin    = 0x02,  // per-site movement coins
    stream_perturb = 0x03,
    stream_csma    = 0x04,
};

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t hash2(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(mix64(a + 0x9e3779b97f4a7c15ULL) ^ (b + 0x7f4a7c159e3779b9ULL));
}

inline constexpr std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
    return mix64(hash2(a, b) ^ (c + 0x6a09e667f3bcc909ULL));
}

// Uniform 64-bit word attached to site `i` at slot `t`.
inline constexpr std::uint64_t site_word(std::uint64_t seed, std::uint64_t slot, std::uint64_t site) noexcept {
    return hash3(seed ^ (stream_coin << 56), slot, site);
}

// Bernoulli(p) as a threshold test on a uniform 64-bit word.
struct Coin {
    std::uint64_t threshold = 0;
    bool always = false;

    constexpr bool flip(std::uint64_t u) const noexcept { return always || u < threshold; }
};

inline Coin make_coin(double p) {
    Coin c;
    if (p >= 1.0) {
        c.always = true;
    } else if (p > 0.0) {
        // exact on x86 long double (64-bit mantissa); p < 1 keeps this below 2^64
        c.threshold = static_cast<std::uint64_t>(std::ldexp(static_cast<long double>(p), 64));
    }
    return c;
}

// Sequential generator for a (seed, slot, stream) cell: splitmix64 walk from a
// hashed start.  Used for draws that are naturally ordered within a slot
// (initial sampling, perturbation picks, CSMA permutations).
class SlotRng {
public:
    SlotRng(std::uint64_t seed, std::uint64_t slot, std::uint64_t stream) noexcept
        : state_(hash3(seed ^ (stream << 56), slot, 0xa5a5a5a5a5a5a5a5ULL)) {}

    std::uint64_t next() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    // Unbiased uniform integer in [0, bound) via multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) noexcept {
        unsigned __int128 mul = static_cast<unsigned __int128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(mul);
        if (low < bound) {
            const std::uint64_t cutoff = (0 - bound) % bound;
            while (low < cutoff) {
                mul = static_cast<unsigned __int128>(next()) * bound;
                low = static_cast<std::uint64_t>(mul);
            }
        }
        return static_cast<std::uint64_t>(mul >> 64);
    }

    double unit() noexcept {  // [0,1) with 53 bits
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// Row/trial seeds for parallel sweeps: keyed by content, not execution order.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept {
    return hash3(base, a ^ 0xd1b54a32d192ed03ULL, b ^ 0x8cb92ba72f3d8dd7ULL);
}

}  // namespace taseph::rng
