#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

// Word-packed ring occupancy: site i lives in bit (i % 64) of word (i / 64).
// Bits at positions >= n in the last word are kept zero by every operation.

namespace taseph::bits {

inline std::uint32_t words_for(std::uint32_t n) { return (n + 63u) / 64u; }

// Mask of valid bits in the last word.
inline std::uint64_t tail_mask(std::uint32_t n) {
    const std::uint32_t r = n & 63u;
    return r == 0 ? ~0ULL : ((1ULL << r) - 1);
}

inline bool get(std::span<const std::uint64_t> w, std::uint32_t i) {
    return (w[i >> 6] >> (i & 63u)) & 1u;
}

inline void set(std::span<std::uint64_t> w, std::uint32_t i) { w[i >> 6] |= 1ULL << (i & 63u); }
inline void clear(std::span<std::uint64_t> w, std::uint32_t i) { w[i >> 6] &= ~(1ULL << (i & 63u)); }

inline std::uint32_t popcount(std::span<const std::uint64_t> w) {
    std::uint32_t c = 0;
    for (std::uint64_t x : w) c += static_cast<std::uint32_t>(std::popcount(x));
    return c;
}

// dst[i] = src[(i + n - 1) mod n]  (mask of left neighbors)
inline void shift_up_ring(std::span<const std::uint64_t> src, std::span<std::uint64_t> dst, std::uint32_t n) {
    const std::uint32_t W = words_for(n);
    const std::uint32_t r = ((n - 1) & 63u);  // bit position of site n-1 in last word
    const std::uint64_t wrap = (src[W - 1] >> r) & 1u;
    std::uint64_t carry = wrap;
    for (std::uint32_t k = 0; k < W; ++k) {
        const std::uint64_t s = src[k];
        dst[k] = (s << 1) | carry;
        carry = s >> 63;
    }
    dst[W - 1] &= tail_mask(n);
}

// dst[i] = src[(i + 1) mod n]  (mask of right neighbors)
inline void shift_down_ring(std::span<const std::uint64_t> src, std::span<std::uint64_t> dst, std::uint32_t n) {
    const std::uint32_t W = words_for(n);
    for (std::uint32_t k = 0; k + 1 < W; ++k) dst[k] = (src[k] >> 1) | (src[k + 1] << 63);
    dst[W - 1] = src[W - 1] >> 1;
    const std::uint32_t r = ((n - 1) & 63u);
    dst[W - 1] |= (src[0] & 1u) << r;
    dst[W - 1] &= tail_mask(n);
}

template <class F>
inline void for_each_set(std::span<const std::uint64_t> w, F&& f) {
    for (std::uint32_t k = 0; k < w.size(); ++k) {
        std::uint64_t x = w[k];
        while (x) {
            f(k * 64u + static_cast<std::uint32_t>(std::countr_zero(x)));
            x &= x - 1;
        }
    }
}

// Position of the k-th (0-based) set bit; n bits are valid.
inline std::uint32_t select_nth_set(std::span<const std::uint64_t> w, std::uint32_t k) {
    for (std::uint32_t wi = 0; wi < w.size(); ++wi) {
        std::uint64_t x = w[wi];
        const auto c = static_cast<std::uint32_t>(std::popcount(x));
        if (k >= c) {
            k -= c;
            continue;
        }
        while (true) {
            const std::uint32_t b = static_cast<std::uint32_t>(std::countr_zero(x));
            if (k == 0) return wi * 64u + b;
            --k;
            x &= x - 1;
        }
    }
    return 0xffffffffu;  // unreachable on valid input
}

inline std::uint32_t select_nth_clear(std::span<const std::uint64_t> w, std::uint32_t k, std::uint32_t n) {
    const std::uint32_t W = words_for(n);
    for (std::uint32_t wi = 0; wi < W; ++wi) {
        std::uint64_t x = ~w[wi];
        if (wi == W - 1) x &= tail_mask(n);
        const auto c = static_cast<std::uint32_t>(std::popcount(x));
        if (k >= c) {
            k -= c;
            continue;
        }
        while (true) {
            const std::uint32_t b = static_cast<std::uint32_t>(std::countr_zero(x));
            if (k == 0) return wi * 64u + b;
            --k;
            x &= x - 1;
        }
    }
    return 0xffffffffu;
}

// Any two ring-adjacent sites both occupied?
inline bool has_adjacent_pair(std::span<const std::uint64_t> occ, std::uint32_t n) {
    const std::uint32_t W = words_for(n);
    const std::uint32_t r = ((n - 1) & 63u);
    // within-word and across-word pairs
    for (std::uint32_t k = 0; k < W; ++k) {
        const std::uint64_t x = occ[k];
        if (x & (x >> 1)) return true;
        const std::uint64_t hi = (k + 1 < W) ? occ[k + 1] : 0;
        if ((x >> 63) & hi & 1u) return true;
    }
    // seam pair (n-1, 0)
    return ((occ[W - 1] >> r) & occ[0] & 1u) != 0;
}

}  // namespace taseph::bits
