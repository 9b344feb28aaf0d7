#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "taseph/bits.hpp"
#include "taseph/params.hpp"
#include "taseph/ring.hpp"
#include "taseph/rng.hpp"

namespace taseph {

// Per-slot movement tally.  perturb_distance is filled in by the slot driver
// when a perturbation is applied in the same slot.
struct MoveRecord {
    std::uint32_t moved_free = 0;
    std::uint32_t moved_holdback = 0;
    std::uint32_t eligible_free = 0;
    std::uint32_t eligible_holdback = 0;
    std::uint32_t perturb_distance = 0;
};

// Reusable buffers so the hot loop never allocates.
struct StepScratch {
    std::vector<std::uint64_t> left, right, prob1, probp, movers, shifted, tmp_a, tmp_b;
    std::vector<std::uint32_t> perm;
    std::vector<std::uint8_t> fired;

    void prepare(std::uint32_t n) {
        const std::uint32_t W = bits::words_for(n);
        if (left.size() != W) {
            left.assign(W, 0);
            right.assign(W, 0);
            prob1.assign(W, 0);
            probp.assign(W, 0);
            movers.assign(W, 0);
            shifted.assign(W, 0);
            tmp_a.assign(W, 0);
            tmp_b.assign(W, 0);
        }
    }
};

namespace detail {

// Keep each set bit of `mask` with its site-keyed coin; result in `out`.
inline void bernoulli_subset(std::span<const std::uint64_t> mask, std::span<std::uint64_t> out,
                             std::uint64_t seed, std::uint64_t slot, rng::Coin coin) {
    for (std::uint32_t k = 0; k < mask.size(); ++k) {
        std::uint64_t x = mask[k];
        std::uint64_t kept = 0;
        if (coin.always) {
            kept = x;
        } else {
            const std::uint32_t base = k * 64u;
            while (x) {
                const std::uint32_t b = static_cast<std::uint32_t>(std::countr_zero(x));
                if (rng::site_word(seed, slot, base + b) < coin.threshold) kept |= 1ULL << b;
                x &= x - 1;
            }
        }
        out[k] = kept;
    }
}

// Parallel update shared by tasep_h / zero_range / slow_to_start: decisions
// read the frozen snapshot at t, all coins are drawn, then all moves apply.
// Each target site has a unique source, so the update is conflict-free.
inline MoveRecord step_exclusion(RingState& s, const ModelParams& params, StepScratch& ws, bool sts) {
    const std::uint32_t n = s.n;
    const std::uint32_t W = bits::words_for(n);
    ws.prepare(n);
    const std::uint64_t slot = s.t + 1;  // movement from t to t+1 is attributed to t+1

    bits::shift_up_ring(s.occ, ws.left, n);
    bits::shift_down_ring(s.occ, ws.right, n);

    for (std::uint32_t k = 0; k < W; ++k) {
        const std::uint64_t eligible = s.occ[k] & ~ws.right[k];
        std::uint64_t p1 = eligible & ~ws.left[k];
        std::uint64_t pp = eligible & ws.left[k];
        if (sts) {
            const std::uint64_t stopped = s.restart[k] & eligible;
            p1 &= ~stopped;
            pp |= stopped;
        }
        ws.prob1[k] = p1;
        ws.probp[k] = pp;
    }

    MoveRecord rec;
    rec.eligible_free = bits::popcount(ws.prob1);
    rec.eligible_holdback = bits::popcount(ws.probp);

    const rng::Coin coin_p = rng::make_coin(params.p);
    if (params.variant == Variant::zero_range && params.pi < 1.0) {
        bernoulli_subset(ws.prob1, ws.movers, params.seed, slot, rng::make_coin(params.pi));
    } else {
        for (std::uint32_t k = 0; k < W; ++k) ws.movers[k] = ws.prob1[k];
    }
    bernoulli_subset(ws.probp, ws.tmp_a, params.seed, slot, coin_p);

    std::uint32_t moved_p = 0, moved_1 = 0;
    for (std::uint32_t k = 0; k < W; ++k) {
        moved_1 += static_cast<std::uint32_t>(std::popcount(ws.movers[k]));
        moved_p += static_cast<std::uint32_t>(std::popcount(ws.tmp_a[k]));
        ws.movers[k] |= ws.tmp_a[k];
    }
    rec.moved_free = moved_1;
    rec.moved_holdback = moved_p;

    if (sts) {
        // A dissolving two-particle cluster flags its left particle in the
        // same slot, unless a particle simultaneously joins from the left.
        bits::shift_down_ring(ws.right, ws.tmp_a, n);  // tmp_a[i] = occ[i+2]
        bits::shift_down_ring(ws.movers, ws.tmp_b, n);  // tmp_b[i] = movers[i+1]
        for (std::uint32_t k = 0; k < W; ++k) {
            const std::uint64_t pair_left =
                s.occ[k] & ~ws.left[k] & ws.right[k] & ~ws.tmp_a[k];
            ws.tmp_b[k] &= pair_left;
        }
        bits::shift_up_ring(ws.movers, ws.tmp_a, n);
        bits::shift_up_ring(ws.tmp_a, ws.shifted, n);  // shifted[i] = movers[i-2]
        for (std::uint32_t k = 0; k < W; ++k)
            ws.tmp_b[k] &= ~ws.shifted[k];  // no simultaneous arrival at i-1
        for (std::uint32_t k = 0; k < W; ++k) s.restart[k] = (s.restart[k] & ~ws.movers[k]) | ws.tmp_b[k];
    }

    bits::shift_up_ring(ws.movers, ws.shifted, n);
    for (std::uint32_t k = 0; k < W; ++k) s.occ[k] = (s.occ[k] & ~ws.movers[k]) | ws.shifted[k];

    s.t = slot;
    return rec;
}

}  // namespace detail

inline MoveRecord step_tasep_h(RingState& s, const ModelParams& params, StepScratch& ws) {
    return detail::step_exclusion(s, params, ws, false);
}

inline MoveRecord step_zero_range(RingState& s, const ModelParams& params, StepScratch& ws) {
    return detail::step_exclusion(s, params, ws, false);
}

inline MoveRecord step_sts(RingState& s, const ModelParams& params, StepScratch& ws) {
    return detail::step_exclusion(s, params, ws, true);
}

// Random-priority contention round: a site fires (sends one particle right)
// iff it is non-empty and neither neighbor fired earlier in the scan.
inline MoveRecord step_csma(RingState& s, const ModelParams& params, StepScratch& ws) {
    const std::uint32_t n = s.n;
    const std::uint64_t slot = s.t + 1;
    rng::SlotRng g(params.seed, slot, rng::stream_csma);

    ws.perm.resize(n);
    std::iota(ws.perm.begin(), ws.perm.end(), 0u);
    for (std::uint32_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::uint32_t>(g.below(i + 1));
        std::swap(ws.perm[i], ws.perm[j]);
    }
    ws.fired.assign(n, 0);

    MoveRecord rec;
    for (std::uint32_t i = 0; i < n; ++i)
        if (s.counts[i] > 0) rec.eligible_free++;

    for (std::uint32_t r = 0; r < n; ++r) {
        const std::uint32_t site = ws.perm[r];
        if (s.counts[site] == 0) continue;
        const std::uint32_t left = site == 0 ? n - 1 : site - 1;
        const std::uint32_t right = site + 1 == n ? 0 : site + 1;
        if (ws.fired[left] || ws.fired[right]) continue;
        ws.fired[site] = 1;
        rec.moved_free++;
    }
    for (std::uint32_t site = 0; site < n; ++site) {
        if (!ws.fired[site]) continue;
        const std::uint32_t right = site + 1 == n ? 0 : site + 1;
        s.counts[site]--;
        s.counts[right]++;
    }
    s.t = slot;
    return rec;
}

inline MoveRecord step(RingState& s, const ModelParams& params, StepScratch& ws) {
    switch (params.variant) {
        case Variant::tasep_h: return step_tasep_h(s, params, ws);
        case Variant::zero_range: return step_zero_range(s, params, ws);
        case Variant::slow_to_start: return step_sts(s, params, ws);
        case Variant::csma: return step_csma(s, params, ws);
    }
    throw std::logic_error("unknown variant");
}

// Convenience overloads that own their scratch; fine outside hot loops.
inline MoveRecord step_tasep_h(RingState& s, const ModelParams& p) {
    StepScratch ws;
    return step_tasep_h(s, p, ws);
}
inline MoveRecord step_zero_range(RingState& s, const ModelParams& p) {
    StepScratch ws;
    return step_zero_range(s, p, ws);
}
inline MoveRecord step_sts(RingState& s, const ModelParams& p) {
    StepScratch ws;
    return step_sts(s, p, ws);
}
inline MoveRecord step_csma(RingState& s, const ModelParams& p) {
    StepScratch ws;
    return step_csma(s, p, ws);
}

}  // namespace taseph
