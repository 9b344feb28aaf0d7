#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "taseph/bits.hpp"
#include "taseph/params.hpp"
#include "taseph/rng.hpp"

namespace taseph {

// The simulated Markov chain state.  Exclusion variants use word-packed
// occupancy (64 sites per word); the CSMA variant uses per-site counts.
struct RingState {
    std::uint32_t n = 0;
    std::uint32_t m = 0;
    std::uint64_t t = 0;
    Variant variant = Variant::tasep_h;

    std::vector<std::uint64_t> occ;      // exclusion variants
    std::vector<std::uint64_t> restart;  // slow_to_start: stopped-particle flags, subset of occ
    std::vector<std::uint32_t> counts;   // csma

    bool occupied(std::uint32_t i) const { return bits::get(occ, i); }
    bool flagged(std::uint32_t i) const { return !restart.empty() && bits::get(restart, i); }

    std::uint32_t particle_total() const {
        if (variant == Variant::csma) {
            std::uint64_t s = 0;
            for (auto c : counts) s += c;
            return static_cast<std::uint32_t>(s);
        }
        return bits::popcount(occ);
    }
};

namespace detail {

inline void place(RingState& s, std::uint32_t site) { bits::set(s.occ, site); }

inline void init_uniform_random(RingState& s, std::uint64_t seed) {
    rng::SlotRng g(seed, 0, rng::stream_init);
    if (s.variant == Variant::csma) {
        for (std::uint32_t j = 0; j < s.m; ++j) s.counts[g.below(s.n)]++;
        return;
    }
    // selection sampling: m of n without replacement, single left-to-right pass
    std::uint32_t need = s.m;
    for (std::uint32_t i = 0; i < s.n && need > 0; ++i) {
        const std::uint64_t remaining = s.n - i;
        if (g.below(remaining) < need) {
            place(s, i);
            --need;
        }
    }
}

inline void init_single_cluster(RingState& s) {
    if (s.variant == Variant::csma) throw std::invalid_argument("single_cluster init needs an exclusion variant");
    for (std::uint32_t i = 0; i < s.m; ++i) place(s, i);
}

inline void init_equally_spaced(RingState& s) {
    if (s.variant == Variant::csma) {
        const std::uint32_t base = s.m / s.n, extra = s.m % s.n;
        for (std::uint32_t i = 0; i < s.n; ++i) s.counts[i] = base;
        for (std::uint32_t j = 0; j < extra; ++j)
            s.counts[static_cast<std::uint32_t>((static_cast<std::uint64_t>(j) * s.n) / extra)]++;
        return;
    }
    if (2 * s.m > s.n) throw std::invalid_argument("equally_spaced init requires m <= n/2");
    const std::uint32_t spacing = s.n / s.m;
    for (std::uint32_t j = 0; j < s.m; ++j) place(s, j * spacing);
}

// One cluster of ceil(tau* n) particles plus the rest spread at density h.
inline void init_mes(RingState& s, double p) {
    if (s.variant == Variant::csma) throw std::invalid_argument("mes init needs an exclusion variant");
    const double rho = static_cast<double>(s.m) / s.n;
    const double h = p / (1.0 + p);
    if (!(rho > h)) throw std::invalid_argument("mes init requires rho > h = p/(1+p)");
    const double tau = rho * (1.0 + p) - p;
    std::uint32_t c = static_cast<std::uint32_t>(std::ceil(tau * s.n - 1e-9));
    c = std::min(std::max<std::uint32_t>(c, 2u), s.m);
    for (std::uint32_t i = 0; i < c; ++i) place(s, i);
    const std::uint32_t sparse_particles = s.m - c;
    const std::uint32_t sparse_sites = s.n - c;
    if (sparse_particles == 0) return;
    if (sparse_sites < 2 * sparse_particles + 2)
        throw std::invalid_argument("mes init cannot spread the sparse interval at density h");
    // occupy c+1 .. n-2 leaving holes at both cluster flanks
    const std::uint64_t span = sparse_sites - 2;
    for (std::uint32_t j = 0; j < sparse_particles; ++j) {
        const std::uint32_t pos = c + 1 + static_cast<std::uint32_t>((static_cast<std::uint64_t>(j) * span) / sparse_particles);
        place(s, pos);
    }
}

inline void init_explicit(RingState& s, const std::vector<std::uint32_t>& sites) {
    if (s.variant == Variant::csma) {
        for (auto site : sites) {
            if (site >= s.n) throw std::invalid_argument("explicit site out of range");
            s.counts[site]++;
        }
        return;
    }
    if (sites.size() != s.m) throw std::invalid_argument("explicit init must list exactly m sites");
    for (auto site : sites) {
        if (site >= s.n) throw std::invalid_argument("explicit site out of range");
        if (bits::get(s.occ, site)) throw std::invalid_argument("explicit init lists a duplicate site");
        bits::set(s.occ, site);
    }
}

}  // namespace detail

inline RingState new_state(const ModelParams& params, const InitSpec& init) {
    params.validate();
    RingState s;
    s.n = params.n;
    s.m = params.m;
    s.variant = params.variant;
    if (params.variant == Variant::csma) {
        s.counts.assign(s.n, 0);
    } else {
        s.occ.assign(bits::words_for(s.n), 0);
        if (params.variant == Variant::slow_to_start) s.restart.assign(bits::words_for(s.n), 0);
    }
    switch (init.kind) {
        case InitSpec::Kind::uniform_random: detail::init_uniform_random(s, params.seed); break;
        case InitSpec::Kind::single_cluster: detail::init_single_cluster(s); break;
        case InitSpec::Kind::equally_spaced: detail::init_equally_spaced(s); break;
        case InitSpec::Kind::mes: detail::init_mes(s, params.p); break;
        case InitSpec::Kind::explicit_sites:
            if (params.variant != Variant::csma && init.sites.empty() && s.m > 0)
                throw std::invalid_argument("explicit init needs a site list");
            detail::init_explicit(s, init.sites);
            break;
    }
    return s;
}

// "Ideal" in the absorbing sense of the variant: no clusters, and for the
// slow-to-start variant additionally no stopped particles.
inline bool is_absorbing_state(const RingState& s) {
    if (s.variant == Variant::csma) return false;
    if (bits::has_adjacent_pair(s.occ, s.n)) return false;
    if (s.variant == Variant::slow_to_start) {
        for (auto w : s.restart)
            if (w) return false;
    }
    return true;
}

}  // namespace taseph
