#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "taseph/analytic.hpp"
#include "taseph/bits.hpp"
#include "taseph/ring.hpp"
#include "taseph/step.hpp"

namespace taseph {

struct Cluster {
    std::uint32_t left_edge = 0;
    std::uint32_t right_edge = 0;
    std::uint32_t length = 0;
};

struct ClusterStats {
    std::vector<Cluster> clusters;  // maximal occupied runs of length >= 2
    std::uint32_t num_clusters = 0;
    std::uint32_t max_length = 0;
    std::uint32_t total_clustered_particles = 0;
    bool is_ideal = true;
};

// Exact maximal-run decomposition; runs wrap across the seam n-1 -> 0.
inline ClusterStats find_clusters(const RingState& s) {
    if (s.variant == Variant::csma) throw std::invalid_argument("find_clusters needs an exclusion variant");
    ClusterStats out;
    const std::uint32_t n = s.n;
    if (s.m == n) {  // no holes: the whole ring is one run
        out.clusters.push_back({0, n - 1, n});
        out.num_clusters = 1;
        out.max_length = n;
        out.total_clustered_particles = n;
        out.is_ideal = false;
        return out;
    }
    const std::uint32_t W = bits::words_for(n);
    std::vector<std::uint64_t> left(W), starts(W);
    bits::shift_up_ring(s.occ, left, n);
    for (std::uint32_t k = 0; k < W; ++k) starts[k] = s.occ[k] & ~left[k];

    bits::for_each_set(starts, [&](std::uint32_t s0) {
        std::uint32_t len = 0;
        std::uint32_t i = s0;
        while (bits::get(s.occ, i)) {  // terminates: at least one hole exists
            ++len;
            i = (i + 1 == n) ? 0 : i + 1;
        }
        if (len >= 2) {
            const std::uint32_t right = (s0 + len - 1) % n;
            out.clusters.push_back({s0, right, len});
            out.max_length = std::max(out.max_length, len);
            out.total_clustered_particles += len;
        }
    });
    out.num_clusters = static_cast<std::uint32_t>(out.clusters.size());
    out.is_ideal = out.clusters.empty();
    return out;
}

// Expected per-site movement this slot, read from the current snapshot:
// (pi * |free-eligible| + p * |holdback-eligible|) / n.
inline double instantaneous_flux(const RingState& s, double p, double pi) {
    if (s.variant == Variant::csma) throw std::invalid_argument("instantaneous_flux needs an exclusion variant");
    const std::uint32_t n = s.n;
    const std::uint32_t W = bits::words_for(n);
    std::vector<std::uint64_t> left(W), right(W);
    bits::shift_up_ring(s.occ, left, n);
    bits::shift_down_ring(s.occ, right, n);
    std::uint32_t ef = 0, eh = 0;
    for (std::uint32_t k = 0; k < W; ++k) {
        const std::uint64_t eligible = s.occ[k] & ~right[k];
        std::uint64_t p1 = eligible & ~left[k];
        std::uint64_t pp = eligible & left[k];
        if (!s.restart.empty()) {
            const std::uint64_t stopped = s.restart[k] & eligible;
            p1 &= ~stopped;
            pp |= stopped;
        }
        ef += static_cast<std::uint32_t>(std::popcount(p1));
        eh += static_cast<std::uint32_t>(std::popcount(pp));
    }
    return (pi * ef + p * eh) / static_cast<double>(n);
}

struct SlotWindow {
    std::uint64_t begin = 0;  // first accumulated slot
    std::uint64_t end = 0;    // last accumulated slot
};

struct FluxEstimate {
    SlotWindow window;
    double realized = 0.0;      // mean realized moves per site per slot
    double expected = 0.0;      // mean instantaneous expected flux
    double perturb_term = 0.0;  // mean perturbation distance per site per slot
    double std_err = 0.0;       // standard error of realized
};

// Streaming accumulator over MoveRecords; the span-based accumulate() below
// is the one-shot convenience wrapper.
class FluxAccumulator {
public:
    FluxAccumulator(std::uint32_t n, double p, double pi, bool include_perturb = true)
        : n_(n), p_(p), pi_(pi), include_perturb_(include_perturb) {}

    void add(const MoveRecord& mr) {
        const double r =
            (static_cast<double>(mr.moved_free) + mr.moved_holdback +
             (include_perturb_ ? static_cast<double>(mr.perturb_distance) : 0.0)) /
            n_;
        const double e = (pi_ * mr.eligible_free + p_ * mr.eligible_holdback) / n_;
        sum_r_ += r;
        sum_r2_ += r * r;
        sum_e_ += e;
        sum_pert_ += static_cast<double>(mr.perturb_distance) / n_;
        ++count_;
    }

    std::uint64_t count() const { return count_; }

    FluxEstimate estimate(SlotWindow window = {}) const {
        if (count_ == 0) throw std::invalid_argument("flux estimate over an empty window");
        FluxEstimate est;
        est.window = window;
        const double k = static_cast<double>(count_);
        est.realized = sum_r_ / k;
        est.expected = sum_e_ / k;
        est.perturb_term = sum_pert_ / k;
        const double var = std::max(0.0, sum_r2_ / k - est.realized * est.realized);
        est.std_err = std::sqrt(var / k);
        return est;
    }

private:
    double n_;
    double p_, pi_;
    bool include_perturb_;
    std::uint64_t count_ = 0;
    double sum_r_ = 0, sum_r2_ = 0, sum_e_ = 0, sum_pert_ = 0;
};

inline FluxEstimate accumulate(std::span<const MoveRecord> series, std::uint32_t n, double p, double pi,
                               bool include_perturb = true) {
    FluxAccumulator acc(n, p, pi, include_perturb);
    for (const auto& mr : series) acc.add(mr);
    return acc.estimate({0, series.empty() ? 0 : series.size() - 1});
}

// Max-norm distance from the state's scaled cumulative-mass profile to the
// ideal condensed profile (slope 1 over tau*, slope h elsewhere), minimized
// over the n discrete rotations.
inline double mes_distance(const RingState& s, const ModelParams& params) {
    if (s.variant == Variant::csma) throw std::invalid_argument("mes_distance needs an exclusion variant");
    const double rho = params.rho();
    const double h = params.h();
    if (!(rho > h)) throw std::invalid_argument("mes_distance requires rho > h");
    const double tau = analytic::tau_star(rho, params.p);

    const std::uint32_t n = s.n;
    std::vector<std::uint32_t> prefix(2 * n + 1);
    prefix[0] = 0;
    for (std::uint32_t i = 0; i < 2 * n; ++i)
        prefix[i + 1] = prefix[i] + (s.occupied(i % n) ? 1u : 0u);

    // reference cumulative, scaled by n
    std::vector<double> ref(n + 1);
    for (std::uint32_t k = 0; k <= n; ++k) {
        const double x = static_cast<double>(k) / n;
        ref[k] = n * (x <= tau ? x : tau + h * (x - tau));
    }

    double best = 1e300;
    for (std::uint32_t shift = 0; shift < n; ++shift) {
        const std::uint32_t base = prefix[shift];
        double worst = 0.0;
        for (std::uint32_t k = 0; k <= n; ++k) {
            const double d = std::fabs(static_cast<double>(prefix[shift + k] - base) - ref[k]);
            if (d > worst) {
                worst = d;
                if (worst >= best) break;
            }
        }
        best = std::min(best, worst);
    }
    return best / n;
}

}  // namespace taseph
