#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "taseph/params.hpp"
#include "taseph/perturb.hpp"
#include "taseph/ring.hpp"
#include "taseph/rng.hpp"
#include "taseph/step.hpp"

namespace taseph::ballot {

// Cyclic ballot count: the number of indices j in {0..n-1} with
//   psi(j+r) - psi(j) < (m/n) r   for every r = 1..n,
// where psi are the prefix sums of the periodically extended sequence.
// Direct O(n^2) evaluation; this is the definition.

struct BallotCount {
    std::uint32_t count = 0;
    bool ambiguous = false;  // some comparison fell inside the float slack band
};

inline BallotCount ballot_count(std::span<const double> k, double m, double slack = 1e-12) {
    const std::size_t n = k.size();
    if (n == 0) throw std::invalid_argument("empty sequence");
    std::vector<double> psi(2 * n + 1, 0.0);
    double scale = std::fabs(m);
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const double v = k[i % n];
        if (v < 0.0) throw std::invalid_argument("sequence values must be non-negative");
        psi[i + 1] = psi[i] + v;
        scale = std::max(scale, psi[i + 1]);
    }
    if (!(m > psi[n])) throw std::invalid_argument("require m > psi(n)");
    const double band = slack * std::max(1.0, scale);
    const double ratio = m / static_cast<double>(n);

    BallotCount out;
    for (std::size_t j = 0; j < n; ++j) {
        bool ok = true;
        for (std::size_t r = 1; r <= n; ++r) {
            const double lhs = psi[j + r] - psi[j];
            const double rhs = ratio * static_cast<double>(r);
            if (std::fabs(lhs - rhs) <= band) out.ambiguous = true;
            if (!(lhs < rhs)) {
                ok = false;
                break;
            }
        }
        if (ok) ++out.count;
    }
    return out;
}

// Exact integer path: values scaled by a common denominator.
inline std::uint32_t ballot_count(std::span<const std::int64_t> k, std::int64_t m) {
    const std::size_t n = k.size();
    if (n == 0) throw std::invalid_argument("empty sequence");
    std::vector<std::int64_t> psi(2 * n + 1, 0);
    for (std::size_t i = 0; i < 2 * n; ++i) {
        if (k[i % n] < 0) throw std::invalid_argument("sequence values must be non-negative");
        psi[i + 1] = psi[i] + k[i % n];
    }
    if (!(m > psi[n])) throw std::invalid_argument("require m > psi(n)");

    std::uint32_t count = 0;
    const auto nn = static_cast<__int128>(n);
    for (std::size_t j = 0; j < n; ++j) {
        bool ok = true;
        for (std::size_t r = 1; r <= n; ++r) {
            const __int128 lhs = nn * (psi[j + r] - psi[j]);
            const __int128 rhs = static_cast<__int128>(m) * static_cast<__int128>(r);
            if (!(lhs < rhs)) {
                ok = false;
                break;
            }
        }
        if (ok) ++count;
    }
    return count;
}

// Lower bound ceil(n (1 - psi(n)/m)), exact in the integer path.
inline std::uint32_t ballot_bound(std::span<const std::int64_t> k, std::int64_t m) {
    std::int64_t psi_n = 0;
    for (auto v : k) {
        if (v < 0) throw std::invalid_argument("sequence values must be non-negative");
        psi_n += v;
    }
    if (!(m > psi_n)) throw std::invalid_argument("require m > psi(n)");
    const auto n = static_cast<__int128>(k.size());
    const __int128 num = n * (static_cast<__int128>(m) - psi_n);
    return static_cast<std::uint32_t>((num + m - 1) / m);  // ceil for positive values
}

inline std::uint32_t ballot_bound(std::span<const double> k, double m) {
    double psi_n = 0;
    for (auto v : k) {
        if (v < 0) throw std::invalid_argument("sequence values must be non-negative");
        psi_n += v;
    }
    if (!(m > psi_n)) throw std::invalid_argument("require m > psi(n)");
    const double x = static_cast<double>(k.size()) * (1.0 - psi_n / m);
    return static_cast<std::uint32_t>(std::ceil(x - 1e-12));
}

// Arrival-process encoding: drop every 0 that immediately follows a 1.
inline std::vector<std::uint8_t> collapse_holes(std::span<const std::uint8_t> seq) {
    if (seq.empty()) return {};
    if (seq.back() != 0) throw std::invalid_argument("sequence must end with 0");
    std::vector<std::uint8_t> out;
    out.reserve(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq[i] > 1) throw std::invalid_argument("sequence must be 0/1");
        if (seq[i] == 0 && i > 0 && seq[i - 1] == 1) continue;
        out.push_back(seq[i]);
    }
    return out;
}

// Explicit constant bounding the left-arrival survival event:
// delta2 = eps / ((1 - p_hat) + 2 eps) with p_hat = rho/(1-rho), eps = (p_hat - p)/3.
inline double survival_lower_bound_left(double rho, double p) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in (0,1]");
    if (!(rho > p / (1.0 + p))) throw std::invalid_argument("requires rho > h");
    if (!(rho < 0.5)) throw std::invalid_argument("requires rho < 1/2");
    const double p_hat = rho / (1.0 - rho);
    const double eps = (p_hat - p) / 3.0;
    return eps / ((1.0 - p_hat) + 2.0 * eps);
}

struct SurvivalResult {
    double p_survive = 0;
    double std_err = 0;
    std::uint32_t trials = 0;
    std::uint32_t survivors = 0;
    std::uint64_t horizon = 0;
};

namespace detail {

// Ideal start with near-uniform spacing: particle j at floor(j n / m).
inline RingState spread_ideal_state(const ModelParams& params) {
    std::vector<std::uint32_t> sites(params.m);
    for (std::uint32_t j = 0; j < params.m; ++j)
        sites[j] = static_cast<std::uint32_t>((static_cast<std::uint64_t>(j) * params.n) / params.m);
    return new_state(params, InitSpec::explicit_sites(std::move(sites)));
}

}  // namespace detail

// One trial: perturb an ideal state once, then run the unperturbed dynamics;
// success means a cluster was created and never dissolved within the horizon.
// A perturbation that forms no cluster counts as immediate disappearance.
inline SurvivalResult survival_experiment(const ModelParams& params, std::uint32_t trials,
                                          double horizon_factor = 1.0, std::uint32_t threads = 1) {
    if (params.variant != Variant::tasep_h)
        throw std::invalid_argument("survival_experiment runs the tasep_h variant");
    if (2 * params.m > params.n)
        throw std::invalid_argument("survival_experiment requires rho < 1/2 (ideal start must exist)");
    const double span = (1.0 - params.rho()) * static_cast<double>(params.n) - 4.0;
    const auto horizon = static_cast<std::uint64_t>(std::max(0.0, std::floor(horizon_factor * span)));

    const RingState start = detail::spread_ideal_state(params);

    auto run_chunk = [&](std::uint32_t begin, std::uint32_t end) -> std::uint32_t {
        std::uint32_t survived = 0;
        RingState s = start;
        StepScratch ws;
        for (std::uint32_t trial = begin; trial < end; ++trial) {
            s = start;
            ModelParams local = params;
            local.seed = rng::derive_seed(params.seed, 0x5u, trial);
            local.policy = Policy::none;
            rng::SlotRng g(local.seed, 0, rng::stream_perturb);
            const PerturbationRecord rec = apply_perturbation(s, g);
            if (!rec.created_cluster) continue;
            bool alive = true;
            for (std::uint64_t t = 0; t < horizon; ++t) {
                step_tasep_h(s, local, ws);
                if (!bits::has_adjacent_pair(s.occ, s.n)) {
                    alive = false;
                    break;
                }
            }
            if (alive) ++survived;
        }
        return survived;
    };

    std::uint32_t survivors = 0;
    if (threads <= 1) {
        survivors = run_chunk(0, trials);
    } else {
        std::vector<std::uint32_t> partial(threads, 0);
        std::vector<std::thread> pool;
        for (std::uint32_t w = 0; w < threads; ++w) {
            const std::uint32_t begin = static_cast<std::uint32_t>(static_cast<std::uint64_t>(trials) * w / threads);
            const std::uint32_t end = static_cast<std::uint32_t>(static_cast<std::uint64_t>(trials) * (w + 1) / threads);
            pool.emplace_back([&, w, begin, end] { partial[w] = run_chunk(begin, end); });
        }
        for (auto& th : pool) th.join();
        for (auto v : partial) survivors += v;
    }

    SurvivalResult out;
    out.trials = trials;
    out.survivors = survivors;
    out.horizon = horizon;
    out.p_survive = trials ? static_cast<double>(survivors) / trials : 0.0;
    out.std_err = trials ? std::sqrt(std::max(0.0, out.p_survive * (1.0 - out.p_survive)) / trials) : 0.0;
    return out;
}

}  // namespace taseph::ballot
