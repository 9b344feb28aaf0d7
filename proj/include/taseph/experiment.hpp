#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "taseph/analytic.hpp"
#include "taseph/ballot.hpp"
#include "taseph/config.hpp"
#include "taseph/fluid.hpp"
#include "taseph/metrics.hpp"
#include "taseph/perturb.hpp"

namespace taseph {

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::min<double>(
        static_cast<double>(v.size()) - 1, std::max(0.0, std::ceil(q * v.size()) - 1)));
    return v[idx];
}

}  // namespace detail

// Post-burn-in summary of one trajectory.  Wall-clock numbers go to logs,
// never into serialized output, so identical configs serialize identically.
struct RunReport {
    std::uint32_t n = 0, m = 0;
    double rho_used = 0;
    std::uint64_t seed = 0;
    FluxEstimate flux;
    double fraction_ideal = 0;
    std::uint64_t first_ideal_slot = ~0ULL;
    double mean_largest_cluster = 0;  // scaled by n
    double max_largest_cluster = 0;
    double mean_num_clusters = 0;
    double p95_num_clusters = 0;
    std::optional<double> mes_median;
    std::optional<double> mes_p90;
    std::uint32_t mes_sample_count = 0;
    double final_instantaneous_flux = 0;
    double wall_seconds = 0;
    double slots_per_sec = 0;
};

struct RunResult {
    RunReport report;
    RingState final_state;
};

inline RunResult run_experiment(const ExperimentConfig& cfg, double rho_override = -1.0,
                                std::uint64_t seed_override = 0) {
    const ModelParams params = cfg.to_params(rho_override, seed_override);
    const auto t0 = std::chrono::steady_clock::now();

    Simulation sim(params, InitSpec{cfg.init, {}});
    const std::uint64_t burn = cfg.resolved_burn_in();
    const std::uint64_t every = cfg.resolved_sample_every();
    const std::uint64_t window = cfg.slots - burn;
    const bool exclusion = is_exclusion(params.variant);
    const bool mes_on = exclusion && params.rho() > params.h();
    const std::uint64_t mes_every = std::max<std::uint64_t>(every, std::max<std::uint64_t>(1, window / 256));

    FluxAccumulator acc(params.n, params.p, params.variant == Variant::csma ? 0.0 : params.pi,
                        cfg.include_perturb_flux);
    std::vector<double> largest, nclusters, mes_samples;
    std::uint64_t ideal_slots = 0;

    RunReport rep;
    rep.n = params.n;
    rep.m = params.m;
    rep.rho_used = params.rho();
    rep.seed = params.seed;

    for (std::uint64_t slot = 1; slot <= cfg.slots; ++slot) {
        const StepOutcome out = sim.step();
        if (out.ideal_after_move && rep.first_ideal_slot == ~0ULL) rep.first_ideal_slot = slot;
        if (slot <= burn) continue;
        acc.add(out.move);
        if (out.ideal_after_move) ++ideal_slots;
        const std::uint64_t k = slot - burn;
        if (exclusion && k % every == 0) {
            const ClusterStats cs = find_clusters(sim.state());
            largest.push_back(static_cast<double>(cs.max_length) / params.n);
            nclusters.push_back(static_cast<double>(cs.num_clusters));
        }
        if (mes_on && k % mes_every == 0) mes_samples.push_back(mes_distance(sim.state(), params));
    }

    rep.flux = acc.estimate({burn + 1, cfg.slots});
    rep.fraction_ideal = static_cast<double>(ideal_slots) / static_cast<double>(window);
    for (double v : largest) {
        rep.mean_largest_cluster += v;
        rep.max_largest_cluster = std::max(rep.max_largest_cluster, v);
    }
    if (!largest.empty()) rep.mean_largest_cluster /= static_cast<double>(largest.size());
    for (double v : nclusters) rep.mean_num_clusters += v;
    if (!nclusters.empty()) rep.mean_num_clusters /= static_cast<double>(nclusters.size());
    rep.p95_num_clusters = detail::percentile(nclusters, 0.95);
    if (!mes_samples.empty()) {
        rep.mes_median = detail::percentile(mes_samples, 0.5);
        rep.mes_p90 = detail::percentile(mes_samples, 0.9);
        rep.mes_sample_count = static_cast<std::uint32_t>(mes_samples.size());
    }
    if (exclusion) rep.final_instantaneous_flux = instantaneous_flux(sim.state(), params.p, params.pi);

    const auto t1 = std::chrono::steady_clock::now();
    rep.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    rep.slots_per_sec = rep.wall_seconds > 0 ? static_cast<double>(cfg.slots) / rep.wall_seconds : 0;
    return {rep, sim.state()};
}

struct SweepRow {
    double rho = 0;
    std::uint32_t replicate = 0;
    std::uint64_t seed = 0;
    RunReport report;
};

// Rows are independent trajectories; per-row seeds come from hashing the
// (grid index, replicate) key, so output is identical for any thread count.
inline std::vector<SweepRow> sweep_experiment(const ExperimentConfig& cfg) {
    const std::size_t rows = cfg.grid.size() * cfg.replicates;
    std::vector<SweepRow> out(rows);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= rows) return;
            const std::size_t gi = i / cfg.replicates;
            const auto rep = static_cast<std::uint32_t>(i % cfg.replicates);
            const double rho_i = cfg.grid[gi];
            const std::uint64_t seed_i = rng::derive_seed(cfg.seed, gi, rep);
            out[i] = {rho_i, rep, seed_i, run_experiment(cfg, rho_i, seed_i).report};
        }
    };
    const std::uint32_t nthreads = std::min<std::uint32_t>(cfg.threads, static_cast<std::uint32_t>(rows));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::uint32_t w = 0; w < nthreads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return out;
}

struct SurvivalReport {
    std::uint32_t n = 0, m = 0;
    double rho_used = 0;
    ballot::SurvivalResult result;
    std::optional<double> delta2;  // closed-form left-arrival bound when h < rho < 1/2
};

inline SurvivalReport survival_experiment_run(const ExperimentConfig& cfg) {
    ModelParams params = cfg.to_params();
    params.policy = Policy::none;
    SurvivalReport rep;
    rep.n = params.n;
    rep.m = params.m;
    rep.rho_used = params.rho();
    rep.result = ballot::survival_experiment(params, cfg.trials, cfg.horizon_factor, cfg.threads);
    if (params.rho() > params.h() && params.rho() < 0.5)
        rep.delta2 = ballot::survival_lower_bound_left(params.rho(), params.p);
    return rep;
}

struct FluidSample {
    double t = 0;
    fluid::FluidProfile profile;
};

struct FluidReport {
    std::vector<FluidSample> samples;
    double tau_integral = 0;
    bool any_frozen = false;
};

inline FluidReport fluid_experiment(const ExperimentConfig& cfg) {
    fluid::FluidProfile start;
    if (cfg.init == InitSpec::Kind::mes) {
        start = fluid::mes_profile(cfg.rho, cfg.p);
    } else if (cfg.init == InitSpec::Kind::single_cluster) {
        start.pieces = {{0.0, 1.0}};
        if (cfg.rho < 1.0) start.pieces.push_back({cfg.rho, 0.0});
        start.ell = 0.0;
        start.r = cfg.rho;
        start.has_cluster = true;
    } else {
        throw ConfigError("fluid kind supports init=single_cluster or init=mes");
    }
    fluid::FluidSimulator sim(start);
    sim.set_holdback(cfg.p);
    FluidReport rep;
    rep.samples.push_back({0.0, sim.profile()});
    const std::uint32_t k = std::max<std::uint32_t>(1, cfg.fluid_samples);
    for (std::uint32_t i = 1; i <= k; ++i) {
        const double target = cfg.fluid_time * i / k;
        sim.advance(target - sim.time());
        rep.samples.push_back({sim.time(), sim.profile()});
        rep.any_frozen = rep.any_frozen || sim.zero_length_frozen();
    }
    rep.tau_integral = sim.tau_integral();
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization.  CSV: '#'-prefixed config echo, then a header row, then
// RFC-4180 data rows ('.' decimal separator via the C locale-free printf path).

namespace csvio {

inline std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void config_header(std::ostream& os, const ExperimentConfig& cfg) {
    for (const auto& [k, v] : config_entries(cfg)) os << "# " << k << "=" << v << "\n";
}

}  // namespace csvio

inline void write_run_csv(std::ostream& os, const ExperimentConfig& cfg, const RunReport& r) {
    using detail::fmt;
    csvio::config_header(os, cfg);
    os << "n,m,rho,p,pi,lambda,variant,policy,init,seed,slots,burn_in,"
          "realized_flux,expected_flux,std_err,perturb_term,fraction_ideal,first_ideal_slot,"
          "mean_largest_cluster,max_largest_cluster,mean_num_clusters,p95_num_clusters,"
          "mes_median,mes_p90,final_instantaneous_flux\n";
    os << r.n << ',' << r.m << ',' << fmt(r.rho_used) << ',' << fmt(cfg.p) << ',' << fmt(cfg.pi) << ','
       << fmt(cfg.lambda) << ',' << to_string(cfg.variant) << ',' << to_string(cfg.policy) << ','
       << to_string(cfg.init) << ',' << r.seed << ',' << cfg.slots << ',' << cfg.resolved_burn_in() << ','
       << fmt(r.flux.realized) << ',' << fmt(r.flux.expected) << ',' << fmt(r.flux.std_err) << ','
       << fmt(r.flux.perturb_term) << ',' << fmt(r.fraction_ideal) << ','
       << (r.first_ideal_slot == ~0ULL ? std::string() : std::to_string(r.first_ideal_slot)) << ','
       << fmt(r.mean_largest_cluster) << ',' << fmt(r.max_largest_cluster) << ','
       << fmt(r.mean_num_clusters) << ',' << fmt(r.p95_num_clusters) << ','
       << (r.mes_median ? fmt(*r.mes_median) : std::string()) << ','
       << (r.mes_p90 ? fmt(*r.mes_p90) : std::string()) << ',' << fmt(r.final_instantaneous_flux) << "\n";
}

inline void write_sweep_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<SweepRow>& rows) {
    using detail::fmt;
    csvio::config_header(os, cfg);
    os << "rho,replicate,seed,realized_flux,expected_flux,std_err,perturb_term,fraction_ideal,"
          "mean_largest_cluster,p95_num_clusters,mes_median,phi_star,h,typical_flux\n";
    for (const auto& row : rows) {
        const double h = analytic::threshold_density(cfg.p);
        os << fmt(row.rho) << ',' << row.replicate << ',' << row.seed << ',' << fmt(row.report.flux.realized)
           << ',' << fmt(row.report.flux.expected) << ',' << fmt(row.report.flux.std_err) << ','
           << fmt(row.report.flux.perturb_term) << ',' << fmt(row.report.fraction_ideal) << ','
           << fmt(row.report.mean_largest_cluster) << ',' << fmt(row.report.p95_num_clusters) << ','
           << (row.report.mes_median ? fmt(*row.report.mes_median) : std::string()) << ','
           << fmt(analytic::phi_star(row.rho, cfg.p)) << ',' << fmt(h) << ','
           << fmt(analytic::typical_flux(row.rho, cfg.p)) << "\n";
    }
}

inline void write_survival_csv(std::ostream& os, const ExperimentConfig& cfg, const SurvivalReport& r) {
    using detail::fmt;
    csvio::config_header(os, cfg);
    os << "n,m,rho,p,trials,horizon,survivors,p_survive,std_err,delta2_lower_bound\n";
    os << r.n << ',' << r.m << ',' << fmt(r.rho_used) << ',' << fmt(cfg.p) << ',' << r.result.trials << ','
       << r.result.horizon << ',' << r.result.survivors << ',' << fmt(r.result.p_survive) << ','
       << fmt(r.result.std_err) << ',' << (r.delta2 ? fmt(*r.delta2) : std::string()) << "\n";
}

inline void write_zr_csv(std::ostream& os, const ExperimentConfig& cfg,
                         const std::vector<analytic::ZrCurvePoint>& pts) {
    using detail::fmt;
    csvio::config_header(os, cfg);
    os << "rho,gamma,pi,p,z_star,eta,v,phi,residual_fuga,residual_cubic\n";
    for (const auto& q : pts) {
        os << fmt(q.rho) << ',' << fmt(1.0 - q.rho) << ',' << fmt(cfg.pi) << ',' << fmt(cfg.p) << ','
           << fmt(q.z_star) << ',' << fmt(q.eta) << ',' << fmt(q.phi / q.rho) << ',' << fmt(q.phi) << ','
           << fmt(q.residual_fuga) << ',' << fmt(q.residual_cubic) << "\n";
    }
}

inline void write_fluid_csv(std::ostream& os, const ExperimentConfig& cfg, const FluidReport& r) {
    using detail::fmt;
    csvio::config_header(os, cfg);
    os << "# tau_integral=" << fmt(r.tau_integral) << "\n";
    os << "t,x,density,ell,r,tau,frozen\n";
    for (const auto& s : r.samples)
        for (const auto& piece : s.profile.pieces)
            os << fmt(s.t) << ',' << fmt(piece.x) << ',' << fmt(piece.density) << ',' << fmt(s.profile.ell)
               << ',' << fmt(s.profile.r) << ',' << fmt(s.profile.tau()) << ','
               << (s.profile.zero_length_frozen ? 1 : 0) << "\n";
}

// Per-site series x(i) * x(i+1): clusters render as runs of 1s.
inline void write_snapshot_csv(std::ostream& os, const ExperimentConfig& cfg, const RingState& s) {
    csvio::config_header(os, cfg);
    os << "site,occ,pair_product\n";
    for (std::uint32_t i = 0; i < s.n; ++i) {
        const int xi = s.occupied(i) ? 1 : 0;
        const int xj = s.occupied((i + 1) % s.n) ? 1 : 0;
        os << i << ',' << xi << ',' << (xi * xj) << "\n";
    }
}

}  // namespace taseph
