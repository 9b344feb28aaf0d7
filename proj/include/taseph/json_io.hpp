#pragma once

#include <ostream>

#include <json.hpp>

#include "taseph/experiment.hpp"

namespace taseph {

using ojson = nlohmann::ordered_json;

inline ojson config_json(const ExperimentConfig& cfg) {
    ojson j;
    for (const auto& [k, v] : config_entries(cfg)) j[k] = v;
    return j;
}

inline ojson report_json(const RunReport& r) {
    ojson j;
    j["n"] = r.n;
    j["m"] = r.m;
    j["rho"] = r.rho_used;
    j["seed"] = r.seed;
    j["realized_flux"] = r.flux.realized;
    j["expected_flux"] = r.flux.expected;
    j["std_err"] = r.flux.std_err;
    j["perturb_term"] = r.flux.perturb_term;
    j["window_begin"] = r.flux.window.begin;
    j["window_end"] = r.flux.window.end;
    j["fraction_ideal"] = r.fraction_ideal;
    if (r.first_ideal_slot != ~0ULL) j["first_ideal_slot"] = r.first_ideal_slot;
    j["mean_largest_cluster"] = r.mean_largest_cluster;
    j["max_largest_cluster"] = r.max_largest_cluster;
    j["mean_num_clusters"] = r.mean_num_clusters;
    j["p95_num_clusters"] = r.p95_num_clusters;
    if (r.mes_median) j["mes_median"] = *r.mes_median;
    if (r.mes_p90) j["mes_p90"] = *r.mes_p90;
    j["mes_sample_count"] = r.mes_sample_count;
    j["final_instantaneous_flux"] = r.final_instantaneous_flux;
    return j;
}

inline void write_run_json(std::ostream& os, const ExperimentConfig& cfg, const RunReport& r) {
    ojson j;
    j["config"] = config_json(cfg);
    j["report"] = report_json(r);
    os << j.dump(2) << "\n";
}

inline void write_sweep_json(std::ostream& os, const ExperimentConfig& cfg, const std::vector<SweepRow>& rows) {
    ojson j;
    j["config"] = config_json(cfg);
    j["rows"] = ojson::array();
    for (const auto& row : rows) {
        ojson rj = report_json(row.report);
        rj["rho"] = row.rho;
        rj["replicate"] = row.replicate;
        rj["phi_star"] = analytic::phi_star(row.rho, cfg.p);
        rj["h"] = analytic::threshold_density(cfg.p);
        rj["typical_flux"] = analytic::typical_flux(row.rho, cfg.p);
        j["rows"].push_back(std::move(rj));
    }
    os << j.dump(2) << "\n";
}

inline void write_survival_json(std::ostream& os, const ExperimentConfig& cfg, const SurvivalReport& r) {
    ojson j;
    j["config"] = config_json(cfg);
    j["n"] = r.n;
    j["m"] = r.m;
    j["rho"] = r.rho_used;
    j["trials"] = r.result.trials;
    j["horizon"] = r.result.horizon;
    j["survivors"] = r.result.survivors;
    j["p_survive"] = r.result.p_survive;
    j["std_err"] = r.result.std_err;
    if (r.delta2) j["delta2_lower_bound"] = *r.delta2;
    os << j.dump(2) << "\n";
}

inline void write_zr_json(std::ostream& os, const ExperimentConfig& cfg,
                          const std::vector<analytic::ZrCurvePoint>& pts) {
    ojson j;
    j["config"] = config_json(cfg);
    j["points"] = ojson::array();
    for (const auto& q : pts) {
        ojson pj;
        pj["rho"] = q.rho;
        pj["gamma"] = 1.0 - q.rho;
        pj["z_star"] = q.z_star;
        pj["eta"] = q.eta;
        pj["v"] = q.phi / q.rho;
        pj["phi"] = q.phi;
        pj["residual_fuga"] = q.residual_fuga;
        pj["residual_cubic"] = q.residual_cubic;
        j["points"].push_back(std::move(pj));
    }
    os << j.dump(2) << "\n";
}

inline void write_fluid_json(std::ostream& os, const ExperimentConfig& cfg, const FluidReport& r) {
    ojson j;
    j["config"] = config_json(cfg);
    j["tau_integral"] = r.tau_integral;
    j["any_frozen"] = r.any_frozen;
    j["samples"] = ojson::array();
    for (const auto& s : r.samples) {
        ojson sj;
        sj["t"] = s.t;
        sj["ell"] = s.profile.ell;
        sj["r"] = s.profile.r;
        sj["tau"] = s.profile.tau();
        sj["frozen"] = s.profile.zero_length_frozen;
        sj["pieces"] = ojson::array();
        for (const auto& piece : s.profile.pieces) sj["pieces"].push_back({piece.x, piece.density});
        j["samples"].push_back(std::move(sj));
    }
    os << j.dump(2) << "\n";
}

inline void write_snapshot_json(std::ostream& os, const ExperimentConfig& cfg, const RingState& s) {
    ojson j;
    j["config"] = config_json(cfg);
    j["occ"] = ojson::array();
    j["pair_product"] = ojson::array();
    for (std::uint32_t i = 0; i < s.n; ++i) {
        const int xi = s.occupied(i) ? 1 : 0;
        const int xj = s.occupied((i + 1) % s.n) ? 1 : 0;
        j["occ"].push_back(xi);
        j["pair_product"].push_back(xi * xj);
    }
    os << j.dump(2) << "\n";
}

// Dispatch on kind and format; returns log lines (timings) for stderr.
inline std::string execute_experiment(const ExperimentConfig& cfg, std::ostream& os) {
    cfg.validate();
    std::string log;
    switch (cfg.kind) {
        case ExperimentKind::run: {
            const RunResult res = run_experiment(cfg);
            if (cfg.format == OutputFormat::csv)
                write_run_csv(os, cfg, res.report);
            else
                write_run_json(os, cfg, res.report);
            log = "run: " + detail::fmt(res.report.wall_seconds) + " s, " +
                  detail::fmt(res.report.slots_per_sec) + " slots/s";
            break;
        }
        case ExperimentKind::snapshot: {
            const RunResult res = run_experiment(cfg);
            if (cfg.format == OutputFormat::csv)
                write_snapshot_csv(os, cfg, res.final_state);
            else
                write_snapshot_json(os, cfg, res.final_state);
            log = "snapshot: " + detail::fmt(res.report.wall_seconds) + " s";
            break;
        }
        case ExperimentKind::sweep: {
            const auto rows = sweep_experiment(cfg);
            if (cfg.format == OutputFormat::csv)
                write_sweep_csv(os, cfg, rows);
            else
                write_sweep_json(os, cfg, rows);
            log = "sweep: " + std::to_string(rows.size()) + " rows";
            break;
        }
        case ExperimentKind::survival: {
            const auto rep = survival_experiment_run(cfg);
            if (cfg.format == OutputFormat::csv)
                write_survival_csv(os, cfg, rep);
            else
                write_survival_json(os, cfg, rep);
            log = "survival: " + std::to_string(rep.result.trials) + " trials";
            break;
        }
        case ExperimentKind::zr_curve: {
            const auto pts = analytic::zr_flux_curve(cfg.grid, cfg.pi, cfg.p);
            if (cfg.format == OutputFormat::csv)
                write_zr_csv(os, cfg, pts);
            else
                write_zr_json(os, cfg, pts);
            log = "zr_curve: " + std::to_string(pts.size()) + " points";
            break;
        }
        case ExperimentKind::fluid: {
            const auto rep = fluid_experiment(cfg);
            if (cfg.format == OutputFormat::csv)
                write_fluid_csv(os, cfg, rep);
            else
                write_fluid_json(os, cfg, rep);
            log = "fluid: tau_integral=" + detail::fmt(rep.tau_integral);
            break;
        }
    }
    return log;
}

}  // namespace taseph
