// Experiment runner: single runs, density sweeps, survival experiments,
// zero-range analytic curves, fluid trajectories, and state snapshots.

#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "taseph/json_io.hpp"

namespace {

struct CliContext {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;  // in flag order
};

void add_common_options(CLI::App* sub, CliContext& ctx) {
    sub->add_option_function<std::string>(
           "--config", [&ctx](const std::string& v) { ctx.config_path = v; },
           "flat key=value config file; flags override its entries")
        ->option_text("PATH");
    auto kv = [&ctx](const char* key) {
        return [key, &ctx](const std::string& v) { ctx.overrides.emplace_back(key, v); };
    };
    sub->add_option_function<std::string>("--n", kv("n"), "sites on the ring");
    sub->add_option_function<std::string>("--rho", kv("rho"), "particle density");
    sub->add_option_function<std::string>("--p", kv("p"), "holdback move probability");
    sub->add_option_function<std::string>("--pi", kv("pi"), "free move probability (zero-range)");
    sub->add_option_function<std::string>("--lambda", kv("lambda"), "perturbation intensity");
    sub->add_option_function<std::string>("--variant", kv("variant"),
                                          "tasep_h | zero_range | slow_to_start | csma");
    sub->add_option_function<std::string>("--policy", kv("policy"), "none | A | I");
    sub->add_option_function<std::string>("--init", kv("init"),
                                          "uniform_random | single_cluster | equally_spaced | mes");
    sub->add_option_function<std::string>("--slots", kv("slots"), "time horizon in slots");
    sub->add_option_function<std::string>("--burn-in", kv("burn_in"), "slots discarded before statistics");
    sub->add_option_function<std::string>("--sample-every", kv("sample_every"), "cluster sampling stride");
    sub->add_option_function<std::string>("--trials", kv("trials"), "survival trials");
    sub->add_option_function<std::string>("--horizon-factor", kv("horizon_factor"),
                                          "survival horizon scale factor");
    sub->add_option_function<std::string>("--fluid-time", kv("fluid_time"), "fluid horizon (scaled time)");
    sub->add_option_function<std::string>("--fluid-samples", kv("fluid_samples"), "fluid profile dumps");
    sub->add_option_function<std::string>("--grid", kv("grid"), "comma-separated density grid");
    sub->add_option_function<std::string>("--seed", kv("seed"), "base RNG seed");
    sub->add_option_function<std::string>("--replicates", kv("replicates"), "replicates per grid point");
    sub->add_option_function<std::string>("--threads", kv("threads"), "worker threads for sweeps/survival");
    sub->add_option_function<std::string>("--include-perturb-flux", kv("include_perturb_flux"),
                                          "count perturbation distance in realized flux (on/off)");
    sub->add_option_function<std::string>("--out", kv("out"), "output path (default stdout)");
    sub->add_option_function<std::string>("--format", kv("format"), "csv | json");
}

int run_kind(const CliContext& ctx, taseph::ExperimentKind kind) {
    using namespace taseph;
    try {
        ExperimentConfig cfg;
        if (!ctx.config_path.empty()) cfg = load_config(ctx.config_path);
        for (const auto& [key, value] : ctx.overrides) apply_config_entry(cfg, key, value);
        cfg.kind = kind;
        cfg.validate();

        std::string log;
        if (!cfg.out.empty()) {
            std::ofstream out(cfg.out, std::ios::binary);
            if (!out) throw ConfigError("cannot open output path '" + cfg.out + "'");
            log = execute_experiment(cfg, out);
        } else {
            log = execute_experiment(cfg, std::cout);
        }
        if (!log.empty()) std::cerr << log << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"taseph: discrete-time exclusion processes with holdback on a ring"};
    app.require_subcommand(1);

    CliContext ctx;
    int rc = 0;

    struct SubDef {
        const char* name;
        const char* desc;
        taseph::ExperimentKind kind;
    };
    const SubDef defs[] = {
        {"run", "single trajectory with flux and cluster statistics", taseph::ExperimentKind::run},
        {"sweep", "fundamental diagram over a density grid", taseph::ExperimentKind::sweep},
        {"survival", "cluster-survival experiment from a perturbed ideal state",
         taseph::ExperimentKind::survival},
        {"zr-curve", "zero-range analytic flux curve", taseph::ExperimentKind::zr_curve},
        {"fluid", "deterministic fluid-limit trajectory", taseph::ExperimentKind::fluid},
        {"snapshot", "final-state x(i)*x(i+1) series", taseph::ExperimentKind::snapshot},
    };

    for (const auto& def : defs) {
        CLI::App* sub = app.add_subcommand(def.name, def.desc);
        add_common_options(sub, ctx);
        const auto kind = def.kind;
        sub->callback([&ctx, &rc, kind] { rc = run_kind(ctx, kind); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return rc;
}
