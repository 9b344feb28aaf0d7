#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "taseph/params.hpp"

namespace taseph {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ExperimentKind { run, sweep, survival, zr_curve, fluid, snapshot };
enum class OutputFormat { csv, json };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::run: return "run";
        case ExperimentKind::sweep: return "sweep";
        case ExperimentKind::survival: return "survival";
        case ExperimentKind::zr_curve: return "zr_curve";
        case ExperimentKind::fluid: return "fluid";
        case ExperimentKind::snapshot: return "snapshot";
    }
    return "?";
}

inline const char* to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

// One experiment, fully resolved: every output embeds this so a run can be
// reproduced from its own header.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::run;

    std::uint32_t n = 1000;
    double rho = 0.25;
    double p = 0.5;
    double pi = 1.0;
    double lambda = 0.0;
    Variant variant = Variant::tasep_h;
    Policy policy = Policy::none;
    InitSpec::Kind init = InitSpec::Kind::uniform_random;

    std::uint64_t slots = 1000000;
    std::uint64_t burn_in = auto_sentinel;      // auto: max(10 n, 1e5), clamped below slots
    std::uint64_t sample_every = 0;             // auto: ~2048 samples
    std::uint32_t trials = 10000;               // survival
    double horizon_factor = 1.0;                // survival
    double fluid_time = 1.0;                    // fluid
    std::uint32_t fluid_samples = 4;            // fluid: intermediate profile dumps
    std::vector<double> grid;                   // sweep / zr_curve densities

    std::uint64_t seed = 1;
    std::uint32_t replicates = 1;
    std::uint32_t threads = 1;
    bool include_perturb_flux = true;

    std::string out;  // empty = stdout
    OutputFormat format = OutputFormat::csv;

    static constexpr std::uint64_t auto_sentinel = ~0ULL;

    ModelParams to_params(double rho_override = -1.0, std::uint64_t seed_override = 0) const {
        const double r = rho_override >= 0 ? rho_override : rho;
        return ModelParams::make(n, r, p, variant, policy, lambda, seed_override ? seed_override : seed, pi);
    }

    std::uint64_t resolved_burn_in() const {
        if (burn_in != auto_sentinel) return burn_in;
        std::uint64_t b = std::max<std::uint64_t>(10ull * n, 100000ull);
        if (b >= slots) b = slots / 2;
        return b;
    }

    std::uint64_t resolved_sample_every() const {
        if (sample_every != 0) return sample_every;
        const std::uint64_t window = slots - resolved_burn_in();
        return std::max<std::uint64_t>(1, window / 2048);
    }

    void validate() const {
        try {
            to_params();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (slots == 0) throw ConfigError("slots must be positive");
        if (burn_in != auto_sentinel && burn_in >= slots) throw ConfigError("slots must exceed burn_in");
        for (double g : grid)
            if (!(g > 0.0 && g < 1.0)) throw ConfigError("grid densities must lie in (0,1)");
        if ((kind == ExperimentKind::sweep || kind == ExperimentKind::zr_curve) && grid.empty())
            throw ConfigError("sweep/zr_curve needs a non-empty grid");
        if (kind == ExperimentKind::zr_curve && !(pi < 1.0))
            throw ConfigError("zr_curve needs pi < 1");
        if (kind == ExperimentKind::fluid && !(fluid_time > 0)) throw ConfigError("fluid_time must be positive");
        if (replicates == 0) throw ConfigError("replicates must be positive");
        if (threads == 0) throw ConfigError("threads must be positive");
        if (kind == ExperimentKind::survival) {
            if (variant != Variant::tasep_h) throw ConfigError("survival runs the tasep_h variant");
            if (!(rho < 0.5)) throw ConfigError("survival needs rho < 1/2");
            if (trials == 0) throw ConfigError("trials must be positive");
        }
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

template <class T>
inline T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    in >> out;
    if (in.fail() || !in.eof()) throw ConfigError("bad value for " + key + ": '" + value + "'");
    return out;
}

inline Variant parse_variant(const std::string& v) {
    if (v == "tasep_h") return Variant::tasep_h;
    if (v == "zero_range") return Variant::zero_range;
    if (v == "slow_to_start") return Variant::slow_to_start;
    if (v == "csma") return Variant::csma;
    throw ConfigError("unknown variant '" + v + "'");
}

inline Policy parse_policy(const std::string& v) {
    if (v == "none") return Policy::none;
    if (v == "A" || v == "a") return Policy::A;
    if (v == "I" || v == "i") return Policy::I;
    throw ConfigError("unknown policy '" + v + "'");
}

inline InitSpec::Kind parse_init(const std::string& v) {
    if (v == "uniform_random") return InitSpec::Kind::uniform_random;
    if (v == "single_cluster") return InitSpec::Kind::single_cluster;
    if (v == "equally_spaced") return InitSpec::Kind::equally_spaced;
    if (v == "mes") return InitSpec::Kind::mes;
    throw ConfigError("unknown init '" + v + "'");
}

inline ExperimentKind parse_kind(const std::string& v) {
    if (v == "run") return ExperimentKind::run;
    if (v == "sweep") return ExperimentKind::sweep;
    if (v == "survival") return ExperimentKind::survival;
    if (v == "zr_curve" || v == "zr-curve") return ExperimentKind::zr_curve;
    if (v == "fluid") return ExperimentKind::fluid;
    if (v == "snapshot") return ExperimentKind::snapshot;
    throw ConfigError("unknown kind '" + v + "'");
}

inline std::vector<double> parse_grid(const std::string& v) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_number<double>("grid", item));
    }
    return out;
}

inline bool parse_onoff(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ConfigError("bad value for " + key + ": '" + v + "' (want on/off)");
}

}  // namespace detail

// Flat key=value experiment description; '#' starts a comment.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_number;
    if (key == "kind") cfg.kind = detail::parse_kind(value);
    else if (key == "n") cfg.n = parse_number<std::uint32_t>(key, value);
    else if (key == "rho") cfg.rho = parse_number<double>(key, value);
    else if (key == "p") cfg.p = parse_number<double>(key, value);
    else if (key == "pi") cfg.pi = parse_number<double>(key, value);
    else if (key == "lambda") cfg.lambda = parse_number<double>(key, value);
    else if (key == "variant") cfg.variant = detail::parse_variant(value);
    else if (key == "policy") cfg.policy = detail::parse_policy(value);
    else if (key == "init") cfg.init = detail::parse_init(value);
    else if (key == "slots") cfg.slots = parse_number<std::uint64_t>(key, value);
    else if (key == "burn_in") cfg.burn_in = parse_number<std::uint64_t>(key, value);
    else if (key == "sample_every") cfg.sample_every = parse_number<std::uint64_t>(key, value);
    else if (key == "trials") cfg.trials = parse_number<std::uint32_t>(key, value);
    else if (key == "horizon_factor") cfg.horizon_factor = parse_number<double>(key, value);
    else if (key == "fluid_time") cfg.fluid_time = parse_number<double>(key, value);
    else if (key == "fluid_samples") cfg.fluid_samples = parse_number<std::uint32_t>(key, value);
    else if (key == "grid") cfg.grid = detail::parse_grid(value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "replicates") cfg.replicates = parse_number<std::uint32_t>(key, value);
    else if (key == "threads") cfg.threads = parse_number<std::uint32_t>(key, value);
    else if (key == "include_perturb_flux") cfg.include_perturb_flux = detail::parse_onoff(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "format") {
        if (value == "csv") cfg.format = OutputFormat::csv;
        else if (value == "json") cfg.format = OutputFormat::json;
        else throw ConfigError("unknown format '" + value + "'");
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

inline ExperimentConfig parse_config_stream(std::istream& in, ExperimentConfig base = {}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        apply_config_entry(base, key, value);
    }
    return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config_stream(in, std::move(base));
}

namespace detail {
inline std::string roundtrip(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace detail

// key=value echo of a resolved config; feeding these lines back through the
// parser reproduces the experiment.
inline std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg) {
    using detail::roundtrip;
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("kind", to_string(cfg.kind));
    kv.emplace_back("variant", to_string(cfg.variant));
    kv.emplace_back("policy", to_string(cfg.policy));
    kv.emplace_back("init", to_string(cfg.init));
    kv.emplace_back("n", std::to_string(cfg.n));
    kv.emplace_back("rho", roundtrip(cfg.rho));
    kv.emplace_back("p", roundtrip(cfg.p));
    kv.emplace_back("pi", roundtrip(cfg.pi));
    kv.emplace_back("lambda", roundtrip(cfg.lambda));
    kv.emplace_back("slots", std::to_string(cfg.slots));
    kv.emplace_back("burn_in", std::to_string(cfg.resolved_burn_in()));
    kv.emplace_back("sample_every", std::to_string(cfg.resolved_sample_every()));
    if (cfg.kind == ExperimentKind::survival) {
        kv.emplace_back("trials", std::to_string(cfg.trials));
        kv.emplace_back("horizon_factor", roundtrip(cfg.horizon_factor));
    }
    if (cfg.kind == ExperimentKind::fluid) {
        kv.emplace_back("fluid_time", roundtrip(cfg.fluid_time));
        kv.emplace_back("fluid_samples", std::to_string(cfg.fluid_samples));
    }
    if (!cfg.grid.empty()) {
        std::string g;
        for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
            if (i) g += ",";
            g += roundtrip(cfg.grid[i]);
        }
        kv.emplace_back("grid", g);
    }
    kv.emplace_back("seed", std::to_string(cfg.seed));
    kv.emplace_back("replicates", std::to_string(cfg.replicates));
    kv.emplace_back("include_perturb_flux", cfg.include_perturb_flux ? "on" : "off");
    kv.emplace_back("format", to_string(cfg.format));
    return kv;
}

}  // namespace taseph
