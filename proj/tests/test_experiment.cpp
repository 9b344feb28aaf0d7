#include <catch2/catch.hpp>

#include <fstream>
#include <sstream>

#include "taseph/json_io.hpp"

using namespace taseph;

namespace {

ExperimentConfig small_run_config() {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::run;
    cfg.n = 120;
    cfg.rho = 0.4;
    cfg.p = 0.5;
    cfg.lambda = 1.0;
    cfg.policy = Policy::I;
    cfg.init = InitSpec::Kind::uniform_random;
    cfg.slots = 20000;
    cfg.burn_in = 2000;
    cfg.sample_every = 50;
    cfg.seed = 424242;
    return cfg;
}

std::string render(const ExperimentConfig& cfg) {
    std::ostringstream os;
    execute_experiment(cfg, os);
    return os.str();
}

}  // namespace

TEST_CASE("config parsing round-trips through its own echo") {
    auto cfg = small_run_config();
    std::ostringstream echo;
    for (const auto& [k, v] : config_entries(cfg)) echo << k << "=" << v << "\n";
    std::istringstream in(echo.str());
    const auto parsed = parse_config_stream(in);
    REQUIRE(parsed.kind == cfg.kind);
    REQUIRE(parsed.n == cfg.n);
    REQUIRE(parsed.rho == cfg.rho);
    REQUIRE(parsed.lambda == cfg.lambda);
    REQUIRE(parsed.policy == cfg.policy);
    REQUIRE(parsed.slots == cfg.slots);
    REQUIRE(parsed.burn_in == cfg.burn_in);
    REQUIRE(parsed.seed == cfg.seed);
}

TEST_CASE("config parser reports malformed input") {
    std::istringstream bad1("n 100\n");
    REQUIRE_THROWS_AS(parse_config_stream(bad1), ConfigError);
    std::istringstream bad2("frobnicate=3\n");
    REQUIRE_THROWS_AS(parse_config_stream(bad2), ConfigError);
    std::istringstream bad3("n=abc\n");
    REQUIRE_THROWS_AS(parse_config_stream(bad3), ConfigError);
    std::istringstream ok("# comment\n\nn=64   # trailing comment\nrho=0.25\n");
    const auto cfg = parse_config_stream(ok);
    REQUIRE(cfg.n == 64);
    REQUIRE(cfg.rho == 0.25);
}

TEST_CASE("config validation catches bad experiments") {
    auto cfg = small_run_config();
    cfg.burn_in = cfg.slots;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_run_config();
    cfg.kind = ExperimentKind::sweep;
    cfg.grid = {};
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    cfg.grid = {0.2, 1.4};
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_run_config();
    cfg.rho = 1.3;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("identical configs serialize byte-identically") {
    const auto cfg = small_run_config();
    REQUIRE(render(cfg) == render(cfg));
    auto json_cfg = cfg;
    json_cfg.format = OutputFormat::json;
    REQUIRE(render(json_cfg) == render(json_cfg));
}

TEST_CASE("sweep output is independent of thread count") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::sweep;
    cfg.n = 100;
    cfg.p = 0.5;
    cfg.policy = Policy::A;
    cfg.lambda = 1.0;
    cfg.grid = {0.2, 0.3, 0.4};
    cfg.replicates = 2;
    cfg.slots = 5000;
    cfg.burn_in = 500;
    cfg.seed = 99;
    cfg.threads = 1;
    const auto one = render(cfg);
    cfg.threads = 3;
    const auto three = render(cfg);
    REQUIRE(one == three);
}

TEST_CASE("sweep rows carry the analytic overlay") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::sweep;
    cfg.n = 80;
    cfg.p = 0.5;
    cfg.grid = {0.25};
    cfg.slots = 2000;
    cfg.burn_in = 200;
    const auto text = render(cfg);
    REQUIRE(text.find("phi_star,h,typical_flux") != std::string::npos);
    REQUIRE(text.find("0.375,0.333333333333,0.25") != std::string::npos);  // p(1-rho), h, rho
}

TEST_CASE("run CSV layout is stable") {
    const auto text = render(small_run_config());
    const std::string header =
        "n,m,rho,p,pi,lambda,variant,policy,init,seed,slots,burn_in,"
        "realized_flux,expected_flux,std_err,perturb_term,fraction_ideal,first_ideal_slot,"
        "mean_largest_cluster,max_largest_cluster,mean_num_clusters,p95_num_clusters,"
        "mes_median,mes_p90,final_instantaneous_flux";
    REQUIRE(text.find(header) != std::string::npos);
    REQUIRE(text.find("# kind=run") != std::string::npos);
    REQUIRE(text.find("# seed=424242") != std::string::npos);
}

TEST_CASE("run CSV matches the golden file") {
    std::ifstream golden(std::string(TASEPH_SOURCE_DIR) + "/tests/golden/run_small.csv",
                         std::ios::binary);
    REQUIRE(golden.good());
    std::ostringstream want;
    want << golden.rdbuf();
    REQUIRE(render(small_run_config()) == want.str());
}

TEST_CASE("snapshot emits the pair-product series") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::snapshot;
    cfg.n = 60;
    cfg.rho = 0.4;
    cfg.p = 0.5;
    cfg.policy = Policy::I;
    cfg.lambda = 1.0;
    cfg.slots = 4000;
    cfg.burn_in = 100;
    cfg.seed = 5;
    const auto text = render(cfg);
    REQUIRE(text.find("site,occ,pair_product") != std::string::npos);
    // n data rows
    std::size_t rows = 0;
    std::istringstream in(text);
    std::string line;
    bool past_header = false;
    while (std::getline(in, line)) {
        if (line.rfind("site,", 0) == 0) {
            past_header = true;
            continue;
        }
        if (past_header && !line.empty()) ++rows;
    }
    REQUIRE(rows == 60);
}

TEST_CASE("zero-range curve output matches the solver") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::zr_curve;
    cfg.pi = 0.9;
    cfg.p = 0.5;
    cfg.grid = {0.2, 0.4};
    const auto text = render(cfg);
    const auto sol = analytic::solve_fugacity(0.8, 0.9, 0.5);
    REQUIRE(text.find(detail::fmt(sol.phi)) != std::string::npos);
}

TEST_CASE("fluid experiment reports the tau integral") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::fluid;
    cfg.rho = 0.25;
    cfg.p = 0.5;
    cfg.init = InitSpec::Kind::single_cluster;
    cfg.fluid_time = 1.0;
    cfg.fluid_samples = 2;
    const auto text = render(cfg);
    REQUIRE(text.find("# tau_integral=0.0625") != std::string::npos);  // rho^2 / 2p
    REQUIRE(text.find("t,x,density,ell,r,tau,frozen") != std::string::npos);
}

TEST_CASE("fluid kind rejects unsupported inits") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::fluid;
    cfg.init = InitSpec::Kind::uniform_random;
    REQUIRE_THROWS_AS(render(cfg), ConfigError);
}

TEST_CASE("sweep flux tracks rho below threshold and p(1-rho) above") {
    for (const double p : {0.5, 0.25}) {
        ExperimentConfig cfg;
        cfg.kind = ExperimentKind::sweep;
        cfg.n = 400;
        cfg.p = p;
        cfg.policy = Policy::A;
        cfg.lambda = 1.0;
        cfg.init = InitSpec::Kind::uniform_random;
        cfg.grid = {0.15, 0.45};  // one point per phase, away from h
        cfg.slots = 500000;
        cfg.burn_in = 50000;
        cfg.seed = 606;
        const auto rows = sweep_experiment(cfg);
        for (const auto& row : rows) {
            const double want = analytic::typical_flux(row.rho, p);
            REQUIRE(row.report.flux.realized == Approx(want).epsilon(0.05));
        }
    }
}

TEST_CASE("csma runs through the experiment driver") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::run;
    cfg.variant = Variant::csma;
    cfg.n = 100;
    cfg.rho = 5.0;  // multi-occupancy density
    cfg.p = 0.5;
    cfg.slots = 20000;
    cfg.burn_in = 2000;
    cfg.seed = 8;
    const auto res = run_experiment(cfg);
    REQUIRE(res.report.m == 500);
    REQUIRE(res.report.flux.realized > 0.35);
    REQUIRE(res.report.flux.realized < 0.5);
    REQUIRE(res.final_state.particle_total() == 500);
}

TEST_CASE("survival experiment report includes the closed-form bound") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::survival;
    cfg.n = 100;
    cfg.rho = 0.4;
    cfg.p = 0.5;
    cfg.trials = 50;
    cfg.seed = 12;
    const auto text = render(cfg);
    REQUIRE(text.find("p_survive") != std::string::npos);
    REQUIRE(text.find("0.125") != std::string::npos);  // delta2(0.4, 0.5)
}
