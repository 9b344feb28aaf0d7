#include <catch2/catch.hpp>

#include <cmath>
#include <map>

#include "taseph/metrics.hpp"
#include "taseph/perturb.hpp"
#include "taseph/ring.hpp"

using namespace taseph;

namespace {

RingState two_site_state(std::uint64_t seed) {
    ModelParams params;
    params.n = 2;
    params.m = 1;
    params.p = 0.5;
    params.seed = seed;
    params.validate();
    return new_state(params, InitSpec::explicit_sites({0}));
}

}  // namespace

TEST_CASE("perturbation on a 2-ring: both destinations equiprobable") {
    std::map<std::uint32_t, int> dest;
    const int trials = 100000;
    for (int trial = 0; trial < trials; ++trial) {
        auto s = two_site_state(1);
        rng::SlotRng g(static_cast<std::uint64_t>(trial) + 1, 0, rng::stream_perturb);
        const auto rec = apply_perturbation(s, g);
        REQUIRE(rec.from_site == 0);
        dest[rec.to_site]++;
        REQUIRE(s.particle_total() == 1);
    }
    const double r0 = static_cast<double>(dest[0]) / trials;
    REQUIRE(std::fabs(r0 - 0.5) < 5.0 * std::sqrt(0.25 / trials));
}

TEST_CASE("destination is uniform over holes plus the vacated origin") {
    // 101000: removing a particle leaves 5 candidate destinations
    ModelParams params;
    params.n = 6;
    params.m = 2;
    params.p = 0.5;
    params.validate();
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> moves;
    const int trials = 300000;
    for (int trial = 0; trial < trials; ++trial) {
        auto s = new_state(params, InitSpec::explicit_sites({0, 2}));
        rng::SlotRng g(static_cast<std::uint64_t>(trial) + 7, 0, rng::stream_perturb);
        const auto rec = apply_perturbation(s, g);
        moves[{rec.from_site, rec.to_site}]++;
        REQUIRE(rec.right_distance == (rec.to_site + 6 - rec.from_site) % 6);
        REQUIRE(s.particle_total() == 2);
    }
    // 2 equally likely sources x 5 equally likely destinations
    for (const auto& [key, count] : moves) {
        const double rate = static_cast<double>(count) / trials;
        REQUIRE(std::fabs(rate - 0.1) < 4.0 * std::sqrt(0.1 * 0.9 / trials));
    }
    REQUIRE(moves.size() == 10);
}

TEST_CASE("relocation next to a particle reports a created cluster") {
    ModelParams params;
    params.n = 8;
    params.m = 2;
    params.p = 0.5;
    params.validate();
    bool saw_created = false, saw_free = false;
    for (int trial = 0; trial < 200 && !(saw_created && saw_free); ++trial) {
        auto s = new_state(params, InitSpec::explicit_sites({0, 4}));
        rng::SlotRng g(static_cast<std::uint64_t>(trial) + 3, 0, rng::stream_perturb);
        const auto rec = apply_perturbation(s, g);
        const auto cs = find_clusters(s);
        if (rec.created_cluster) {
            saw_created = true;
            REQUIRE(cs.num_clusters == 1);
        } else {
            saw_free = true;
            REQUIRE(cs.is_ideal);
        }
    }
    REQUIRE(saw_created);
    REQUIRE(saw_free);
}

TEST_CASE("a perturbation changes the cluster count by at most two") {
    for (std::uint64_t seed = 1; seed <= 400; ++seed) {
        const auto params = ModelParams::make(64, 0.5, 0.5, Variant::tasep_h, Policy::none, 0, seed);
        auto s = new_state(params, InitSpec::uniform_random());
        const auto before = find_clusters(s).num_clusters;
        rng::SlotRng g(seed, 1, rng::stream_perturb);
        apply_perturbation(s, g);
        const auto after = find_clusters(s).num_clusters;
        REQUIRE(static_cast<int>(after) - static_cast<int>(before) <= 2);
    }
}

TEST_CASE("policy none never perturbs") {
    auto params = ModelParams::make(50, 0.2, 0.5, Variant::tasep_h, Policy::none, 5.0, 7);
    Simulation sim(params, InitSpec::equally_spaced());
    for (int t = 0; t < 2000; ++t) REQUIRE_FALSE(sim.step().perturbation.has_value());
}

TEST_CASE("policy A fires only at post-movement ideal states") {
    auto params = ModelParams::make(40, 0.45, 0.5, Variant::tasep_h, Policy::A, 40.0, 3);
    Simulation sim(params, InitSpec::single_cluster());
    int fired_at_cluster = 0;
    for (int t = 0; t < 4000; ++t) {
        const auto out = sim.step();
        if (out.perturbation && !out.ideal_after_move) ++fired_at_cluster;
    }
    REQUIRE(fired_at_cluster == 0);
}

TEST_CASE("policy I fires at rate lambda/n regardless of state") {
    const double lambda = 1.0;
    const std::uint32_t n = 1000;
    auto params = ModelParams::make(n, 0.25, 0.5, Variant::tasep_h, Policy::I, lambda, 99);
    Simulation sim(params, InitSpec::uniform_random());
    std::uint64_t perturbs = 0;
    const std::uint64_t slots = 1000000;
    for (std::uint64_t t = 0; t < slots; ++t)
        if (sim.step().perturbation) ++perturbs;
    const double expect = static_cast<double>(slots) * lambda / n;  // Binomial mean
    REQUIRE(std::fabs(static_cast<double>(perturbs) - expect) < 4.0 * std::sqrt(expect));
}

TEST_CASE("under policy A the cluster count is monotone between ideal visits") {
    auto params = ModelParams::make(200, 0.4, 0.5, Variant::tasep_h, Policy::A, 30.0, 17);
    Simulation sim(params, InitSpec::uniform_random());
    std::uint32_t prev = find_clusters(sim.state()).num_clusters;
    bool prev_ideal = false;
    for (int t = 0; t < 4000; ++t) {
        const auto out = sim.step();
        const auto cur = find_clusters(sim.state()).num_clusters;
        if (!prev_ideal && !out.perturbation) REQUIRE(cur <= prev);
        prev = cur;
        prev_ideal = out.ideal_after_move;
    }
}

TEST_CASE("excluding the vacated origin removes the self-relocation") {
    for (int trial = 0; trial < 2000; ++trial) {
        auto s = two_site_state(1);
        rng::SlotRng g(static_cast<std::uint64_t>(trial) + 11, 0, rng::stream_perturb);
        const auto rec = apply_perturbation(s, g, /*vacated_is_candidate=*/false);
        REQUIRE(rec.to_site != rec.from_site);  // only the true hole remains
        REQUIRE(rec.to_site == 1);
    }
    // larger ring: destination law stays uniform over the n - m real holes
    ModelParams params;
    params.n = 6;
    params.m = 2;
    params.p = 0.5;
    params.validate();
    for (int trial = 0; trial < 2000; ++trial) {
        auto s = new_state(params, InitSpec::explicit_sites({0, 2}));
        rng::SlotRng g(static_cast<std::uint64_t>(trial) + 31, 0, rng::stream_perturb);
        const auto rec = apply_perturbation(s, g, false);
        REQUIRE(rec.to_site != rec.from_site);
        REQUIRE(s.particle_total() == 2);
    }
}

TEST_CASE("perturbation requires both a particle and a hole") {
    ModelParams params;
    params.n = 4;
    params.m = 4;
    params.p = 0.5;
    params.validate();
    auto s = new_state(params, InitSpec::explicit_sites({0, 1, 2, 3}));
    rng::SlotRng g(1, 0, rng::stream_perturb);
    REQUIRE_THROWS_AS(apply_perturbation(s, g), std::invalid_argument);
}
