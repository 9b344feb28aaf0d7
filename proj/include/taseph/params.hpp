#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace taseph {

enum class Variant { tasep_h, zero_range, slow_to_start, csma };
enum class Policy { none, A, I };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::tasep_h: return "tasep_h";
        case Variant::zero_range: return "zero_range";
        case Variant::slow_to_start: return "slow_to_start";
        case Variant::csma: return "csma";
    }
    return "?";
}

inline const char* to_string(Policy p) {
    switch (p) {
        case Policy::none: return "none";
        case Policy::A: return "A";
        case Policy::I: return "I";
    }
    return "?";
}

inline bool is_exclusion(Variant v) { return v != Variant::csma; }

// Particle count for density rho on n sites: ceil(rho*n), snapped so that an
// intended-integer rho*n is not bumped up by representation error.
inline std::uint32_t particle_count(std::uint32_t n, double rho) {
    const double x = rho * static_cast<double>(n);
    return static_cast<std::uint32_t>(std::ceil(x - 1e-9));
}

// One experiment's full deterministic identity.
struct ModelParams {
    std::uint32_t n = 0;
    std::uint32_t m = 0;       // particles
    double p = 0.5;            // holdback move probability, rule (c)
    double pi = 1.0;           // free move probability (zero-range; 1 for tasep_h)
    double lambda = 0.0;       // perturbation intensity; per-slot probability lambda/n
    Variant variant = Variant::tasep_h;
    Policy policy = Policy::none;
    std::uint64_t seed = 1;

    double rho() const { return static_cast<double>(m) / static_cast<double>(n); }
    double h() const { return p / (1.0 + p); }

    static ModelParams make(std::uint32_t n, double rho, double p, Variant variant = Variant::tasep_h,
                            Policy policy = Policy::none, double lambda = 0.0, std::uint64_t seed = 1,
                            double pi = 1.0) {
        ModelParams out;
        out.n = n;
        out.m = particle_count(n, rho);
        out.p = p;
        out.pi = pi;
        out.lambda = lambda;
        out.variant = variant;
        out.policy = policy;
        out.seed = seed;
        out.validate();
        return out;
    }

    void validate() const {
        if (n < 2) throw std::invalid_argument("n must be >= 2");
        if (m == 0) throw std::invalid_argument("particle count must be positive");
        if (is_exclusion(variant) && m > n)
            throw std::invalid_argument("exclusion variant requires m <= n");
        if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in (0,1]");
        if (!(pi > 0.0 && pi <= 1.0)) throw std::invalid_argument("pi must be in (0,1]");
        if (variant == Variant::zero_range && pi < 1.0 && !(p < 1.0))
            throw std::invalid_argument("zero_range with pi<1 requires p in (0,1)");
        if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
        if (variant == Variant::csma && policy != Policy::none)
            throw std::invalid_argument("perturbation policies are defined for exclusion variants only");
    }
};

struct InitSpec {
    enum class Kind { uniform_random, single_cluster, equally_spaced, mes, explicit_sites };

    Kind kind = Kind::uniform_random;
    std::vector<std::uint32_t> sites;  // explicit_sites only

    static InitSpec uniform_random() { return {Kind::uniform_random, {}}; }
    static InitSpec single_cluster() { return {Kind::single_cluster, {}}; }
    static InitSpec equally_spaced() { return {Kind::equally_spaced, {}}; }
    static InitSpec mes() { return {Kind::mes, {}}; }
    static InitSpec explicit_sites(std::vector<std::uint32_t> s) { return {Kind::explicit_sites, std::move(s)}; }
};

inline const char* to_string(InitSpec::Kind k) {
    switch (k) {
        case InitSpec::Kind::uniform_random: return "uniform_random";
        case InitSpec::Kind::single_cluster: return "single_cluster";
        case InitSpec::Kind::equally_spaced: return "equally_spaced";
        case InitSpec::Kind::mes: return "mes";
        case InitSpec::Kind::explicit_sites: return "explicit";
    }
    return "?";
}

}  // namespace taseph
