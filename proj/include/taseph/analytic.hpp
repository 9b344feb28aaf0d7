#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace taseph::analytic {

// Phase threshold density: clusters dissolve below it, persist above it.
inline double threshold_density(double p) { return p / (1.0 + p); }

// Scaled condensed-cluster length of the quasi-stationary state.
inline double tau_star(double rho, double p) { return rho * (1.0 + p) - p; }

// Condensed-state flux: (1 - tau*) h = p (1 - rho).
inline double phi_star(double rho, double p) { return p * (1.0 - rho); }

// Limiting flux with vanishing perturbation rate: rho below threshold,
// p (1 - rho) above it.
inline double typical_flux(double rho, double p) {
    return rho < threshold_density(p) ? rho : phi_star(rho, p);
}

struct MesQuantities {
    double rho = 0, p = 0, h = 0;
    std::optional<double> tau_star;
    std::optional<double> phi_star;
};

inline MesQuantities mes_quantities(double rho, double p) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in (0,1]");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in (0,1)");
    MesQuantities q;
    q.rho = rho;
    q.p = p;
    q.h = threshold_density(p);
    if (rho >= q.h) {
        q.tau_star = tau_star(rho, p);
        q.phi_star = phi_star(rho, p);
    }
    return q;
}

// ---------------------------------------------------------------------------
// Zero-range steady state (holes moving left at rate pi past one particle,
// rate p past two or more).

// Stationary weight f(k): f(0)=1, f(1)=1/pi, f(k)=((1-pi)/(pi p)) ((1-p)/p)^(k-2).
inline double zr_weight(std::uint32_t k, double pi, double p) {
    if (k == 0) return 1.0;
    if (k == 1) return 1.0 / pi;
    return (1.0 - pi) / (pi * p) * std::pow((1.0 - p) / p, static_cast<int>(k) - 2);
}

// Two-level hop rate p(k): 0, pi, p, p, ...
inline double zr_rate(std::uint32_t k, double pi, double p) {
    if (k == 0) return 0.0;
    return k == 1 ? pi : p;
}

struct GPair {
    double G = 0;
    double dG = 0;
};

// Generating function of {f(k)} and its derivative, in closed form.
inline GPair zr_weights_and_G(double z, double pi, double p) {
    if (!(pi > 0.0 && pi <= 1.0)) throw std::invalid_argument("pi must be in (0,1]");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must be in (0,1)");
    const double radius = p / (1.0 - p);
    if (!(z >= 0.0 && z < radius)) throw std::invalid_argument("z outside [0, p/(1-p))");
    const double b = (1.0 - p) / p;
    const double c = (1.0 - pi) / (pi * p);
    const double denom = 1.0 - b * z;
    GPair g;
    g.G = 1.0 + z / pi + c * z * z / denom;
    g.dG = 1.0 / pi + c * (2.0 * z - b * z * z) / (denom * denom);
    return g;
}

struct FugacitySolution {
    double z_star = 0;
    double eta = 0;  // hole velocity, z*/(z*+1)
    double v = 0;    // particle velocity
    double phi = 0;  // particle flux, rho v = (1-rho) eta
    double residual_fuga = 0;
    double residual_cubic = 0;
};

// Known closed form for the hole velocity at pi = p.
inline double eta_at_pi_equal_p(double gamma, double p) {
    return (1.0 - std::sqrt(1.0 - 4.0 * p * gamma * (1.0 - gamma))) / (2.0 * gamma);
}

namespace detail {
inline double fugacity_map(double z, double pi, double p) {
    const GPair g = zr_weights_and_G(z, pi, p);
    return z * g.dG / g.G;
}

inline double cubic_residual(double eta, double q, double pi, double p) {
    const double lhs = (q - eta) * (p - eta) * (eta * (p - pi - pi * p) + pi * p);
    const double rhs = p * p * (1.0 - pi) * eta * (1.0 - eta);
    return std::fabs(lhs - rhs);
}
}  // namespace detail

// Solve 1 - gamma = gamma z G'(z)/G(z) by bisection on the increasing map
// z -> z G'(z)/G(z) over [0, p/(1-p)).  lo_hint tightens the bracket when a
// smaller solution is already known (grid sweeps in increasing rho).
inline FugacitySolution solve_fugacity(double gamma, double pi, double p, double lo_hint = 0.0) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in (0,1)");
    if (!(pi > 0.0 && pi < 1.0)) throw std::invalid_argument("pi must be in (0,1)");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must be in (0,1)");

    const double target = (1.0 - gamma) / gamma;
    double lo = 0.0;
    double hi = p / (1.0 - p) * (1.0 - 1e-15);
    if (lo_hint > 0.0 && lo_hint < hi && detail::fugacity_map(lo_hint, pi, p) < target) lo = lo_hint;
    if (detail::fugacity_map(hi, pi, p) < target)
        throw std::runtime_error("fugacity bracket failure");

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;  // bracket exhausted at machine precision
        if (detail::fugacity_map(mid, pi, p) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-12 * hi) break;
    }

    FugacitySolution sol;
    sol.z_star = 0.5 * (lo + hi);
    sol.eta = sol.z_star / (sol.z_star + 1.0);
    sol.phi = gamma * sol.eta;
    sol.v = sol.phi / (1.0 - gamma);
    sol.residual_fuga = std::fabs(gamma * detail::fugacity_map(sol.z_star, pi, p) - (1.0 - gamma));
    sol.residual_cubic = detail::cubic_residual(sol.eta, target, pi, p);
    return sol;
}

struct ZrCurvePoint {
    double rho = 0;
    double phi = 0;
    double eta = 0;
    double z_star = 0;
    double residual_fuga = 0;
    double residual_cubic = 0;
};

inline std::vector<ZrCurvePoint> zr_flux_curve(std::span<const double> rho_grid, double pi, double p) {
    std::vector<ZrCurvePoint> out(rho_grid.size());
    // z* is increasing in rho, so walking the grid in rho order lets each
    // solve start from the previous bracket
    std::vector<std::size_t> order(rho_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return rho_grid[a] < rho_grid[b]; });
    double lo_hint = 0.0;
    for (const std::size_t i : order) {
        const double rho = rho_grid[i];
        if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho grid values must be in (0,1)");
        const FugacitySolution s = solve_fugacity(1.0 - rho, pi, p, lo_hint);
        lo_hint = s.z_star * (1.0 - 1e-9);
        out[i] = {rho, s.phi, s.eta, s.z_star, s.residual_fuga, s.residual_cubic};
    }
    return out;
}

}  // namespace taseph::analytic
