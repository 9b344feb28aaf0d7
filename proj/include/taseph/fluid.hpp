#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "taseph/analytic.hpp"
#include "taseph/metrics.hpp"
#include "taseph/ring.hpp"

namespace taseph::fluid {

struct DensityPiece {
    double x = 0;        // start position in [0,1)
    double density = 0;  // slope of the cumulative-mass function on this piece
};

// Piecewise-constant density on the unit circle plus the cluster interval.
// Pieces cover the whole circle; density is 1 on (ell, r) when a cluster of
// positive length exists.  r = ell + tau may exceed 1 (the interval wraps).
struct FluidProfile {
    std::vector<DensityPiece> pieces;
    double ell = 0;
    double r = 0;
    bool has_cluster = false;
    bool zero_length_frozen = false;  // tau = 0 held at left density exactly h
    double t = 0;

    double tau() const { return has_cluster ? r - ell : 0.0; }

    double mass() const {
        double total = 0;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const double next = i + 1 < pieces.size() ? pieces[i + 1].x : 1.0;
            total += (next - pieces[i].x) * pieces[i].density;
        }
        return total;
    }
};

inline double wrap_unit(double x) {
    x = std::fmod(x, 1.0);
    return x < 0 ? x + 1.0 : x;
}

// Two-piece condensed profile: slope 1 over tau*, slope h elsewhere.
inline FluidProfile mes_profile(double rho, double p) {
    const double h = analytic::threshold_density(p);
    if (!(rho > h)) throw std::invalid_argument("mes_profile requires rho > h");
    if (!(rho <= 1.0)) throw std::invalid_argument("rho must be <= 1");
    const double tau = analytic::tau_star(rho, p);
    FluidProfile out;
    out.ell = 0.0;
    out.r = tau;
    out.has_cluster = true;
    out.pieces.push_back({0.0, 1.0});
    if (tau < 1.0) out.pieces.push_back({tau, h});
    out.t = 0.0;
    return out;
}

// Scaled empirical cumulative mass of a lattice state, as run pieces.
inline FluidProfile empirical_profile(const RingState& s) {
    if (s.variant == Variant::csma) throw std::invalid_argument("empirical_profile needs an exclusion variant");
    FluidProfile out;
    const std::uint32_t n = s.n;
    std::uint32_t i = 0;
    while (i < n) {
        const bool occ = s.occupied(i);
        std::uint32_t j = i + 1;
        while (j < n && s.occupied(j) == occ) ++j;
        out.pieces.push_back({static_cast<double>(i) / n, occ ? 1.0 : 0.0});
        i = j;
    }
    const ClusterStats cs = find_clusters(s);
    if (!cs.is_ideal) {
        const Cluster* best = &cs.clusters.front();
        for (const auto& c : cs.clusters)
            if (c.length > best->length) best = &c;
        out.has_cluster = true;
        out.ell = static_cast<double>(best->left_edge) / n;
        out.r = out.ell + static_cast<double>(best->length) / n;
    }
    return out;
}

namespace detail {

inline std::vector<double> piece_prefix_mass(const FluidProfile& p) {
    std::vector<double> pre(p.pieces.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.pieces.size(); ++i) {
        const double next = i + 1 < p.pieces.size() ? p.pieces[i + 1].x : 1.0;
        pre[i + 1] = pre[i] + (next - p.pieces[i].x) * p.pieces[i].density;
    }
    return pre;
}

inline double cumulative_at(const FluidProfile& p, std::span<const double> prefix, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return prefix.back();
    auto it = std::upper_bound(p.pieces.begin(), p.pieces.end(), x,
                               [](double v, const DensityPiece& q) { return v < q.x; });
    const std::size_t idx = static_cast<std::size_t>(it - p.pieces.begin()) - 1;
    return prefix[idx] + (x - p.pieces[idx].x) * p.pieces[idx].density;
}

}  // namespace detail

// Max-norm distance between the cumulative-mass functions (pinned to 0 at
// x = 0).  Both are piecewise linear, so the max sits on a breakpoint.
inline double profile_distance(const FluidProfile& a, const FluidProfile& b) {
    const auto pa = detail::piece_prefix_mass(a);
    const auto pb = detail::piece_prefix_mass(b);
    std::vector<double> xs;
    xs.reserve(a.pieces.size() + b.pieces.size() + 2);
    for (const auto& q : a.pieces) xs.push_back(q.x);
    for (const auto& q : b.pieces) xs.push_back(q.x);
    xs.push_back(1.0);
    double worst = 0.0;
    for (double x : xs)
        worst = std::max(worst, std::fabs(detail::cumulative_at(a, pa, x) - detail::cumulative_at(b, pb, x)));
    return worst;
}

namespace detail {

struct Segment {
    double start = 0;
    double width = 0;
    double density = 0;
};

// Assemble circle-covering pieces from non-overlapping segments: wrap and
// split at the seam, drop slivers, sort, merge equal neighbors.
inline std::vector<DensityPiece> assemble_pieces(std::vector<Segment> segs) {
    std::vector<Segment> flat;
    flat.reserve(segs.size() + 1);
    for (auto& s : segs) {
        if (s.width <= 1e-15) continue;
        const double start = wrap_unit(s.start);
        if (start + s.width > 1.0 + 1e-15) {
            flat.push_back({start, 1.0 - start, s.density});
            flat.push_back({0.0, s.width - (1.0 - start), s.density});
        } else {
            flat.push_back({start, s.width, s.density});
        }
    }
    std::sort(flat.begin(), flat.end(),
              [](const Segment& a, const Segment& b) { return a.start < b.start; });
    std::vector<DensityPiece> pieces;
    for (const auto& s : flat) {
        if (s.width <= 1e-15) continue;
        if (!pieces.empty() && pieces.back().density == s.density) continue;
        pieces.push_back({s.start, s.density});
    }
    if (pieces.empty()) pieces.push_back({0.0, flat.empty() ? 0.0 : flat.front().density});
    if (pieces.front().x > 1e-15)
        pieces.insert(pieces.begin(), {0.0, pieces.back().density});  // wrap region covers 0
    else
        pieces.front().x = 0.0;
    return pieces;
}

}  // namespace detail

// Rotate a profile by delta (the state shifted right by delta).
inline FluidProfile shift_profile(const FluidProfile& src, double delta) {
    FluidProfile out;
    out.t = src.t;
    out.has_cluster = src.has_cluster;
    out.zero_length_frozen = src.zero_length_frozen;
    const double ell = wrap_unit(src.ell + delta);
    out.ell = ell;
    out.r = ell + src.tau();
    std::vector<detail::Segment> segs;
    segs.reserve(src.pieces.size());
    for (std::size_t i = 0; i < src.pieces.size(); ++i) {
        const double next = i + 1 < src.pieces.size() ? src.pieces[i + 1].x : 1.0;
        segs.push_back({src.pieces[i].x + delta, next - src.pieces[i].x, src.pieces[i].density});
    }
    out.pieces = detail::assemble_pieces(std::move(segs));
    return out;
}

// Event-driven integrator for the single-cluster fluid dynamics: the right
// edge recedes at p laying density h in its wake, the left edge obeys
// ell' = -g/(1-g), sparse mass advects at speed 1.  Work happens in the
// frame moving right at speed 1, where sparse mass is static and both edges
// move left; events (piece consumed, tau hitting 0) are solved exactly, so
// there is no time-discretization error.
class FluidSimulator {
public:
    explicit FluidSimulator(const FluidProfile& init) : p_(0), h_(0) {
        if (init.pieces.empty()) throw std::invalid_argument("profile has no pieces");
        throw_unless_sorted(init);
        t_ = init.t;
        t0_ = init.t;
        has_cluster_ = init.has_cluster;
        tau_ = init.has_cluster ? init.r - init.ell : 0.0;
        if (tau_ < 0) throw std::invalid_argument("cluster edges out of order");
        anchor_ = init.has_cluster ? wrap_unit(init.r) : init.pieces.front().x;
        ell_ = anchor_ - tau_;
        r_ = anchor_;
        load_sparse(init);
        trace_.push_back({t_, tau_});
        if (has_cluster_ && tau_ > 0) episodes_.push_back({t_, infinite_time()});
    }

    // Dynamics parameters enter through p; set before stepping.
    void set_holdback(double p) {
        if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in (0,1]");
        p_ = p;
        h_ = analytic::threshold_density(p);
    }

    void advance(double dt) {
        if (p_ == 0.0) throw std::logic_error("set_holdback before advancing");
        if (dt < 0) throw std::invalid_argument("dt must be >= 0");
        int guard = 0;
        while (dt > 0) {
            if (++guard > 100000000) throw std::runtime_error("fluid event loop stuck");
            if (!has_cluster_) {  // pure advection: static in the moving frame
                t_ += dt;
                trace_.push_back({t_, 0.0});
                return;
            }
            if (sparse_.empty()) sparse_.push_back({0.0, h_});
            // drop exhausted consumption-side pieces
            if (sparse_.back().width <= 1e-18 && sparse_.size() > 1) {
                sparse_.pop_back();
                continue;
            }
            const double g = sparse_.back().density;
            if (!(g < 0.5 + 1e-12)) throw std::runtime_error("sparse density above 1/2 at the left edge");

            const bool left_at_wake = sparse_.size() == 1;
            const bool g_is_h = (g == h_);
            const double rate_l = g_is_h ? (1.0 + p_) : 1.0 / (1.0 - g);  // frame speed of ell
            const double rate_r = 1.0 + p_;                                // frame speed of r
            const double dtau = g_is_h ? 0.0 : rate_l - rate_r;

            if (tau_ == 0.0 && !g_is_h && g < h_) {  // zero-length marker with subcritical inflow
                dissolve_now();
                trace_.push_back({t_, 0.0});
                continue;
            }

            double step = dt;
            enum class Event { none, consume, dissolve } ev = Event::none;
            if (!(left_at_wake && g_is_h)) {  // self-feeding wake piece never runs out
                const double t_consume = sparse_.back().width / rate_l;
                if (t_consume <= step) {
                    step = t_consume;
                    ev = Event::consume;
                }
            }
            if (dtau < 0 && tau_ > 0) {
                const double t_dissolve = tau_ / (-dtau);
                if (t_dissolve <= step) {
                    step = t_dissolve;
                    ev = Event::dissolve;
                }
            }

            apply_motion(step, g_is_h, rate_l, rate_r, ev == Event::consume, ev == Event::dissolve);
            dt -= step;
            if (ev == Event::dissolve) resolve_zero_length();
        }
    }

    double time() const { return t_; }
    double tau() const { return tau_; }
    bool has_cluster() const { return has_cluster_; }
    bool zero_length_frozen() const { return has_cluster_ && tau_ == 0.0; }
    double tau_integral() const { return tau_int_; }
    const std::vector<std::pair<double, double>>& tau_trace() const { return trace_; }

    struct Episode {
        double alpha = 0;
        double beta = 0;  // infinite_time() while still alive
    };
    static double infinite_time() { return 1e300; }
    const std::vector<Episode>& episodes() const { return episodes_; }

    // Lebesgue measure of sparse points with density strictly above h.
    double mu_above_h() const {
        double mu = 0;
        for (const auto& q : sparse_)
            if (q.density > h_) mu += q.width;
        return mu;
    }

    FluidProfile profile() const {
        FluidProfile out;
        out.t = t_;
        out.has_cluster = has_cluster_;
        out.zero_length_frozen = zero_length_frozen();
        const double shift = t_ - t0_;
        const double ell_c = wrap_unit(ell_ + shift);
        out.ell = ell_c;
        out.r = ell_c + tau_;

        std::vector<detail::Segment> segs;
        segs.reserve(sparse_.size() + 1);
        if (has_cluster_ && tau_ > 0) segs.push_back({ell_c, tau_, 1.0});
        double u = ell_c + tau_;  // = r in circle coordinates
        for (const auto& piece : sparse_) {
            segs.push_back({u, piece.width, piece.density});
            u += piece.width;
        }
        out.pieces = detail::assemble_pieces(std::move(segs));
        return out;
    }

private:
    struct Piece {
        double width = 0;
        double density = 0;
    };

    static void throw_unless_sorted(const FluidProfile& p) {
        for (std::size_t i = 0; i + 1 < p.pieces.size(); ++i)
            if (!(p.pieces[i].x < p.pieces[i + 1].x)) throw std::invalid_argument("pieces must be sorted");
        if (!(p.pieces.front().x >= 0.0 && p.pieces.back().x < 1.0))
            throw std::invalid_argument("piece positions must lie in [0,1)");
    }

    // Collect sparse pieces from r rightward to ell+1, skipping the cluster.
    void load_sparse(const FluidProfile& init) {
        const double tau = tau_;
        if (tau >= 1.0 - 1e-15 && has_cluster_) return;  // full-ring cluster
        // walk the circle starting at anchor_ (= r position)
        const auto& pc = init.pieces;
        const std::size_t P = pc.size();
        auto density_at = [&](double x) {
            x = wrap_unit(x);
            std::size_t idx = P - 1;
            for (std::size_t i = 0; i < P; ++i) {
                if (pc[i].x <= x + 1e-15) idx = i;
                else break;
            }
            return pc[idx].density;
        };
        // breakpoints on the sparse arc (r, r + 1 - tau)
        std::vector<double> cuts;
        cuts.push_back(0.0);
        const double span = 1.0 - tau;
        for (const auto& q : pc) {
            double rel = wrap_unit(q.x - anchor_);
            if (rel > 1e-15 && rel < span - 1e-15) cuts.push_back(rel);
        }
        cuts.push_back(span);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double w = cuts[i + 1] - cuts[i];
            if (w <= 1e-15) continue;
            const double d = density_at(anchor_ + 0.5 * (cuts[i] + cuts[i + 1]));
            if (has_cluster_ && !(d < 0.5 + 1e-12))
                throw std::invalid_argument("sparse density must be at most 1/2");
            if (!sparse_.empty() && sparse_.back().density == d)
                sparse_.back().width += w;
            else
                sparse_.push_back({w, d});
        }
    }

    void apply_motion(double step, bool g_is_h, double rate_l, double rate_r, bool consumed_all,
                      bool dissolved) {
        const double tau_old = tau_;
        r_ -= rate_r * step;
        if (g_is_h) {
            ell_ = r_ - tau_;  // tau frozen exactly
        } else {
            ell_ -= rate_l * step;
            tau_ = r_ - ell_;
        }
        if (dissolved) {
            tau_ = 0.0;
            ell_ = r_;
        }
        const bool self_feeding = sparse_.size() == 1 && g_is_h;
        if (!self_feeding) {
            // consume from the ell side first, then deposit the wake behind r
            if (consumed_all)
                sparse_.pop_back();
            else
                sparse_.back().width = std::max(0.0, sparse_.back().width - rate_l * step);
            const double laid = rate_r * step;
            if (laid > 0) {
                if (!sparse_.empty() && sparse_.front().density == h_)
                    sparse_.front().width += laid;
                else
                    sparse_.push_front({laid, h_});
            }
        }
        if (tau_old == 0.0 && tau_ > 0.0 &&
            (episodes_.empty() || episodes_.back().beta != infinite_time()))
            episodes_.push_back({t_, infinite_time()});  // regrowth from a zero-length marker
        tau_int_ += 0.5 * (tau_old + tau_) * step;
        t_ += step;
        trace_.push_back({t_, tau_});
    }

    void resolve_zero_length() {
        // next left density decides: below h the cluster disappears, at h it
        // persists frozen at zero length, above h it regrows
        while (sparse_.size() > 1 && sparse_.back().width <= 1e-18) sparse_.pop_back();
        const double g = sparse_.empty() ? h_ : sparse_.back().density;
        if (g < h_) dissolve_now();
    }

    void dissolve_now() {
        has_cluster_ = false;
        tau_ = 0.0;
        if (!episodes_.empty() && episodes_.back().beta == infinite_time()) episodes_.back().beta = t_;
    }

    double p_, h_;
    double t_ = 0, t0_ = 0;
    bool has_cluster_ = false;
    double tau_ = 0;
    double ell_ = 0, r_ = 0;  // moving-frame edge positions
    double anchor_ = 0;       // circle position of r at construction
    std::deque<Piece> sparse_;  // front borders r (wake side), back borders ell
    double tau_int_ = 0;
    std::vector<std::pair<double, double>> trace_;
    std::vector<Episode> episodes_;
};

// One-shot step: integrate the profile forward by dt.
inline FluidProfile fluid_step(const FluidProfile& profile, double dt, double p) {
    FluidSimulator sim(profile);
    sim.set_holdback(p);
    sim.advance(dt);
    return sim.profile();
}

// Trapezoidal integral of a sampled tau trajectory (exact for the event
// polyline, where tau is piecewise linear).
inline double tau_integral(std::span<const std::pair<double, double>> trajectory) {
    double total = 0;
    for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
        const auto& [t0, v0] = trajectory[i];
        const auto& [t1, v1] = trajectory[i + 1];
        total += 0.5 * (v0 + v1) * (t1 - t0);
    }
    return total;
}

}  // namespace taseph::fluid
