#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "taseph/bits.hpp"
#include "taseph/ring.hpp"
#include "taseph/rng.hpp"
#include "taseph/step.hpp"

namespace taseph {

struct PerturbationRecord {
    std::uint64_t slot = 0;
    std::uint32_t from_site = 0;
    std::uint32_t to_site = 0;
    std::uint32_t right_distance = 0;  // (to - from) mod n
    bool created_cluster = false;      // placed particle ends adjacent to a particle
    bool split_cluster = false;        // removed particle had particles on both sides
};

// Relocate one particle picked uniformly at random into a hole picked
// uniformly at random; the vacated origin counts as a hole for the
// destination draw.
inline PerturbationRecord apply_perturbation(RingState& s, rng::SlotRng& g, bool vacated_is_candidate = true) {
    if (s.variant == Variant::csma) throw std::invalid_argument("perturbations need an exclusion variant");
    if (s.m == 0 || s.m >= s.n) throw std::invalid_argument("perturbation needs >=1 particle and >=1 hole");

    PerturbationRecord rec;
    rec.slot = s.t;

    const auto pick = static_cast<std::uint32_t>(g.below(s.m));
    rec.from_site = bits::select_nth_set(s.occ, pick);

    const std::uint32_t n = s.n;
    const std::uint32_t left_of_from = rec.from_site == 0 ? n - 1 : rec.from_site - 1;
    const std::uint32_t right_of_from = rec.from_site + 1 == n ? 0 : rec.from_site + 1;
    rec.split_cluster = bits::get(s.occ, left_of_from) && bits::get(s.occ, right_of_from);

    bits::clear(s.occ, rec.from_site);
    if (!s.restart.empty()) bits::clear(s.restart, rec.from_site);

    const std::uint32_t holes = n - s.m + (vacated_is_candidate ? 1 : 0);
    std::uint32_t draw = static_cast<std::uint32_t>(g.below(holes));
    if (!vacated_is_candidate) {
        // skip over the vacated origin in hole order
        const std::uint32_t origin_rank = [&] {
            std::uint32_t r = 0;
            for (std::uint32_t i = 0; i < rec.from_site; ++i)
                if (!bits::get(s.occ, i)) ++r;
            return r;
        }();
        if (draw >= origin_rank) ++draw;
    }
    rec.to_site = bits::select_nth_clear(s.occ, draw, n);
    bits::set(s.occ, rec.to_site);

    const std::uint32_t left_of_to = rec.to_site == 0 ? n - 1 : rec.to_site - 1;
    const std::uint32_t right_of_to = rec.to_site + 1 == n ? 0 : rec.to_site + 1;
    rec.created_cluster = bits::get(s.occ, left_of_to) || bits::get(s.occ, right_of_to);
    rec.right_distance = (rec.to_site + n - rec.from_site) % n;
    return rec;
}

// Per-slot perturbation decision, applied after the movement phase within the
// same slot.  A-policy fires only when the post-movement state is ideal.
inline std::optional<PerturbationRecord> policy_step(RingState& s, const ModelParams& params,
                                                     bool post_move_ideal,
                                                     bool vacated_is_candidate = true) {
    if (params.policy == Policy::none) return std::nullopt;
    if (params.policy == Policy::A && !post_move_ideal) return std::nullopt;
    rng::SlotRng g(params.seed, s.t, rng::stream_perturb);
    const double prob = params.lambda / static_cast<double>(params.n);
    const rng::Coin c = rng::make_coin(prob < 1.0 ? prob : 1.0);
    if (!c.flip(g.next())) return std::nullopt;
    return apply_perturbation(s, g, vacated_is_candidate);
}

// One slot of the full perturbed dynamics: movement, ideal check, policy draw.
struct StepOutcome {
    MoveRecord move;
    bool ideal_after_move = false;
    std::optional<PerturbationRecord> perturbation;
};

class Simulation {
public:
    Simulation(const ModelParams& params, const InitSpec& init)
        : params_(params), state_(new_state(params, init)) {}

    StepOutcome step() {
        StepOutcome out;
        out.move = taseph::step(state_, params_, scratch_);
        if (is_exclusion(params_.variant)) {
            out.ideal_after_move = is_absorbing_state(state_);
            out.perturbation = policy_step(state_, params_, out.ideal_after_move, vacated_is_candidate);
            if (out.perturbation) out.move.perturb_distance = out.perturbation->right_distance;
        }
        return out;
    }

    const RingState& state() const { return state_; }
    RingState& state() { return state_; }
    const ModelParams& params() const { return params_; }

    bool vacated_is_candidate = true;

private:
    ModelParams params_;
    RingState state_;
    StepScratch scratch_;
};

}  // namespace taseph
