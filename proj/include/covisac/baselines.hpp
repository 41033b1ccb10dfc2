#pragma once

#include "covisac/bcd.hpp"

#include <string>

namespace covisac {

// ============================================================
// Benchmark schemes: fly-hover-fly trajectories with either the
// optimized beamformers or plain MRC, plus the single-UAV case.
// ============================================================

enum class SchemeId { proposed, fhf_beamforming, dual_uav_fhf, single_uav_fhf };

inline const char* scheme_name(SchemeId s) {
    switch (s) {
        case SchemeId::proposed: return "proposed";
        case SchemeId::fhf_beamforming: return "fhf_beamforming";
        case SchemeId::dual_uav_fhf: return "dual_uav_fhf";
        case SchemeId::single_uav_fhf: return "single_uav_fhf";
    }
    return "?";
}

inline SchemeId parse_scheme(const std::string& name) {
    for (SchemeId s : {SchemeId::proposed, SchemeId::fhf_beamforming, SchemeId::dual_uav_fhf,
                       SchemeId::single_uav_fhf})
        if (name == scheme_name(s)) return s;
    throw invariant_error("unknown scheme: " + name);
}

inline std::vector<SchemeId> all_schemes() {
    return {SchemeId::proposed, SchemeId::fhf_beamforming, SchemeId::dual_uav_fhf,
            SchemeId::single_uav_fhf};
}

struct FhfSegment {
    std::vector<Vec2> positions;  // 0..N
    int hover_slots = 0;
    bool degenerate = false;  // no dwell time over the hover point
};

/// Fly at V_max toward the hover point, dwell as long as possible, fly
/// out to the final position at V_max. Falls back to the straight
/// initial-to-final line (flagged) when the detour does not fit.
inline FhfSegment fhf_trajectory(const Scenario& s, UavId uav, const Vec2& hover) {
    const int n = s.num_slots;
    double vmax = max_displacement(s);
    Vec2 initial = uav == UavId::alice ? s.alice_initial : s.jack_initial;
    Vec2 final_pos = uav == UavId::alice ? s.alice_final : s.jack_final;
    if ((final_pos - initial).norm() > n * vmax + 1e-9)
        throw invariant_error("fhf endpoints unreachable within N slots at V_max");

    double d_in = (hover - initial).norm();
    double d_out = (final_pos - hover).norm();
    int k_in = static_cast<int>(std::ceil(d_in / vmax - 1e-12));
    int k_out = static_cast<int>(std::ceil(d_out / vmax - 1e-12));

    FhfSegment seg;
    seg.positions.resize(n + 1);
    if (k_in + k_out > n) {  // cannot pass through the hover point
        seg.degenerate = true;
        seg.hover_slots = 0;
        for (int i = 0; i <= n; ++i)
            seg.positions[i] = initial + (static_cast<double>(i) / n) * (final_pos - initial);
        return seg;
    }
    seg.hover_slots = n - k_in - k_out;
    seg.degenerate = seg.hover_slots == 0;
    Vec2 dir_in = d_in > 0 ? Vec2((hover - initial) / d_in) : Vec2::Zero();
    Vec2 dir_out = d_out > 0 ? Vec2((hover - final_pos) / d_out) : Vec2::Zero();
    for (int i = 0; i <= n; ++i) {
        if (i <= k_in)
            seg.positions[i] = initial + std::min(i * vmax, d_in) * dir_in;
        else if (i < n - k_out)
            seg.positions[i] = hover;
        else
            seg.positions[i] = final_pos + std::min((n - i) * vmax, d_out) * dir_out;
    }
    return seg;
}

/// Maximum-ratio beamformer sqrt(P) h / ||h||.
inline CVec mrc_beamformer(const CVec& h, double power) {
    double norm = h.norm();
    if (!(norm > 0.0)) throw invariant_error("mrc beamformer needs a nonzero channel");
    return std::sqrt(power) * h / norm;
}

namespace detail {

inline TrajectoryPlan fhf_plan(const Scenario& s, bool jack_fhf) {
    TrajectoryPlan plan;
    plan.alice = fhf_trajectory(s, UavId::alice, s.bob).positions;
    if (jack_fhf) {
        plan.jack = fhf_trajectory(s, UavId::jack, s.willie).positions;
    } else {
        plan.jack.resize(s.num_slots + 1);
        for (int i = 0; i <= s.num_slots; ++i)
            plan.jack[i] = s.jack_initial +
                           (static_cast<double>(i) / s.num_slots) * (s.jack_final - s.jack_initial);
    }
    plan.phase.assign(s.num_slots + 1, Phase::cco);
    return plan;
}

/// Covert-outage accounting for the MRC schemes: a slot violating the
/// covertness constraint (or, in the CCS phase, the sensing threshold)
/// earns zero covert rate.
inline void apply_outage(const Scenario& s, SolveReport& rep) {
    compute_report_metrics(s, rep);
    for (int i = 1; i <= s.num_slots; ++i) {
        if (rep.covert_slack[i] < -1e-15) rep.slot_feasible[i] = 0;
        if (rep.plan.phase[i] == Phase::ccs &&
            rep.sensing_gain[i] < s.sensing_threshold() * (1.0 - 1e-9))
            rep.slot_feasible[i] = 0;
    }
    compute_report_metrics(s, rep);
}

inline SolveReport mrc_scheme(const Scenario& s, const AlgorithmConfig& cfg, bool dual) {
    SolveReport rep;
    const int n = s.num_slots;
    const int m = s.antennas;
    rep.kappa = solve_kappa(s.covertness_level);
    rep.plan = fhf_plan(s, dual);
    rep.plan.validate(s);
    rep.beams.assign(n + 1, {});
    rep.rank_ratio.assign(n + 1, 1.0);
    rep.slot_feasible.assign(n + 1, 1);
    for (int i = 0; i <= n; ++i) {
        rep.beams[i].slot = i;
        rep.beams[i].w_a = CVec::Zero(m);
        rep.beams[i].w_j = CVec::Zero(m);
    }
    for (int i = 1; i <= n; ++i) {
        rep.beams[i].w_a =
            mrc_beamformer(channel(s, UavId::alice, rep.plan.alice[i], s.bob), s.power_alice());
        if (dual)
            rep.beams[i].w_j = mrc_beamformer(channel(s, UavId::jack, rep.plan.jack[i], s.willie),
                                              s.power_jack());
    }
    rep.schedule = greedy_schedule(rep.plan, s, dual);
    for (const auto& set : rep.schedule.slots_per_target)
        for (int slot : set) rep.plan.phase[slot] = Phase::ccs;
    apply_outage(s, rep);
    rep.outer_history.push_back(rep.acr_overall);
    return rep;
}

}  // namespace detail

/// Run one benchmark scheme end to end (CCO + CCS phases).
inline SolveReport run_scheme(SchemeId scheme, const Scenario& s, const AlgorithmConfig& cfg) {
    switch (scheme) {
        case SchemeId::proposed: {
            SolveReport cco = solve_cco(s, cfg);
            return solve_ccs(s, cfg, cco);
        }
        case SchemeId::fhf_beamforming: {
            SolveReport cco = solve_fixed_trajectory(s, cfg, detail::fhf_plan(s, true));
            return solve_ccs(s, cfg, cco);
        }
        case SchemeId::dual_uav_fhf:
            return detail::mrc_scheme(s, cfg, true);
        case SchemeId::single_uav_fhf:
            return detail::mrc_scheme(s, cfg, false);
    }
    throw invariant_error("unreachable scheme");
}

}  // namespace covisac
