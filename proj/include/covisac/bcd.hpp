#pragma once

#include "covisac/beamforming.hpp"
#include "covisac/scheduler.hpp"
#include "covisac/trajectory.hpp"

#include <atomic>
#include <chrono>
#include <thread>
#include <vector>

namespace covisac {

// ============================================================
// Block coordinate descent over { per-slot beamforming, Alice
// trajectory, Jack trajectory } for the CCO phase, then the CCS
// pipeline: greedy slot scheduling followed by per-slot
// dual-functional beamforming at the frozen trajectory.
// ============================================================

struct StageTiming {
    double beamforming_s = 0.0;
    double alice_s = 0.0;
    double jack_s = 0.0;
    double scheduling_s = 0.0;
    double ccs_beamforming_s = 0.0;
};

struct SolveReport {
    TrajectoryPlan plan;
    std::vector<BeamformerSet> beams;  // indexed by slot, [0] unused
    std::vector<SlotRates> rates;      // one entry per slot 1..N
    std::vector<double> covert_slack;  // watts, [0] unused
    std::vector<double> sensing_gain;  // gain toward the assigned target (CCS slots)
    std::vector<double> rank_ratio;    // min_m lambda_max/tr before extraction
    std::vector<char> slot_feasible;
    std::vector<double> outer_history;  // ACR after each outer BCD iteration
    SensingSchedule schedule;
    double acr_cco = 0.0;
    double acr_ccs = 0.0;
    double acr_overall = 0.0;
    double kappa = 1.0;
    bool feasible = true;
    std::string infeasible_stage;
    StageTiming timing;
    double wall_s = 0.0;
};

namespace detail {

inline int resolve_jobs(const AlgorithmConfig& cfg) {
    if (cfg.jobs > 0) return cfg.jobs;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

/// Run fn(slot) for slots 1..n on `jobs` threads; slots are independent
/// so the result is identical to the sequential order.
template <typename Fn>
void parallel_slots(int n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n < 2) {
        for (int i = 1; i <= n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{1};
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i <= n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::vector<CMat> lift(const std::vector<BeamformerSet>& beams, bool alice) {
    std::vector<CMat> w(beams.size());
    for (size_t i = 1; i < beams.size(); ++i) {
        const CVec& v = alice ? beams[i].w_a : beams[i].w_j;
        w[i] = v * v.adjoint();
    }
    if (!beams.empty()) w[0] = w.size() > 1 ? CMat(CMat::Zero(w[1].rows(), w[1].cols())) : CMat();
    return w;
}

}  // namespace detail

/// Recompute every reported metric from the raw models (channels,
/// SINRs, covertness slack, beampattern gains) at the final plan.
inline void compute_report_metrics(const Scenario& s, SolveReport& rep) {
    const int n = s.num_slots;
    rep.rates.assign(n, {});
    rep.covert_slack.assign(n + 1, 0.0);
    rep.sensing_gain.assign(n + 1, 0.0);
    double sum_cco = 0.0, sum_ccs = 0.0, sum_all = 0.0;
    int n_cco = 0, n_ccs = 0;
    for (int i = 1; i <= n; ++i) {
        Phase phase = rep.plan.phase[i];
        SlotChannels ch = make_slot_channels(s, rep.plan.alice[i], rep.plan.jack[i]);
        const BeamformerSet& b = rep.beams[i];
        CMat rr = phase == Phase::ccs ? b.sensing_cov : CMat();
        double sinr = sinr_bob(phase, ch.h_ab, ch.h_jb, b.w_a, b.w_j, rr, s.sic_rb(), s.sic_jb(),
                               s.noise_bob());
        double rate = rep.slot_feasible[i] ? rate_from_sinr(sinr) : 0.0;
        rep.rates[i - 1] = {i, phase, sinr, rate};
        rep.covert_slack[i] = covertness_slack(ch.h_aw, ch.h_jw, b.w_a, b.w_j, rr, rep.kappa,
                                               s.noise_willie(), s.sic_rw(), phase);
        if (phase == Phase::ccs) {
            int q = rep.schedule.target_of_slot(i);
            if (q >= 0)
                rep.sensing_gain[i] = beampattern_sum_gain(
                    rep.plan.alice[i], rep.plan.jack[i], s.targets[q], b.w_a, b.w_j, rr,
                    s.altitude_alice, s.altitude_jack, s.antenna_spacing_ratio);
            sum_ccs += rate;
            ++n_ccs;
        } else {
            sum_cco += rate;
            ++n_cco;
        }
        sum_all += rate;
    }
    rep.acr_cco = n_cco > 0 ? sum_cco / n_cco : 0.0;
    rep.acr_ccs = n_ccs > 0 ? sum_ccs / n_ccs : 0.0;
    rep.acr_overall = n > 0 ? sum_all / n : 0.0;
}

/// Algorithm-1 style BCD for the CCO phase, run with every slot labeled
/// CCO. Each block is safeguarded: a solution is kept only when it does
/// not decrease the true objective, so the outer ACR history is
/// nondecreasing by construction.
inline SolveReport solve_cco(const Scenario& s, const AlgorithmConfig& cfg) {
    s.validate();
    cfg.validate();
    auto t_start = std::chrono::steady_clock::now();
    const int n = s.num_slots;
    const int m = s.antennas;
    const int jobs = detail::resolve_jobs(cfg);

    SolveReport rep;
    rep.kappa = solve_kappa(s.covertness_level);
    rep.plan = initialize_trajectory(s);
    rep.beams.assign(n + 1, {});
    for (int i = 0; i <= n; ++i) {
        rep.beams[i].slot = i;
        rep.beams[i].w_a = CVec::Zero(m);
        rep.beams[i].w_j = CVec::Zero(m);
    }
    rep.rank_ratio.assign(n + 1, 1.0);
    rep.slot_feasible.assign(n + 1, 1);

    BeamformingParams bp = BeamformingParams::from(s, rep.kappa);
    bp.gamma = 0.0;  // no sensing requirement in the CCO phase

    double acr_prev = 0.0;
    for (int outer = 1; outer <= cfg.max_outer_iters; ++outer) {
        // ---- per-slot covert beamforming -------------------------------
        auto t0 = std::chrono::steady_clock::now();
        std::vector<std::string> slot_errors(n + 1);
        detail::parallel_slots(n, jobs, [&](int i) {
            SlotChannels ch = make_slot_channels(s, rep.plan.alice[i], rep.plan.jack[i]);
            const BeamformerSet* warm = outer > 1 ? &rep.beams[i] : nullptr;
            try {
                auto [cand, trace] = cco_beamforming(ch, bp, cfg, warm);
                double cur_rate = rate_from_sinr(
                    sinr_bob(Phase::cco, ch.h_ab, ch.h_jb, rep.beams[i].w_a, rep.beams[i].w_j,
                             {}, s.sic_rb(), s.sic_jb(), s.noise_bob()));
                double cand_rate = rate_from_sinr(
                    sinr_bob(Phase::cco, ch.h_ab, ch.h_jb, cand.w_a, cand.w_j, {}, s.sic_rb(),
                             s.sic_jb(), s.noise_bob()));
                if (cand_rate >= cur_rate - 1e-12) {
                    cand.slot = i;
                    rep.beams[i] = std::move(cand);
                    if (!trace.iterations.empty())
                        rep.rank_ratio[i] = std::min(trace.iterations.back().rank_ratio_a,
                                                     trace.iterations.back().rank_ratio_j);
                }
            } catch (const std::exception& e) {
                slot_errors[i] = e.what();
            }
        });
        rep.timing.beamforming_s += detail::seconds_since(t0);
        for (int i = 1; i <= n; ++i)
            if (!slot_errors[i].empty()) {
                rep.feasible = false;
                rep.infeasible_stage = "cco beamforming slot " + std::to_string(i) + ": " +
                                       slot_errors[i];
            }

        // ---- trajectory blocks -----------------------------------------
        std::vector<CMat> wa_l = detail::lift(rep.beams, true);
        std::vector<CMat> wj_l = detail::lift(rep.beams, false);
        t0 = std::chrono::steady_clock::now();
        refine_trajectory(s, wa_l, wj_l, rep.plan, rep.kappa, cfg, /*move_alice=*/true);
        rep.timing.alice_s += detail::seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        refine_trajectory(s, wa_l, wj_l, rep.plan, rep.kappa, cfg, /*move_alice=*/false);
        rep.timing.jack_s += detail::seconds_since(t0);

        double acr = detail::plan_cco_acr(s, wa_l, wj_l, rep.plan.alice, rep.plan.jack);
        rep.outer_history.push_back(acr);
        double gain = acr - acr_prev;
        acr_prev = acr;
        if (gain <= cfg.conv_outer) break;
    }

    compute_report_metrics(s, rep);
    rep.wall_s = detail::seconds_since(t_start);
    return rep;
}

/// One safeguarded beamforming pass over every slot of a fixed, already
/// feasible trajectory (used by the fly-hover-fly benchmark).
inline SolveReport solve_fixed_trajectory(const Scenario& s, const AlgorithmConfig& cfg,
                                          TrajectoryPlan plan) {
    s.validate();
    cfg.validate();
    auto t_start = std::chrono::steady_clock::now();
    const int n = s.num_slots;
    const int m = s.antennas;
    SolveReport rep;
    rep.kappa = solve_kappa(s.covertness_level);
    rep.plan = std::move(plan);
    rep.plan.validate(s);
    rep.beams.assign(n + 1, {});
    for (int i = 0; i <= n; ++i) {
        rep.beams[i].slot = i;
        rep.beams[i].w_a = CVec::Zero(m);
        rep.beams[i].w_j = CVec::Zero(m);
    }
    rep.rank_ratio.assign(n + 1, 1.0);
    rep.slot_feasible.assign(n + 1, 1);

    BeamformingParams bp = BeamformingParams::from(s, rep.kappa);
    bp.gamma = 0.0;
    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> slot_errors(n + 1);
    detail::parallel_slots(n, detail::resolve_jobs(cfg), [&](int i) {
        SlotChannels ch = make_slot_channels(s, rep.plan.alice[i], rep.plan.jack[i]);
        try {
            auto [cand, trace] = cco_beamforming(ch, bp, cfg);
            cand.slot = i;
            rep.beams[i] = std::move(cand);
            if (!trace.iterations.empty())
                rep.rank_ratio[i] = std::min(trace.iterations.back().rank_ratio_a,
                                             trace.iterations.back().rank_ratio_j);
        } catch (const std::exception& e) {
            slot_errors[i] = e.what();
        }
    });
    rep.timing.beamforming_s += detail::seconds_since(t0);
    for (int i = 1; i <= n; ++i)
        if (!slot_errors[i].empty()) {
            rep.feasible = false;
            rep.infeasible_stage = "beamforming slot " + std::to_string(i) + ": " + slot_errors[i];
        }

    std::vector<CMat> wa_l = detail::lift(rep.beams, true);
    std::vector<CMat> wj_l = detail::lift(rep.beams, false);
    rep.outer_history.push_back(
        detail::plan_cco_acr(s, wa_l, wj_l, rep.plan.alice, rep.plan.jack));
    compute_report_metrics(s, rep);
    rep.wall_s = detail::seconds_since(t_start);
    return rep;
}

/// CCS pipeline on a solved CCO report: pick sensing slots greedily from
/// the frozen trajectory, then per-slot dual-functional beamforming. A
/// slot whose sensing threshold is unreachable is flagged and counts
/// zero covert rate; the remaining slots proceed.
inline SolveReport solve_ccs(const Scenario& s, const AlgorithmConfig& cfg,
                             const SolveReport& cco, bool include_jack = true) {
    auto t_start = std::chrono::steady_clock::now();
    const int n = s.num_slots;
    const int jobs = detail::resolve_jobs(cfg);
    SolveReport rep = cco;

    auto t0 = std::chrono::steady_clock::now();
    rep.schedule = greedy_schedule(rep.plan, s, include_jack);
    for (const auto& set : rep.schedule.slots_per_target)
        for (int slot : set) rep.plan.phase[slot] = Phase::ccs;
    rep.timing.scheduling_s += detail::seconds_since(t0);

    BeamformingParams bp = BeamformingParams::from(s, rep.kappa);
    t0 = std::chrono::steady_clock::now();
    std::vector<int> ccs_slots;
    for (int i = 1; i <= n; ++i)
        if (rep.plan.phase[i] == Phase::ccs) ccs_slots.push_back(i);

    std::atomic<int> cursor{0};
    auto worker = [&] {
        for (int k = cursor.fetch_add(1); k < static_cast<int>(ccs_slots.size());
             k = cursor.fetch_add(1)) {
            int i = ccs_slots[k];
            int q = rep.schedule.target_of_slot(i);
            SlotChannels ch = make_slot_channels(s, rep.plan.alice[i], rep.plan.jack[i]);
            std::vector<SensingTask> tasks{
                make_sensing_task(s, rep.plan.alice[i], rep.plan.jack[i], q)};
            try {
                auto [cand, trace] = ccs_beamforming(ch, tasks, bp, cfg, &rep.beams[i]);
                cand.slot = i;
                rep.beams[i] = std::move(cand);
                if (!trace.iterations.empty())
                    rep.rank_ratio[i] = std::min(trace.iterations.back().rank_ratio_a,
                                                 trace.iterations.back().rank_ratio_j);
            } catch (const scheme_infeasible_error&) {
                rep.slot_feasible[i] = 0;
                rep.beams[i].w_a.setZero();
                rep.beams[i].w_j.setZero();
                rep.beams[i].sensing_cov = CMat::Zero(s.antennas, s.antennas);
            }
        }
    };
    if (jobs <= 1 || ccs_slots.size() < 2) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    rep.timing.ccs_beamforming_s += detail::seconds_since(t0);

    compute_report_metrics(s, rep);
    rep.wall_s = cco.wall_s + detail::seconds_since(t_start);
    return rep;
}

/// Audit a report against the raw constraints (endpoints, displacement,
/// power budgets, covertness, sensing threshold); returns human-readable
/// violations. Empty result means the report is feasible end to end.
inline std::vector<std::string> audit_report(const Scenario& s, const SolveReport& rep) {
    std::vector<std::string> issues;
    try {
        rep.plan.validate(s);
    } catch (const std::exception& e) {
        issues.push_back(e.what());
    }
    const int n = s.num_slots;
    for (int i = 1; i <= n; ++i) {
        if (!rep.slot_feasible[i]) continue;
        const BeamformerSet& b = rep.beams[i];
        if (b.alice_power() > s.power_alice() + 1e-9)
            issues.push_back("alice power budget exceeded at slot " + std::to_string(i));
        if (b.jack_power() > s.power_jack() + 1e-9)
            issues.push_back("jack power budget exceeded at slot " + std::to_string(i));
        if (rep.covert_slack[i] < -1e-9)
            issues.push_back("covertness violated at slot " + std::to_string(i));
        if (rep.plan.phase[i] == Phase::ccs &&
            rep.sensing_gain[i] < s.sensing_threshold() * (1.0 - 1e-6) - 1e-15)
            issues.push_back("sensing gain below threshold at slot " + std::to_string(i));
    }
    return issues;
}

}  // namespace covisac
