#pragma once

#include "covisac/conic.hpp"
#include "covisac/covert.hpp"
#include "covisac/geometry.hpp"
#include "covisac/link_metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace covisac {

// ============================================================
// Per-slot covert beamforming: CCO (communication only) and CCS
// (dual-functional with a sensing covariance), both solved by
// SCA over lifted beamformer matrices with a nuclear-minus-
// spectral rank-one penalty.
// ============================================================

struct BeamformerSet {
    int slot = 0;
    CVec w_a;          // sqrt(watts)
    CVec w_j;          // sqrt(watts)
    CMat sensing_cov;  // watts; zero-sized in the CCO phase

    double alice_power() const {
        double p = w_a.size() > 0 ? w_a.squaredNorm() : 0.0;
        if (sensing_cov.size() > 0) p += std::real(sensing_cov.trace());
        return p;
    }
    double jack_power() const { return w_j.size() > 0 ? w_j.squaredNorm() : 0.0; }
};

struct ScaIterate {
    double surrogate = 0.0;       // penalized surrogate at the accepted point
    double true_objective = 0.0;  // penalized true objective (what SCA ascends)
    double rate = 0.0;            // unpenalized covert rate, bits/s/Hz
    double rank_ratio_a = 1.0;
    double rank_ratio_j = 1.0;
    double covert_slack = 0.0;  // watts
    double penalty = 0.0;       // iota in effect
};

struct ScaTrace {
    std::vector<ScaIterate> iterations;
};

struct SlotChannels {
    CVec h_ab, h_jb, h_aw, h_jw;
};

/// Steering and squared distances toward one sensing target.
struct SensingTask {
    CVec steer_a, steer_j;
    double dist2_a = 0.0, dist2_j = 0.0;
    int target = 0;
};

struct BeamformingParams {
    double p_a_max = 0.0, p_j_max = 0.0;  // watts
    double sigma_b2 = 0.0, sigma_w2 = 0.0;
    double varpi_rb = 0.0, varpi_jb = 0.0, varpi_rw = 0.0;
    double kappa = 0.0;
    double gamma = 0.0;  // sensing threshold, linear

    static BeamformingParams from(const Scenario& s, double kappa) {
        BeamformingParams p;
        p.p_a_max = s.power_alice();
        p.p_j_max = s.power_jack();
        p.sigma_b2 = s.noise_bob();
        p.sigma_w2 = s.noise_willie();
        p.varpi_rb = s.sic_rb();
        p.varpi_jb = s.sic_jb();
        p.varpi_rw = s.sic_rw();
        p.kappa = kappa;
        p.gamma = s.sensing_threshold();
        return p;
    }
};

class scheme_infeasible_error : public std::runtime_error {
public:
    scheme_infeasible_error(const std::string& constraint, const std::string& detail)
        : std::runtime_error("scheme infeasible: " + constraint + " (" + detail + ")"),
          constraint_(constraint) {}
    const std::string& constraint() const { return constraint_; }

private:
    std::string constraint_;
};

inline SlotChannels make_slot_channels(const Scenario& s, const Vec2& u_a, const Vec2& u_j) {
    return {channel(s, UavId::alice, u_a, s.bob), channel(s, UavId::jack, u_j, s.bob),
            channel(s, UavId::alice, u_a, s.willie), channel(s, UavId::jack, u_j, s.willie)};
}

inline SensingTask make_sensing_task(const Scenario& s, const Vec2& u_a, const Vec2& u_j,
                                     int target_index) {
    const Vec2& t = s.targets.at(target_index);
    SensingTask task;
    task.steer_a = steering_vector(s, s.altitude_alice, u_a, t);
    task.steer_j = steering_vector(s, s.altitude_jack, u_j, t);
    task.dist2_a = distance_sq(s.altitude_alice, u_a, t);
    task.dist2_j = distance_sq(s.altitude_jack, u_j, t);
    task.target = target_index;
    return task;
}

namespace detail {

struct BeamProblemData {
    CMat hb_ab, hb_jb;  // bob-side outer products / sigma_b^2
    CMat hw_aw, hw_jw;  // willie-side outer products / sigma_w^2
    int m = 0;
};

inline BeamProblemData normalize_channels(const SlotChannels& ch, const BeamformingParams& bp) {
    BeamProblemData d;
    d.m = static_cast<int>(ch.h_ab.size());
    d.hb_ab = channel_matrix(ch.h_ab) / bp.sigma_b2;
    d.hb_jb = channel_matrix(ch.h_jb) / bp.sigma_b2;
    d.hw_aw = channel_matrix(ch.h_aw) / bp.sigma_w2;
    d.hw_jw = channel_matrix(ch.h_jw) / bp.sigma_w2;
    return d;
}

/// tr(C W) for Hermitian C, W (exactly real up to roundoff).
inline double trprod(const CMat& c, const CMat& w) { return std::real((c * w).trace()); }

inline double rate_from_matrices(const BeamProblemData& d, const BeamformingParams& bp,
                                 const CMat& w_a, const CMat& w_j, const CMat& r_r) {
    double num = trprod(d.hb_ab, w_a);
    double den = 1.0 + bp.varpi_jb * trprod(d.hb_jb, w_j);
    if (r_r.size() > 0) den += bp.varpi_rb * trprod(d.hb_ab, r_r);
    return std::log2(1.0 + num / den);
}

inline double rank_gap(const CMat& w) {  // tr(W) - ||W||_2, zero iff rank <= 1
    if (w.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<CMat> es(w, Eigen::EigenvaluesOnly);
    return es.eigenvalues().sum() - es.eigenvalues().maxCoeff();
}

inline double rank_ratio(const CMat& w) {
    if (w.size() == 0) return 1.0;
    Eigen::SelfAdjointEigenSolver<CMat> es(w, Eigen::EigenvaluesOnly);
    double tr = es.eigenvalues().sum();
    return tr > 0.0 ? es.eigenvalues().maxCoeff() / tr : 1.0;
}

/// Initial beamformers: MRC toward Bob scaled onto the covertness
/// budget, MRC jamming toward Willie at full power, and (CCS) the
/// residual Alice power spread over a scaled identity covariance.
struct InitPoint {
    CMat w_a, w_j, r_r;
};

inline InitPoint initial_point(const SlotChannels& ch, const BeamformingParams& bp, bool ccs) {
    const int m = static_cast<int>(ch.h_ab.size());
    InitPoint ip;
    CVec wj = CVec::Zero(m);
    if (bp.p_j_max > 0.0 && ch.h_jw.norm() > 0.0)
        wj = std::sqrt(bp.p_j_max * (1.0 - 1e-9)) * ch.h_jw / ch.h_jw.norm();
    double budget = (bp.kappa - 1.0) * (bp.sigma_w2 + std::norm(ch.h_jw.dot(wj)));
    CVec wa = CVec::Zero(m);
    double p_used = 0.0;
    if (bp.p_a_max > 0.0 && ch.h_ab.norm() > 0.0) {
        CVec dir = ch.h_ab / ch.h_ab.norm();
        double leak_per_watt = std::norm(ch.h_aw.dot(dir));
        double p = bp.p_a_max * (1.0 - 1e-9);
        if (leak_per_watt > 0.0) p = std::min(p, budget * (1.0 - 1e-7) / leak_per_watt);
        wa = std::sqrt(std::max(p, 0.0)) * dir;
        p_used = std::max(p, 0.0);
    }
    ip.w_a = wa * wa.adjoint();
    ip.w_j = wj * wj.adjoint();
    if (ccs) {
        double residual = std::max(bp.p_a_max * (1.0 - 1e-9) - p_used, 0.0);
        ip.r_r = (residual / m) * CMat::Identity(m, m);
    }
    return ip;
}

}  // namespace detail

// ------------------------------------------------------------
// Shared SCA driver. When `tasks` is empty the CCO subproblem is
// solved (no sensing covariance); otherwise the CCS one.
// ------------------------------------------------------------
inline std::pair<BeamformerSet, ScaTrace> solve_slot_beamforming(
    const SlotChannels& ch, const BeamformingParams& bp, const std::vector<SensingTask>& tasks,
    double iota_init, int tightenings, double conv_threshold, int max_iters, double min_ratio,
    const BeamformerSet* warm = nullptr) {
    const bool ccs = !tasks.empty();
    const int m = static_cast<int>(ch.h_ab.size());
    BeamformerSet out;
    out.w_a = CVec::Zero(m);
    out.w_j = CVec::Zero(m);
    if (ccs) out.sensing_cov = CMat::Zero(m, m);
    ScaTrace trace;

    if (bp.p_a_max <= 0.0 && !ccs) return {out, trace};

    auto data = detail::normalize_channels(ch, bp);
    const bool use_wj = bp.p_j_max > 0.0;

    // current iterate (lifted matrices)
    detail::InitPoint cur = detail::initial_point(ch, bp, ccs);
    if (warm != nullptr && warm->w_a.size() == m) {
        cur.w_a = warm->w_a * warm->w_a.adjoint();
        cur.w_j = warm->w_j * warm->w_j.adjoint();
        if (ccs && warm->sensing_cov.size() > 0) cur.r_r = warm->sensing_cov;
    }
    if (!use_wj) cur.w_j.setZero();

    double iota = iota_init;
    auto penalized = [&](const CMat& wa, const CMat& wj, const CMat& rr) {
        return detail::rate_from_matrices(data, bp, wa, wj, rr) -
               (detail::rank_gap(wa) + detail::rank_gap(wj)) / iota;
    };

    const double kappa = bp.kappa;
    int phase = 0;
    while (true) {  // penalty phases
        for (int it = 0; it < max_iters; ++it) {
            // ---- build the conic subproblem at the expansion point ----
            ConicProblem prob;
            PsdVarRef wa = prob.add_psd_var("W_a", m);
            PsdVarRef wj{};
            PsdVarRef rr{};
            if (use_wj) wj = prob.add_psd_var("W_j", m);
            if (ccs) rr = prob.add_psd_var("R_r", m);

            double den_t = 1.0 + bp.varpi_jb * detail::trprod(data.hb_jb, cur.w_j);
            if (ccs) den_t += bp.varpi_rb * detail::trprod(data.hb_ab, cur.r_r);

            LinExpr arg(1.0);
            arg.add_trace(wa, data.hb_ab);
            if (use_wj) arg.add_trace(wj, data.hb_jb, bp.varpi_jb);
            if (ccs) arg.add_trace(rr, data.hb_ab, bp.varpi_rb);
            prob.add_log_term(arg, 1.0);

            LinExpr lin;
            double log2e = 1.0 / std::log(2.0);
            lin.add_constant(-std::log2(den_t));
            if (use_wj) {
                lin.add_trace(wj, data.hb_jb, -bp.varpi_jb * log2e / den_t);
                lin.add_constant(bp.varpi_jb * log2e / den_t *
                                 detail::trprod(data.hb_jb, cur.w_j));
            }
            if (ccs) {
                lin.add_trace(rr, data.hb_ab, -bp.varpi_rb * log2e / den_t);
                lin.add_constant(bp.varpi_rb * log2e / den_t *
                                 detail::trprod(data.hb_ab, cur.r_r));
            }
            // rank-one penalty: -(1/iota) tr((I - q q^H) W_m)
            auto [la, qa] = spectral_linearization(cur.w_a);
            lin.add_trace(wa, CMat(CMat::Identity(m, m) - qa), -1.0 / iota);
            if (use_wj) {
                auto [lj, qj] = spectral_linearization(cur.w_j);
                lin.add_trace(wj, CMat(CMat::Identity(m, m) - qj), -1.0 / iota);
            }
            prob.add_linear_objective(lin);

            // power budgets
            LinExpr pa(-bp.p_a_max);
            pa.add_trace(wa, CMat::Identity(m, m));
            if (ccs) pa.add_trace(rr, CMat::Identity(m, m));
            prob.add_le(pa);
            if (use_wj) {
                LinExpr pj(-bp.p_j_max);
                pj.add_trace(wj, CMat::Identity(m, m));
                prob.add_le(pj);
            }
            // covertness, normalized by sigma_w^2
            LinExpr cov(-(kappa - 1.0));
            cov.add_trace(wa, data.hw_aw);
            if (use_wj) cov.add_trace(wj, data.hw_jw, 1.0 - kappa);
            if (ccs) cov.add_trace(rr, data.hw_aw, (1.0 - kappa) * bp.varpi_rw);
            prob.add_le(cov);
            // sensing threshold per assigned target
            if (ccs && bp.gamma > 0.0) {
                for (const auto& task : tasks) {
                    CMat a_a = task.steer_a * task.steer_a.adjoint();
                    CMat a_j = task.steer_j * task.steer_j.adjoint();
                    LinExpr sense(1.0);  // 1 - gain/gamma <= 0
                    sense.add_trace(wa, a_a, -1.0 / (task.dist2_a * bp.gamma));
                    sense.add_trace(rr, a_a, -1.0 / (task.dist2_a * bp.gamma));
                    if (use_wj) sense.add_trace(wj, a_j, -1.0 / (task.dist2_j * bp.gamma));
                    prob.add_le(sense);
                }
            }

            // strictly interior warm start near the expansion point
            Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.dim());
            double ridge = 1e-7 * std::max(bp.p_a_max, bp.p_j_max) / m;
            ConicProblem::set_psd_matrix(
                x0, wa, CMat((1.0 - 1e-7) * cur.w_a + ridge * CMat::Identity(m, m)));
            if (use_wj)
                ConicProblem::set_psd_matrix(
                    x0, wj, CMat((1.0 - 1e-7) * cur.w_j + ridge * CMat::Identity(m, m)));
            if (ccs)
                ConicProblem::set_psd_matrix(
                    x0, rr, CMat((1.0 - 1e-7) * cur.r_r + ridge * CMat::Identity(m, m)));

            ConicSolverOptions opts;
            opts.eps_gap = 1e-9;
            ConicSolution sol = solve_conic(prob, x0, opts);
            if (sol.status == SolveStatus::infeasible) {
                if (ccs && bp.gamma > 0.0)
                    throw scheme_infeasible_error(
                        "sensing threshold",
                        "beampattern gain " + std::to_string(bp.gamma) +
                            " unreachable under the power and covertness budgets");
                throw scheme_infeasible_error("covertness", "no strictly feasible beamformer");
            }

            CMat new_wa = ConicProblem::psd_matrix(sol.x, wa);
            CMat new_wj = use_wj ? ConicProblem::psd_matrix(sol.x, wj) : CMat(CMat::Zero(m, m));
            CMat new_rr = ccs ? ConicProblem::psd_matrix(sol.x, rr) : CMat();

            double f_cur = penalized(cur.w_a, cur.w_j, cur.r_r);
            double f_new = penalized(new_wa, new_wj, new_rr);
            if (f_new < f_cur - 1e-12) break;  // solver noise; keep the current point

            cur.w_a = new_wa;
            cur.w_j = new_wj;
            if (ccs) cur.r_r = new_rr;

            ScaIterate rec;
            rec.surrogate = sol.objective;
            rec.true_objective = f_new;
            rec.rate = detail::rate_from_matrices(data, bp, cur.w_a, cur.w_j, cur.r_r);
            rec.rank_ratio_a = detail::rank_ratio(cur.w_a);
            rec.rank_ratio_j = detail::rank_ratio(cur.w_j);
            rec.penalty = iota;
            rec.covert_slack =
                (kappa - 1.0) * bp.sigma_w2 -
                bp.sigma_w2 * (detail::trprod(data.hw_aw, cur.w_a) +
                               (1.0 - kappa) * detail::trprod(data.hw_jw, cur.w_j) +
                               (ccs ? (1.0 - kappa) * bp.varpi_rw *
                                          detail::trprod(data.hw_aw, cur.r_r)
                                    : 0.0));
            trace.iterations.push_back(rec);

            if (f_new - f_cur <= conv_threshold) break;
        }

        bool ranks_ok = detail::rank_ratio(cur.w_a) >= min_ratio &&
                        detail::rank_ratio(cur.w_j) >= min_ratio;
        if (ranks_ok) break;
        if (phase++ >= tightenings)
            throw rank_violation_error(
                std::min(detail::rank_ratio(cur.w_a), detail::rank_ratio(cur.w_j)), min_ratio);
        iota /= 10.0;
    }

    // recover beamformers; the ratio gate was already enforced above
    out.w_a = extract_rank_one(cur.w_a, 0.0).vector;
    out.w_j = use_wj ? extract_rank_one(cur.w_j, 0.0).vector : CVec(CVec::Zero(m));
    if (ccs) out.sensing_cov = 0.5 * (cur.r_r + CMat(cur.r_r.adjoint()));

    // dropping the sub-dominant eigendirections can leave the true
    // covertness constraint marginally violated; rescale Alice onto it
    CMat rr_out = ccs ? out.sensing_cov : CMat();
    double slack = covertness_slack(ch.h_aw, ch.h_jw, out.w_a, out.w_j, rr_out, kappa,
                                    bp.sigma_w2, bp.varpi_rw, ccs ? Phase::ccs : Phase::cco);
    if (slack < 0.0) {
        double leak = std::norm(ch.h_aw.dot(out.w_a));
        double s2 = leak > 0.0 ? std::max(1.0 + slack / leak, 0.0) : 0.0;
        out.w_a *= std::sqrt(s2);
    }
    return {out, trace};
}

inline std::pair<BeamformerSet, ScaTrace> cco_beamforming(const SlotChannels& ch,
                                                          const BeamformingParams& bp,
                                                          const AlgorithmConfig& cfg,
                                                          const BeamformerSet* warm = nullptr) {
    double iota = cfg.penalty_cco > 0.0 ? cfg.penalty_cco : 10.0 * bp.p_a_max;
    return solve_slot_beamforming(ch, bp, {}, iota, cfg.penalty_tightenings, cfg.conv_beamform,
                                  cfg.max_beamform_iters, cfg.rank_one_ratio_min, warm);
}

inline std::pair<BeamformerSet, ScaTrace> ccs_beamforming(const SlotChannels& ch,
                                                          const std::vector<SensingTask>& tasks,
                                                          const BeamformingParams& bp,
                                                          const AlgorithmConfig& cfg,
                                                          const BeamformerSet* warm = nullptr) {
    if (tasks.empty()) throw invariant_error("ccs slot must have at least one assigned target");
    double iota = cfg.penalty_ccs > 0.0 ? cfg.penalty_ccs : 10.0 * bp.p_a_max;
    return solve_slot_beamforming(ch, bp, tasks, iota, cfg.penalty_tightenings,
                                  cfg.conv_beamform, cfg.max_beamform_iters,
                                  cfg.rank_one_ratio_min, warm);
}

}  // namespace covisac
