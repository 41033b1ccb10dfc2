#pragma once

#include "covisac/beamforming.hpp"
#include "covisac/conic.hpp"
#include "covisac/link_metrics.hpp"

#include <optional>
#include <vector>

namespace covisac {

// ============================================================
// Trust-region SCA trajectory steps for Alice and Jack, driven
// by the closed-form eta/gradient coefficients, plus the
// safeguarded refinement loop that only accepts steps keeping
// the raw covertness constraint satisfied.
// ============================================================

struct TrajectoryPlan {
    std::vector<Vec2> alice;  // positions u_a[0..N]
    std::vector<Vec2> jack;   // positions u_j[0..N]
    std::vector<Phase> phase;  // label per slot 1..N (index 0 unused)

    int slots() const { return static_cast<int>(alice.size()) - 1; }

    void validate(const Scenario& s) const {
        if (alice.size() != jack.size() || alice.size() != phase.size() ||
            alice.size() != static_cast<size_t>(s.num_slots) + 1)
            throw invariant_error("trajectory plan size mismatch");
        double vmax = max_displacement(s) + 1e-6;
        auto check = [&](const std::vector<Vec2>& u, const Vec2& initial, const Vec2& final_pos,
                         const char* name) {
            if ((u.front() - initial).norm() > 1e-9)
                throw invariant_error(std::string(name) + " initial position mismatch");
            if ((u.back() - final_pos).norm() > 1e-9)
                throw invariant_error(std::string(name) + " final position mismatch");
            for (size_t n = 1; n < u.size(); ++n)
                if ((u[n] - u[n - 1]).norm() > vmax)
                    throw invariant_error(std::string(name) + " displacement cap exceeded at slot " +
                                          std::to_string(n));
        };
        check(alice, s.alice_initial, s.alice_final, "alice");
        check(jack, s.jack_initial, s.jack_final, "jack");
    }
};

struct TrustRegionState {
    double radius = 0.0;   // psi, meters
    double shrink = 0.9;   // c in (0,1)
    int iteration = 0;

    void step() {
        radius *= shrink;
        ++iteration;
    }
};

/// Straight-line initialization from the initial to the final position.
inline TrajectoryPlan initialize_trajectory(const Scenario& s) {
    const int n = s.num_slots;
    double vmax = max_displacement(s);
    if ((s.alice_final - s.alice_initial).norm() > n * vmax + 1e-9)
        throw invariant_error("alice endpoints unreachable within N slots at V_max");
    if ((s.jack_final - s.jack_initial).norm() > n * vmax + 1e-9)
        throw invariant_error("jack endpoints unreachable within N slots at V_max");
    TrajectoryPlan plan;
    plan.alice.resize(n + 1);
    plan.jack.resize(n + 1);
    plan.phase.assign(n + 1, Phase::cco);
    for (int i = 0; i <= n; ++i) {
        double f = static_cast<double>(i) / n;
        plan.alice[i] = s.alice_initial + f * (s.alice_final - s.alice_initial);
        plan.jack[i] = s.jack_initial + f * (s.jack_final - s.jack_initial);
    }
    return plan;
}

namespace detail {

/// Achievable CCO rate at given positions with fixed lifted beamformers,
/// through the trace/eta form (exact, not a surrogate).
inline double cco_rate_at(const Scenario& s, const CMat& w_a, const CMat& w_j, const Vec2& u_a,
                          const Vec2& u_j) {
    double beta = s.pathloss_ref();
    double d2_ab = distance_sq(s.altitude_alice, u_a, s.bob);
    double d2_jb = distance_sq(s.altitude_jack, u_j, s.bob);
    double sr = s.antenna_spacing_ratio;
    double signal = eta(w_a, sr, s.altitude_alice, std::sqrt(d2_ab)) / d2_ab;
    double interf = s.sic_jb() * eta(w_j, sr, s.altitude_jack, std::sqrt(d2_jb)) / d2_jb;
    return std::log2(1.0 + signal / (interf + s.noise_bob() / beta));
}

/// Raw CCO covertness slack (watts) at given positions and beams.
inline double covert_slack_at(const Scenario& s, const CMat& w_a, const CMat& w_j,
                              const Vec2& u_a, const Vec2& u_j, double kappa) {
    double beta = s.pathloss_ref();
    double sr = s.antenna_spacing_ratio;
    double d2_aw = distance_sq(s.altitude_alice, u_a, s.willie);
    double d2_jw = distance_sq(s.altitude_jack, u_j, s.willie);
    double leak = beta * eta(w_a, sr, s.altitude_alice, std::sqrt(d2_aw)) / d2_aw;
    double jam = beta * eta(w_j, sr, s.altitude_jack, std::sqrt(d2_jw)) / d2_jw;
    return (kappa - 1.0) * s.noise_willie() - leak + (kappa - 1.0) * jam;
}

inline double plan_cco_acr(const Scenario& s, const std::vector<CMat>& w_a,
                           const std::vector<CMat>& w_j, const std::vector<Vec2>& u_a,
                           const std::vector<Vec2>& u_j) {
    const int n = static_cast<int>(u_a.size()) - 1;
    double sum = 0.0;
    for (int i = 1; i <= n; ++i) sum += cco_rate_at(s, w_a[i], w_j[i], u_a[i], u_j[i]);
    return sum / n;
}

}  // namespace detail

struct TrajectoryStep {
    std::vector<Vec2> positions;  // full 0..N sequence for the moved UAV
    double surrogate = 0.0;       // surrogate ACR at the step target
};

/// First-order surrogate coefficients of the per-slot CCO rate seen as a
/// function of one UAV position. `alice` selects which UAV moves.
struct SlotSurrogate {
    double alpha = 0.0;  // value at the expansion point
    Vec2 rho = Vec2::Zero();
    double mu = 0.0;  // covertness linearization value
    Vec2 vartheta = Vec2::Zero();
    double covert_rhs = 0.0;
};

inline SlotSurrogate alice_slot_surrogate(const Scenario& s, const CMat& w_a, const CMat& w_j,
                                          const Vec2& ua_ref, const Vec2& u_j, double kappa) {
    SlotSurrogate out;
    const double beta = s.pathloss_ref();
    const double sr = s.antenna_spacing_ratio;
    const double ln2 = std::log(2.0);

    double d_jb = distance(s.altitude_jack, u_j, s.bob);
    double zeta1 = s.sic_jb() * eta(w_j, sr, s.altitude_jack, d_jb) / (d_jb * d_jb) +
                   s.noise_bob() / beta;
    double d_ab = distance(s.altitude_alice, ua_ref, s.bob);
    double eta_ab = eta(w_a, sr, s.altitude_alice, d_ab);
    double zeta2 = eta_ab + d_ab * d_ab * zeta1;
    out.alpha = std::log2(zeta2) - std::log2(d_ab * d_ab * zeta1);
    Vec2 gamma_ab = eta_gradient(w_a, sr, s.altitude_alice, ua_ref, s.bob);
    out.rho = (gamma_ab + 2.0 * zeta1 * (ua_ref - s.bob)) / (ln2 * zeta2) -
              2.0 * (ua_ref - s.bob) / (ln2 * d_ab * d_ab);

    double d_jw = distance(s.altitude_jack, u_j, s.willie);
    double cj = (kappa - 1.0) * (eta(w_j, sr, s.altitude_jack, d_jw) / (d_jw * d_jw) +
                                 s.noise_willie() / beta);
    double d_aw = distance(s.altitude_alice, ua_ref, s.willie);
    out.mu = eta(w_a, sr, s.altitude_alice, d_aw) - cj * (ua_ref - s.willie).squaredNorm();
    out.vartheta = eta_gradient(w_a, sr, s.altitude_alice, ua_ref, s.willie) -
                   2.0 * cj * (ua_ref - s.willie);
    out.covert_rhs = cj * s.altitude_alice * s.altitude_alice;
    return out;
}

inline SlotSurrogate jack_slot_surrogate(const Scenario& s, const CMat& w_a, const CMat& w_j,
                                         const Vec2& u_a, const Vec2& uj_ref, double kappa) {
    SlotSurrogate out;
    const double beta = s.pathloss_ref();
    const double sr = s.antenna_spacing_ratio;
    const double ln2 = std::log(2.0);

    double d_ab = distance(s.altitude_alice, u_a, s.bob);
    double s_ab = eta(w_a, sr, s.altitude_alice, d_ab) / (d_ab * d_ab);
    double d_jb = distance(s.altitude_jack, uj_ref, s.bob);
    double d2_jb = d_jb * d_jb;
    double zeta3 = s.sic_jb() * eta(w_j, sr, s.altitude_jack, d_jb) +
                   s.noise_bob() / beta * d2_jb;
    double zeta4 = zeta3 + s_ab * d2_jb;
    out.alpha = std::log2(zeta4) - std::log2(zeta3);
    Vec2 gamma_jb = eta_gradient(w_j, sr, s.altitude_jack, uj_ref, s.bob);
    Vec2 grad3 = s.sic_jb() * gamma_jb + 2.0 * (s.noise_bob() / beta) * (uj_ref - s.bob);
    Vec2 grad4 = grad3 + 2.0 * s_ab * (uj_ref - s.bob);
    out.rho = grad4 / (ln2 * zeta4) - grad3 / (ln2 * zeta3);

    double d_aw = distance(s.altitude_alice, u_a, s.willie);
    double s_aw = eta(w_a, sr, s.altitude_alice, d_aw) / (d_aw * d_aw);
    double ca = (kappa - 1.0) * s.noise_willie() / beta - s_aw;
    double d_jw = distance(s.altitude_jack, uj_ref, s.willie);
    out.mu = (1.0 - kappa) * eta(w_j, sr, s.altitude_jack, d_jw) -
             ca * (uj_ref - s.willie).squaredNorm();
    out.vartheta = (1.0 - kappa) * eta_gradient(w_j, sr, s.altitude_jack, uj_ref, s.willie) -
                   2.0 * ca * (uj_ref - s.willie);
    out.covert_rhs = ca * s.altitude_jack * s.altitude_jack;
    return out;
}

/// One trust-region SCA subproblem for the selected UAV; nullopt when the
/// linearized subproblem is infeasible at this radius.
inline std::optional<TrajectoryStep> trajectory_step(
    const Scenario& s, const std::vector<CMat>& w_a, const std::vector<CMat>& w_j,
    const TrajectoryPlan& plan, double kappa, double radius, bool move_alice) {
    const int n = plan.slots();
    const std::vector<Vec2>& moving = move_alice ? plan.alice : plan.jack;
    const std::vector<Vec2>& fixed = move_alice ? plan.jack : plan.alice;
    const Vec2 endpoint_first = moving.front();
    const Vec2 endpoint_last = moving.back();

    std::vector<SlotSurrogate> surr(n + 1);
    double max_grad = 0.0;
    for (int i = 1; i <= n; ++i) {
        surr[i] = move_alice ? alice_slot_surrogate(s, w_a[i], w_j[i], moving[i], fixed[i], kappa)
                             : jack_slot_surrogate(s, w_a[i], w_j[i], fixed[i], moving[i], kappa);
        if (i < n) max_grad = std::max(max_grad, surr[i].rho.norm());
    }
    if (max_grad < 1e-15 || n < 2) {  // no ascent direction anywhere
        TrajectoryStep flat;
        flat.positions = moving;
        flat.surrogate = 0.0;
        for (int i = 1; i <= n; ++i) flat.surrogate += surr[i].alpha / n;
        return flat;
    }

    ConicProblem prob;
    VarRef u = prob.add_vector_var("u", 2 * (n - 1));  // slots 1..N-1
    auto coord = [&](int slot, int axis) { return u.offset + 2 * (slot - 1) + axis; };

    LinExpr objective;
    for (int i = 1; i <= n; ++i) {
        const auto& c = surr[i];
        objective.add_constant((c.alpha - c.rho.dot(moving[i])) / n);
        if (i < n) {
            objective.add(coord(i, 0), c.rho.x() / n);
            objective.add(coord(i, 1), c.rho.y() / n);
        } else {
            objective.add_constant(c.rho.dot(moving[i]) / n);  // endpoint slot is fixed
        }
        // linearized covertness: mu + vartheta^T (u - ref) <= rhs
        if (i < n) {
            LinExpr cov(c.mu - c.vartheta.dot(moving[i]) - c.covert_rhs);
            cov.add(coord(i, 0), c.vartheta.x());
            cov.add(coord(i, 1), c.vartheta.y());
            prob.add_le(cov);
        } else if (c.mu > c.covert_rhs + 1e-9 * (1.0 + std::abs(c.covert_rhs))) {
            return std::nullopt;  // fixed endpoint slot violates the linearized form
        }
        // trust region around the expansion point
        if (i < n) {
            std::vector<LinExpr> diff{LinExpr(-moving[i].x()).add(coord(i, 0), 1.0),
                                      LinExpr(-moving[i].y()).add(coord(i, 1), 1.0)};
            prob.add_soc(std::move(diff), LinExpr(radius));
        }
    }
    prob.add_linear_objective(objective);

    double vmax = max_displacement(s);
    for (int i = 1; i <= n; ++i) {  // maneuver chain
        std::vector<LinExpr> diff;
        for (int axis = 0; axis < 2; ++axis) {
            LinExpr e;
            if (i < n)
                e.add(coord(i, axis), 1.0);
            else
                e.add_constant(endpoint_last(axis));
            if (i > 1)
                e.add(coord(i - 1, axis), -1.0);
            else
                e.add_constant(-endpoint_first(axis));
            diff.push_back(std::move(e));
        }
        prob.add_soc(std::move(diff), LinExpr(vmax));
    }

    Eigen::VectorXd x0(prob.dim());
    for (int i = 1; i < n; ++i) {
        x0(2 * (i - 1)) = moving[i].x();
        x0(2 * (i - 1) + 1) = moving[i].y();
    }
    ConicSolverOptions opts;
    opts.eps_gap = 1e-8;
    ConicSolution sol = solve_conic(prob, x0, opts);
    if (sol.status == SolveStatus::infeasible) return std::nullopt;

    TrajectoryStep step;
    step.positions.resize(n + 1);
    step.positions[0] = endpoint_first;
    step.positions[n] = endpoint_last;
    for (int i = 1; i < n; ++i)
        step.positions[i] = Vec2(sol.x(2 * (i - 1)), sol.x(2 * (i - 1) + 1));
    step.surrogate = sol.objective;
    return step;
}

inline std::optional<TrajectoryStep> alice_trajectory_step(const Scenario& s,
                                                           const std::vector<CMat>& w_a,
                                                           const std::vector<CMat>& w_j,
                                                           const TrajectoryPlan& plan,
                                                           double kappa, double radius) {
    return trajectory_step(s, w_a, w_j, plan, kappa, radius, true);
}

inline std::optional<TrajectoryStep> jack_trajectory_step(const Scenario& s,
                                                          const std::vector<CMat>& w_a,
                                                          const std::vector<CMat>& w_j,
                                                          const TrajectoryPlan& plan,
                                                          double kappa, double radius) {
    return trajectory_step(s, w_a, w_j, plan, kappa, radius, false);
}

struct TrajectoryRefinement {
    int accepted_steps = 0;
    int rejected_steps = 0;
    double acr = 0.0;        // true ACR with the fixed beamformers after the loop
    bool stalled = false;    // radius fell below the stall threshold
};

/// Safeguarded SCA loop for one UAV: a step is kept only when the raw
/// covertness constraint still holds at the new positions and the true
/// objective did not decrease. The radius shrinks geometrically whether
/// or not the step was accepted.
inline TrajectoryRefinement refine_trajectory(const Scenario& s, const std::vector<CMat>& w_a,
                                              const std::vector<CMat>& w_j, TrajectoryPlan& plan,
                                              double kappa, const AlgorithmConfig& cfg,
                                              bool move_alice) {
    TrajectoryRefinement rep;
    TrustRegionState state{cfg.trust_init(s, move_alice),
                           move_alice ? cfg.shrink_alice : cfg.shrink_jack, 0};
    double conv = move_alice ? cfg.conv_alice : cfg.conv_jack;
    const int n = plan.slots();
    double cur = detail::plan_cco_acr(s, w_a, w_j, plan.alice, plan.jack);

    for (int it = 0; it < cfg.max_traj_iters; ++it) {
        if (state.radius < cfg.stall_radius) {
            rep.stalled = true;
            break;
        }
        auto step = trajectory_step(s, w_a, w_j, plan, kappa, state.radius, move_alice);
        state.step();
        if (!step.has_value()) {
            ++rep.rejected_steps;
            continue;
        }
        const auto& cand = step->positions;
        bool covert_ok = true;
        for (int i = 1; i <= n && covert_ok; ++i) {
            const Vec2& ua = move_alice ? cand[i] : plan.alice[i];
            const Vec2& uj = move_alice ? plan.jack[i] : cand[i];
            covert_ok = detail::covert_slack_at(s, w_a[i], w_j[i], ua, uj, kappa) >= -1e-9 * s.noise_willie();
        }
        double acr_new = -std::numeric_limits<double>::infinity();
        if (covert_ok) {
            acr_new = move_alice ? detail::plan_cco_acr(s, w_a, w_j, cand, plan.jack)
                                 : detail::plan_cco_acr(s, w_a, w_j, plan.alice, cand);
        }
        if (covert_ok && acr_new >= cur - 1e-12) {
            (move_alice ? plan.alice : plan.jack) = cand;
            ++rep.accepted_steps;
            double gain = acr_new - cur;
            cur = acr_new;
            if (gain <= conv) break;
        } else {
            ++rep.rejected_steps;
        }
    }
    rep.acr = cur;
    return rep;
}

}  // namespace covisac
