#pragma once

#include "covisac/geometry.hpp"
#include "covisac/trajectory.hpp"

#include <algorithm>
#include <vector>

namespace covisac {

// ============================================================
// Greedy CCS slot selection by weighted-distance minimization.
// ============================================================

/// alpha_1 * d_ab + alpha_2 * (d_aq + d_jq), all 3-D distances.
inline double weighted_distance(const Vec2& u_a, const Vec2& u_j, const Vec2& bob,
                                const Vec2& target, double altitude_a, double altitude_j,
                                double alpha_comm, double alpha_sense) {
    return alpha_comm * distance(altitude_a, u_a, bob) +
           alpha_sense * (distance(altitude_a, u_a, target) + distance(altitude_j, u_j, target));
}

struct SensingSchedule {
    std::vector<std::vector<int>> slots_per_target;  // D-hat_q, ascending slot order
    std::vector<std::vector<double>> weighted;       // d_q^ccs[n], indexed [q][n-1]

    int target_of_slot(int slot) const {
        for (size_t q = 0; q < slots_per_target.size(); ++q)
            for (int n : slots_per_target[q])
                if (n == slot) return static_cast<int>(q);
        return -1;
    }

    void validate(int num_slots, int slots_per) const {
        std::vector<char> used(num_slots + 1, 0);
        for (const auto& set : slots_per_target) {
            if (static_cast<int>(set.size()) != slots_per)
                throw invariant_error("schedule set size != N_t");
            for (int n : set) {
                if (n < 1 || n > num_slots) throw invariant_error("schedule slot out of range");
                if (used[n]++) throw invariant_error("schedule sets overlap");
            }
        }
    }
};

/// Selection core: per target in index order, take the N_t smallest
/// remaining distances; claimed slots leave the later targets' candidate
/// sets; ties break on the smaller slot index. `tables[q][n-1]` is the
/// weighted distance of slot n for target q.
inline std::vector<std::vector<int>> greedy_select(const std::vector<std::vector<double>>& tables,
                                                   int per_target) {
    const int q_count = static_cast<int>(tables.size());
    const int n = q_count > 0 ? static_cast<int>(tables[0].size()) : 0;
    if (per_target * q_count > n)
        throw invariant_error("not enough slots: N_t * Q exceeds N");
    std::vector<std::vector<int>> sets;
    std::vector<char> taken(n + 1, 0);
    for (int q = 0; q < q_count; ++q) {
        std::vector<std::pair<double, int>> candidates;
        for (int i = 1; i <= n; ++i)
            if (!taken[i]) candidates.emplace_back(tables[q][i - 1], i);
        std::sort(candidates.begin(), candidates.end());
        std::vector<int> chosen;
        for (int k = 0; k < per_target; ++k) {
            taken[candidates[k].second] = 1;
            chosen.push_back(candidates[k].second);
        }
        std::sort(chosen.begin(), chosen.end());
        sets.push_back(std::move(chosen));
    }
    return sets;
}

/// Greedy weighted-distance slot assignment over a CCO-optimized plan.
/// `include_jack` drops the d_jq term for single-UAV schemes.
inline SensingSchedule greedy_schedule(const TrajectoryPlan& plan, const Scenario& s,
                                       bool include_jack = true) {
    const int n = plan.slots();
    const int q_count = s.num_targets();
    const int per_target = s.slots_per_target();
    SensingSchedule sched;
    sched.weighted.assign(q_count, std::vector<double>(n, 0.0));
    for (int q = 0; q < q_count; ++q)
        for (int i = 1; i <= n; ++i) {
            double d = weighted_distance(plan.alice[i], plan.jack[i], s.bob, s.targets[q],
                                         s.altitude_alice, s.altitude_jack, s.sched_weight_comm,
                                         s.sched_weight_sense);
            if (!include_jack)
                d -= s.sched_weight_sense * distance(s.altitude_jack, plan.jack[i], s.targets[q]);
            sched.weighted[q][i - 1] = d;
        }
    sched.slots_per_target = greedy_select(sched.weighted, per_target);
    sched.validate(n, per_target);
    return sched;
}

/// Total weighted distance of a schedule (the greedy objective).
inline double schedule_cost(const SensingSchedule& sched) {
    double total = 0.0;
    for (size_t q = 0; q < sched.slots_per_target.size(); ++q)
        for (int slot : sched.slots_per_target[q]) total += sched.weighted[q][slot - 1];
    return total;
}

}  // namespace covisac
