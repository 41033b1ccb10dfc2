#include "covisac/beamforming.hpp"

#include "oracles.hpp"
#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace covisac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Scenario toy_scenario(int m) {
    Scenario s;
    s.antennas = m;
    s.antenna_spacing_ratio = 0.5;
    s.altitude_alice = 150.0;
    s.altitude_jack = 120.0;
    s.pathloss_ref_db = -30.0;
    s.noise_bob_dbm = -80.0;
    s.noise_willie_dbm = -80.0;
    s.power_alice_dbm = 30.0;
    s.power_jack_dbm = 20.0;
    s.residual_sic_rb_db = -8.0;
    s.residual_sic_jb_db = -8.0;
    s.residual_sic_rw_db = -8.0;
    s.bob = Vec2(35, 40);
    s.willie = Vec2(65, 40);
    return s;
}

struct Instance {
    SlotChannels ch;
    BeamformingParams bp;
    Vec2 u_a, u_j;
    Scenario scen;
};

Instance random_instance(std::mt19937& gen, int m, double epsilon = 0.1) {
    Scenario s = toy_scenario(m);
    s.bob = Vec2(testing::uniform(gen, -40, 40), testing::uniform(gen, -40, 40));
    s.willie = Vec2(testing::uniform(gen, -40, 40), testing::uniform(gen, -40, 40));
    Instance inst;
    inst.scen = s;
    inst.u_a = Vec2(testing::uniform(gen, -60, 60), testing::uniform(gen, -60, 60));
    inst.u_j = Vec2(testing::uniform(gen, -60, 60), testing::uniform(gen, -60, 60));
    inst.ch = make_slot_channels(s, inst.u_a, inst.u_j);
    inst.bp = BeamformingParams::from(s, solve_kappa(epsilon));
    return inst;
}

double slot_rate(const SlotChannels& ch, const BeamformerSet& set, const BeamformingParams& bp,
                 Phase phase) {
    CMat rr = phase == Phase::ccs ? set.sensing_cov : CMat();
    return rate_from_sinr(sinr_bob(phase, ch.h_ab, ch.h_jb, set.w_a, set.w_j, rr, bp.varpi_rb,
                                   bp.varpi_jb, bp.sigma_b2));
}

}  // namespace

TEST_CASE("distant warden: full-power MRC toward Bob, jamming off") {
    Scenario s = toy_scenario(4);
    s.willie = Vec2(1e5, 1e5);
    Vec2 u_a(30, 35), u_j(40, 20);
    SlotChannels ch = make_slot_channels(s, u_a, u_j);
    BeamformingParams bp = BeamformingParams::from(s, solve_kappa(0.1));
    AlgorithmConfig cfg;

    auto [set, trace] = cco_beamforming(ch, bp, cfg);
    double mrc_rate = std::log2(1.0 + bp.p_a_max * ch.h_ab.squaredNorm() / bp.sigma_b2);
    CHECK_THAT(slot_rate(ch, set, bp, Phase::cco), WithinRel(mrc_rate, 1e-4));
    CHECK_THAT(set.w_a.squaredNorm(), WithinRel(bp.p_a_max, 1e-3));
    CHECK(set.w_j.squaredNorm() < 1e-5 * bp.p_j_max);  // jamming only hurts Bob here
}

TEST_CASE("zero alice budget gives silence") {
    auto& gen = testing::rng(51);
    Instance inst = random_instance(gen, 4);
    inst.bp.p_a_max = 0.0;
    AlgorithmConfig cfg;
    auto [set, trace] = cco_beamforming(inst.ch, inst.bp, cfg);
    CHECK(set.w_a.norm() == 0.0);
    CHECK(slot_rate(inst.ch, set, inst.bp, Phase::cco) == 0.0);
}

TEST_CASE("cco solutions respect every raw constraint") {
    auto& gen = testing::rng(52);
    AlgorithmConfig cfg;
    for (int t = 0; t < 12; ++t) {
        Instance inst = random_instance(gen, 4, t % 2 ? 0.1 : 0.05);
        auto [set, trace] = cco_beamforming(inst.ch, inst.bp, cfg);
        CHECK(set.alice_power() <= inst.bp.p_a_max + 1e-9);
        CHECK(set.jack_power() <= inst.bp.p_j_max + 1e-9);
        double slack = covertness_slack(inst.ch.h_aw, inst.ch.h_jw, set.w_a, set.w_j, {},
                                        inst.bp.kappa, inst.bp.sigma_w2, inst.bp.varpi_rw,
                                        Phase::cco);
        CHECK(slack >= -1e-9);
        REQUIRE_FALSE(trace.iterations.empty());
        CHECK(trace.iterations.back().rank_ratio_a >= cfg.rank_one_ratio_min);
        CHECK(trace.iterations.back().rank_ratio_j >= cfg.rank_one_ratio_min);
        // monotone ascent of the penalized true objective within a phase
        for (size_t i = 1; i < trace.iterations.size(); ++i)
            if (trace.iterations[i].penalty == trace.iterations[i - 1].penalty)
                CHECK(trace.iterations[i].true_objective >=
                      trace.iterations[i - 1].true_objective - 1e-9);
    }
}

TEST_CASE("final rate dominates the documented initialization") {
    auto& gen = testing::rng(53);
    AlgorithmConfig cfg;
    for (int t = 0; t < 8; ++t) {
        Instance inst = random_instance(gen, 4);
        // reconstruct the initialization independently: MRC jamming at full
        // power, MRC Alice scaled onto the covertness budget
        CVec wj = std::sqrt(inst.bp.p_j_max) * inst.ch.h_jw / inst.ch.h_jw.norm();
        double budget = (inst.bp.kappa - 1.0) * (inst.bp.sigma_w2 + std::norm(inst.ch.h_jw.dot(wj)));
        CVec dir = inst.ch.h_ab / inst.ch.h_ab.norm();
        double leak = std::norm(inst.ch.h_aw.dot(dir));
        double p = inst.bp.p_a_max;
        if (leak > 0.0) p = std::min(p, budget / leak);
        BeamformerSet init;
        init.w_a = std::sqrt(p) * dir;
        init.w_j = wj;
        double init_rate = slot_rate(inst.ch, init, inst.bp, Phase::cco);
        auto [set, trace] = cco_beamforming(inst.ch, inst.bp, cfg);
        CHECK(slot_rate(inst.ch, set, inst.bp, Phase::cco) >= init_rate - 1e-9);
    }
}

TEST_CASE("M = 2 cco matches the exhaustive grid oracle") {
    auto& gen = testing::rng(54);
    AlgorithmConfig cfg;
    for (int t = 0; t < 5; ++t) {
        Instance inst = random_instance(gen, 2);
        auto [set, trace] = cco_beamforming(inst.ch, inst.bp, cfg);
        double got = slot_rate(inst.ch, set, inst.bp, Phase::cco);
        auto oracle = testing::cco_grid_oracle(inst.ch, inst.bp);
        INFO("instance " << t << ": solver " << got << " oracle " << oracle.rate);
        CHECK(oracle.points >= 10000);
        CHECK_THAT(got, WithinAbs(oracle.rate, 1e-3));
    }
}

TEST_CASE("cco FOT surrogate: tangent at the expansion point, minorant elsewhere") {
    auto& gen = testing::rng(55);
    for (int t = 0; t < 5; ++t) {
        Instance inst = random_instance(gen, 4);
        CVec va = testing::random_cvec(gen, 4, 0.3);
        CVec vj = testing::random_cvec(gen, 4, 0.2);
        CMat wa_ref = va * va.adjoint();
        CMat wj_ref = vj * vj.adjoint();
        double tangent = testing::cco_fot_surrogate(inst.ch, inst.bp, wa_ref, wj_ref, wa_ref, wj_ref);
        double truth = testing::cco_true_rate(inst.ch, inst.bp, wa_ref, wj_ref);
        CHECK_THAT(tangent, WithinAbs(truth, 1e-9));
        for (int k = 0; k < 100; ++k) {
            CMat wa = testing::random_psd(gen, 4, testing::uniform(gen, 0.0, 1.0));
            CMat wj = testing::random_psd(gen, 4, testing::uniform(gen, 0.0, 0.4));
            double sur = testing::cco_fot_surrogate(inst.ch, inst.bp, wa_ref, wj_ref, wa, wj);
            double tru = testing::cco_true_rate(inst.ch, inst.bp, wa, wj);
            CHECK(sur <= tru + 1e-9);
        }
    }
}

TEST_CASE("ccs FOT surrogate: tangent and minorant") {
    auto& gen = testing::rng(56);
    Instance inst = random_instance(gen, 4);
    CVec vj = testing::random_cvec(gen, 4, 0.2);
    CMat wj_ref = vj * vj.adjoint();
    CMat rr_ref = testing::random_psd(gen, 4, 0.3);
    CMat wa_any = testing::random_psd(gen, 4, 0.5);
    double tangent =
        testing::ccs_fot_surrogate(inst.ch, inst.bp, wj_ref, rr_ref, wa_any, wj_ref, rr_ref);
    double truth = testing::ccs_true_rate(inst.ch, inst.bp, wa_any, wj_ref, rr_ref);
    CHECK_THAT(tangent, WithinAbs(truth, 1e-9));
    for (int k = 0; k < 100; ++k) {
        CMat wa = testing::random_psd(gen, 4, 0.5);
        CMat wj = testing::random_psd(gen, 4, 0.3);
        CMat rr = testing::random_psd(gen, 4, 0.3);
        double sur = testing::ccs_fot_surrogate(inst.ch, inst.bp, wj_ref, rr_ref, wa, wj, rr);
        double tru = testing::ccs_true_rate(inst.ch, inst.bp, wa, wj, rr);
        CHECK(sur <= tru + 1e-9);
    }
}

TEST_CASE("vacuous sensing threshold reduces ccs to cco") {
    Scenario s = toy_scenario(4);
    s.willie = Vec2(1e5, 1e5);  // covertness inactive
    s.targets = {Vec2(10, 10)};
    Vec2 u_a(30, 35), u_j(40, 20);
    SlotChannels ch = make_slot_channels(s, u_a, u_j);
    BeamformingParams bp = BeamformingParams::from(s, solve_kappa(0.1));
    bp.gamma = 0.0;
    AlgorithmConfig cfg;
    std::vector<SensingTask> tasks{make_sensing_task(s, u_a, u_j, 0)};

    auto [cco_set, t1] = cco_beamforming(ch, bp, cfg);
    auto [ccs_set, t2] = ccs_beamforming(ch, tasks, bp, cfg);
    double cco_rate = slot_rate(ch, cco_set, bp, Phase::cco);
    double ccs_rate = slot_rate(ch, ccs_set, bp, Phase::ccs);
    CHECK(ccs_rate >= cco_rate - 1e-3);
    // with varpi_rb > 0 and no sensing requirement the covariance is idle power
    CHECK(std::real(ccs_set.sensing_cov.trace()) <= 1e-3 * bp.p_a_max);
}

TEST_CASE("sensing thresholds: reachable ones bind, unreachable ones throw") {
    Scenario s = toy_scenario(4);
    s.targets = {Vec2(20, 10)};
    Vec2 u_a(25, 15), u_j(10, 5);
    SlotChannels ch = make_slot_channels(s, u_a, u_j);
    std::vector<SensingTask> tasks{make_sensing_task(s, u_a, u_j, 0)};
    BeamformingParams bp = BeamformingParams::from(s, solve_kappa(0.1));
    AlgorithmConfig cfg;

    SECTION("feasible threshold is met") {
        bp.gamma = 0.5 * bp.p_a_max / tasks[0].dist2_a;  // identity covariance reaches this
        auto [set, trace] = ccs_beamforming(ch, tasks, bp, cfg);
        double gain = beampattern_sum_gain(u_a, u_j, s.targets[0], set.w_a, set.w_j,
                                           set.sensing_cov, s.altitude_alice, s.altitude_jack,
                                           s.antenna_spacing_ratio);
        CHECK(gain >= bp.gamma * (1.0 - 1e-6));
        CHECK(set.alice_power() <= bp.p_a_max + 1e-9);
        double slack = covertness_slack(ch.h_aw, ch.h_jw, set.w_a, set.w_j, set.sensing_cov,
                                        bp.kappa, bp.sigma_w2, bp.varpi_rw, Phase::ccs);
        CHECK(slack >= -1e-9);
    }
    SECTION("unreachable threshold names the binding constraint") {
        double upper = bp.p_a_max * s.antennas / tasks[0].dist2_a +
                       bp.p_j_max * s.antennas / tasks[0].dist2_j;
        bp.gamma = 2.0 * upper;
        CHECK_THROWS_AS(ccs_beamforming(ch, tasks, bp, cfg), scheme_infeasible_error);
        try {
            ccs_beamforming(ch, tasks, bp, cfg);
        } catch (const scheme_infeasible_error& e) {
            CHECK(e.constraint() == "sensing threshold");
        }
    }
}

TEST_CASE("M = 2 ccs with one target matches the grid oracle") {
    auto& gen = testing::rng(57);
    AlgorithmConfig cfg;
    for (int t = 0; t < 2; ++t) {
        Instance inst = random_instance(gen, 2);
        inst.scen.targets = {Vec2(testing::uniform(gen, -30, 30), testing::uniform(gen, -30, 30))};
        SensingTask task = make_sensing_task(inst.scen, inst.u_a, inst.u_j, 0);
        // a threshold between "free" and "hopeless": half the identity-covariance gain
        inst.bp.gamma = 0.5 * inst.bp.p_a_max / task.dist2_a;
        auto [set, trace] = ccs_beamforming(inst.ch, {task}, inst.bp, cfg);
        double got = slot_rate(inst.ch, set, inst.bp, Phase::ccs);
        auto oracle = testing::ccs_grid_oracle(inst.ch, task, inst.bp);
        INFO("instance " << t << ": solver " << got << " oracle " << oracle.rate);
        CHECK(oracle.points >= 10000);
        CHECK_THAT(got, WithinAbs(oracle.rate, 1e-3));
    }
}
