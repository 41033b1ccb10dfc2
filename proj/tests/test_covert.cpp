#include "covisac/covert.hpp"

#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace covisac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("hypothesis variances") {
    auto& gen = testing::rng(21);
    CVec h_aw = testing::random_cvec(gen, 4, 1.0);
    CVec h_jw = testing::random_cvec(gen, 4, 1.0);
    CVec zero;
    CMat none;

    SECTION("silence: both variances reduce to noise") {
        auto v = hypothesis_variances(h_aw, h_jw, zero, zero, none, 0.1585, 1e-11);
        CHECK(v.sigma0_sq == 1e-11);
        CHECK(v.sigma1_sq == 1e-11);
    }
    SECTION("unit-ratio construction") {
        // scale w_a so that |h_aw^H w_a|^2 = 1e-11 exactly
        CVec w_a = h_aw / h_aw.norm();
        w_a *= std::sqrt(1e-11) / h_aw.norm();
        auto v = hypothesis_variances(h_aw, h_jw, w_a, zero, none, 0.0, 1e-11);
        CHECK_THAT(v.ratio(), WithinRel(2.0, 1e-9));
    }
    SECTION("perfect sensing cancellation at Willie") {
        CMat r = testing::random_psd(gen, 4, 1.0);
        auto v = hypothesis_variances(h_aw, h_jw, zero, zero, r, 0.0, 1e-11);
        CHECK(v.sigma0_sq == 1e-11);
    }
    SECTION("non-PSD covariance rejected") {
        CMat r = -CMat::Identity(4, 4);
        CHECK_THROWS_AS(hypothesis_variances(h_aw, h_jw, zero, zero, r, 0.1, 1e-11),
                        invariant_error);
    }
}

TEST_CASE("minimum detection error probability closed form") {
    CHECK(min_dep({1.0, 1.0}) == 1.0);
    CHECK_THAT(min_dep({1.0, 2.0}), WithinAbs(0.75, 1e-12));  // 1 + 1/4 - 1/2
    // monotone decreasing in the variance ratio
    double prev = 1.0;
    for (double r = 1.0 + 1e-6; r < 1e6; r *= 3.7) {
        double dep = min_dep({1.0, r});
        CHECK(dep <= prev + 1e-15);
        CHECK(dep >= 0.0);
        CHECK(dep <= 1.0);
        prev = dep;
    }
}

TEST_CASE("optimal radiometer threshold") {
    CHECK_THAT(optimal_threshold({1.0, 2.0}), WithinAbs(2.0 * std::log(2.0), 1e-12));
    CHECK_THROWS_WITH(optimal_threshold({1.0, 1.0}),
                      Catch::Matchers::ContainsSubstring("no distinguishing power"));
    double phi = optimal_threshold({1.0, 2.0});
    CHECK(phi > 1.0);
    CHECK(phi < 2.0);
}

TEST_CASE("monte-carlo radiometer reproduces the closed-form MDEP") {
    std::mt19937_64 gen(987654321);
    std::exponential_distribution<double> unit_exp(1.0);
    for (double r : {1.5, 2.0, 4.0}) {
        HypothesisVariances v{1.0, r};
        double threshold = optimal_threshold(v);
        const int n = 1'000'000;
        long errors = 0;
        for (int i = 0; i < n; ++i) {
            // |y|^2 under each hypothesis is exponential with the matching mean
            if (v.sigma0_sq * unit_exp(gen) > threshold) ++errors;  // false alarm
            if (v.sigma1_sq * unit_exp(gen) <= threshold) ++errors;  // missed detection
        }
        double estimate = static_cast<double>(errors) / n;
        CHECK_THAT(estimate, WithinAbs(min_dep(v), 0.005));
    }
}

TEST_CASE("KL divergence") {
    CHECK(kl_divergence({3.0, 3.0}) == 0.0);
    CHECK_THAT(kl_divergence({1.0, 2.0}), WithinAbs(std::log(2.0) - 0.5, 1e-12));
    auto& gen = testing::rng(22);
    for (int i = 0; i < 1000; ++i) {
        double r = testing::uniform(gen, 1.0, 100.0);
        CHECK(kl_divergence({1.0, r}) >= 0.0);
    }
}

TEST_CASE("kappa root of ln(k) + 1/k - 1 = 2 eps^2") {
    double k = solve_kappa(0.1);
    CHECK_THAT(k, WithinAbs(1.230, 5e-4));
    CHECK_THAT(std::log(k) + 1.0 / k - 1.0, WithinAbs(0.02, 1e-10));
    k = solve_kappa(0.05);
    CHECK_THAT(std::log(k) + 1.0 / k - 1.0, WithinAbs(0.005, 1e-10));
    CHECK(solve_kappa(1e-6) > 1.0);
    CHECK_THAT(solve_kappa(1e-6), WithinAbs(1.0, 1e-2));
    CHECK_THROWS_AS(solve_kappa(0.0), invariant_error);
    CHECK_THROWS_AS(solve_kappa(1.0), invariant_error);
}

TEST_CASE("covertness slack") {
    auto& gen = testing::rng(23);
    CVec h_aw = testing::random_cvec(gen, 4, 1.0);
    CVec h_jw = testing::random_cvec(gen, 4, 1.0);
    CVec zero;
    CMat none;
    double kappa = solve_kappa(0.1);
    double sw2 = 1e-11;

    SECTION("silence is covert") {
        double s = covertness_slack(h_aw, h_jw, zero, zero, none, kappa, sw2, 0.1, Phase::cco);
        CHECK_THAT(s, WithinRel((kappa - 1.0) * sw2, 1e-12));
        CHECK(s > 0.0);
    }
    SECTION("boundary case") {
        CVec w_a = h_aw * std::sqrt((kappa - 1.0) * sw2) / h_aw.squaredNorm();
        double s = covertness_slack(h_aw, h_jw, w_a, zero, none, kappa, sw2, 0.1, Phase::cco);
        CHECK_THAT(s, WithinAbs(0.0, 1e-20));
    }
    SECTION("jamming received at Willie relaxes the constraint linearly") {
        CVec w_j = testing::random_cvec(gen, 4, 0.3);
        double delta = std::norm(h_jw.dot(w_j));
        double s0 = covertness_slack(h_aw, h_jw, zero, zero, none, kappa, sw2, 0.1, Phase::cco);
        double s1 = covertness_slack(h_aw, h_jw, zero, w_j, none, kappa, sw2, 0.1, Phase::cco);
        CHECK_THAT(s1 - s0, WithinRel((kappa - 1.0) * delta, 1e-9));
    }
    SECTION("ccs includes the sensing term, cco ignores it") {
        CMat r = testing::random_psd(gen, 4, 1.0);
        double cco = covertness_slack(h_aw, h_jw, zero, zero, r, kappa, sw2, 0.5, Phase::cco);
        double ccs = covertness_slack(h_aw, h_jw, zero, zero, r, kappa, sw2, 0.5, Phase::ccs);
        CHECK(cco == (kappa - 1.0) * sw2);
        CHECK_THAT(ccs - cco, WithinRel((kappa - 1.0) * 0.5 * quad_form(r, h_aw), 1e-9));
    }
}

TEST_CASE("bound chain: MDEP >= 1 - sqrt(D/2)") {
    auto& gen = testing::rng(24);
    for (int i = 0; i < 10000; ++i) {
        double r = testing::uniform(gen, 1.0, 100.0);
        HypothesisVariances v{1.0, r};
        CHECK(min_dep(v) >= 1.0 - std::sqrt(0.5 * kl_divergence(v)) - 1e-12);
    }
}

TEST_CASE("slack >= 0 implies the KL bound implies the MDEP requirement") {
    auto& gen = testing::rng(25);
    double eps = 0.1;
    double kappa = solve_kappa(eps);
    double sw2 = 1e-11;
    int feasible_seen = 0;
    for (int i = 0; i < 2000; ++i) {
        CVec h_aw = testing::random_cvec(gen, 4, 1e-4);
        CVec h_jw = testing::random_cvec(gen, 4, 1e-4);
        CVec w_a = testing::random_cvec(gen, 4, testing::uniform(gen, 0.0, 2e-2));
        CVec w_j = testing::random_cvec(gen, 4, testing::uniform(gen, 0.0, 0.5));
        CMat r_r = testing::random_psd(gen, 4, testing::uniform(gen, 0.0, 0.3));
        double varpi = 0.1585;
        double slack =
            covertness_slack(h_aw, h_jw, w_a, w_j, r_r, kappa, sw2, varpi, Phase::ccs);
        if (slack < 0.0) continue;
        ++feasible_seen;
        auto v = hypothesis_variances(h_aw, h_jw, w_a, w_j, r_r, varpi, sw2);
        CHECK(kl_divergence(v) <= 2.0 * eps * eps + 1e-9);
        CHECK(min_dep(v) >= 1.0 - eps - 1e-9);
    }
    CHECK(feasible_seen > 100);  // the sweep covered feasible points
}
