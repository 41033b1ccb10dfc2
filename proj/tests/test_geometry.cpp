#include "covisac/geometry.hpp"

#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace covisac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

static Scenario toy_scenario() {
    Scenario s;
    s.antennas = 4;
    s.antenna_spacing_ratio = 0.5;
    s.altitude_alice = 150.0;
    s.altitude_jack = 120.0;
    s.pathloss_ref_db = -30.0;
    return s;
}

TEST_CASE("3-D distance") {
    CHECK_THAT(distance(150, {0, 0}, {30, 40}), WithinAbs(158.113883, 1e-6));
    CHECK(distance(120, {50, 30}, {50, 30}) == 120.0);
    CHECK_THAT(distance(120, {50, 30}, {50, 35}), WithinAbs(std::sqrt(120.0 * 120 + 25), 1e-9));
}

TEST_CASE("AoD cosine") {
    CHECK(aod_cos(100, {7, 9}, {7, 9}) == 1.0);
    CHECK_THAT(aod_cos(150, {0, 0}, {30, 40}), WithinAbs(0.948683, 1e-6));
    // monotone decreasing in horizontal offset
    double prev = 1.0;
    for (double off = 1.0; off < 1e5; off *= 10.0) {
        double c = aod_cos(150, {0, 0}, {off, 0});
        CHECK(c < prev);
        CHECK(c > 0.0);
        prev = c;
    }
}

TEST_CASE("steering vector closed forms") {
    CVec overhead = steering_vector(0.5, 4, 1.0);
    for (int k = 0; k < 4; ++k)
        CHECK_THAT(std::abs(overhead(k) - cplx(k % 2 == 0 ? 1 : -1, 0)), WithinAbs(0, 1e-12));
    CVec broadside = steering_vector(0.5, 4, 0.0);
    for (int k = 0; k < 4; ++k) CHECK_THAT(std::abs(broadside(k) - cplx(1, 0)), WithinAbs(0, 1e-12));
    double ct = 0.948683;
    CVec a = steering_vector(0.5, 4, ct);
    CHECK(a(0) == cplx(1, 0));
    for (int k = 1; k < 4; ++k)
        CHECK_THAT(std::arg(a(k) * std::conj(a(k - 1))), WithinAbs(2 * kPi * 0.5 * ct, 1e-9));
}

TEST_CASE("steering entries are unit modulus with first entry one") {
    auto& gen = testing::rng(11);
    for (int t = 0; t < 200; ++t) {
        int m = 1 + static_cast<int>(testing::uniform(gen, 1, 8.99));
        double ct = testing::uniform(gen, -1.0, 1.0);
        CVec a = steering_vector(0.5, m, ct);
        CHECK(a(0) == cplx(1, 0));
        for (int k = 0; k < m; ++k) CHECK_THAT(std::abs(a(k)), WithinRel(1.0, 1e-12));
        CHECK_THAT(a.squaredNorm(), WithinRel(static_cast<double>(m), 1e-12));
    }
}

TEST_CASE("channel norm matches M beta / d^2") {
    Scenario s = toy_scenario();
    // beta = 1e-3, d^2 = 25000 at altitude 150 with 50 m offset
    CVec h = channel(s, UavId::alice, {0, 0}, {30, 40});
    CHECK_THAT(h.squaredNorm(), WithinRel(4 * 1e-3 / 25000.0, 1e-12));

    auto& gen = testing::rng(12);
    for (int t = 0; t < 1000; ++t) {
        Vec2 u(testing::uniform(gen, -100, 100), testing::uniform(gen, -100, 100));
        Vec2 v(testing::uniform(gen, -100, 100), testing::uniform(gen, -100, 100));
        UavId id = t % 2 ? UavId::alice : UavId::jack;
        double d2 = distance_sq(uav_altitude(s, id), u, v);
        CVec hh = channel(s, id, u, v);
        CHECK_THAT(hh.squaredNorm(), WithinRel(s.antennas * s.pathloss_ref() / d2, 1e-12));
    }
}

TEST_CASE("zero path gain gives the zero channel") {
    Scenario s = toy_scenario();
    s.pathloss_ref_db = -std::numeric_limits<double>::infinity();
    CVec h = channel(s, UavId::jack, {1, 2}, {3, 4});
    CHECK(h.norm() == 0.0);
}

TEST_CASE("channel matrix is the rank-one outer product") {
    CVec e1 = CVec::Zero(4);
    e1(0) = 1.0;
    CMat m = channel_matrix(e1);
    CHECK(std::real(m(0, 0)) == 1.0);
    CHECK_THAT(m.cwiseAbs().sum(), WithinRel(1.0, 1e-12));

    auto& gen = testing::rng(13);
    for (int t = 0; t < 100; ++t) {
        CVec h = testing::random_cvec(gen, 4, 1.0);
        CMat w = channel_matrix(h);
        CHECK_THAT(std::abs(w.trace()), WithinRel(h.squaredNorm(), 1e-12));
        Eigen::SelfAdjointEigenSolver<CMat> es(w);
        CHECK_THAT(es.eigenvalues()(3), WithinRel(h.squaredNorm(), 1e-9));
        for (int i = 0; i < 3; ++i)
            CHECK(std::abs(es.eigenvalues()(i)) <= 1e-10 * h.squaredNorm());
        CHECK((w - w.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * w.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("|a^H w|^2 equals tr(w w^H A) for random geometries") {
    Scenario s = toy_scenario();
    auto& gen = testing::rng(14);
    for (int t = 0; t < 1000; ++t) {
        Vec2 u(testing::uniform(gen, -80, 80), testing::uniform(gen, -80, 80));
        Vec2 v(testing::uniform(gen, -80, 80), testing::uniform(gen, -80, 80));
        CVec a = steering_vector(s, s.altitude_alice, u, v);
        CVec w = testing::random_cvec(gen, s.antennas, 1.0);
        double direct = std::norm(a.dot(w));
        double traced = std::real((channel_matrix(w) * channel_matrix(a)).trace());
        CHECK_THAT(traced, WithinRel(direct, 1e-9));
    }
}
