#pragma once

#include "covisac/covert.hpp"
#include "covisac/geometry.hpp"

#include <vector>

namespace covisac {

// ============================================================
// Bob-side SINRs/rates, beampattern sum-gain, and the closed
// forms used by the trajectory surrogates.
// ============================================================

struct SlotRates {
    int slot = 0;
    Phase phase = Phase::cco;
    double sinr = 0.0;
    double rate = 0.0;  // bits/s/Hz
};

struct BeampatternGain {
    int target = 0;
    int slot = 0;
    double gain = 0.0;
};

inline double sinr_bob(Phase phase, const CVec& h_ab, const CVec& h_jb, const CVec& w_a,
                       const CVec& w_j, const CMat& sensing_cov, double varpi_rb,
                       double varpi_jb, double sigma_b_sq) {
    double signal = w_a.size() > 0 ? std::norm(h_ab.dot(w_a)) : 0.0;
    double denom = sigma_b_sq;
    if (w_j.size() > 0) denom += varpi_jb * std::norm(h_jb.dot(w_j));
    if (phase == Phase::ccs && sensing_cov.size() > 0) {
        require_psd(sensing_cov, "sensing covariance");
        denom += varpi_rb * quad_form(sensing_cov, h_ab);
    }
    return signal / denom;
}

inline double rate_from_sinr(double sinr) { return std::log2(1.0 + sinr); }

/// Arithmetic mean of the per-slot rates belonging to one phase.
inline double average_covert_rate(const std::vector<SlotRates>& rates, Phase phase) {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : rates) {
        if (r.phase != phase) continue;
        sum += r.rate;
        ++count;
    }
    if (count == 0)
        throw invariant_error(std::string("no slots in phase ") + phase_name(phase));
    return sum / count;
}

/// Distance-normalised beampattern sum-gain toward a target (beta-free).
inline double beampattern_sum_gain(const Vec2& u_a, const Vec2& u_j, const Vec2& target,
                                   const CVec& w_a, const CVec& w_j, const CMat& sensing_cov,
                                   double altitude_a, double altitude_j, double spacing_ratio) {
    if (sensing_cov.size() > 0) require_psd(sensing_cov, "sensing covariance");
    int m = static_cast<int>(w_a.size() > 0 ? w_a.size()
                                            : (w_j.size() > 0 ? w_j.size() : sensing_cov.rows()));
    CVec a_a = steering_vector(spacing_ratio, m, aod_cos(altitude_a, u_a, target));
    CVec a_j = steering_vector(spacing_ratio, m, aod_cos(altitude_j, u_j, target));
    double num_a = 0.0;
    if (w_a.size() > 0) num_a += std::norm(a_a.dot(w_a));
    if (sensing_cov.size() > 0) num_a += quad_form(sensing_cov, a_a);
    double num_j = w_j.size() > 0 ? std::norm(a_j.dot(w_j)) : 0.0;
    return num_a / distance_sq(altitude_a, u_a, target) +
           num_j / distance_sq(altitude_j, u_j, target);
}

// ------------------------------------------------------------
// eta(W, d) = a^H W a expressed through |W_kl| and its phases;
// the form whose distance derivative drives the trajectory SCA.
// ------------------------------------------------------------
inline double eta(const CMat& w, double spacing_ratio, double altitude, double dist) {
    const int m = static_cast<int>(w.rows());
    double val = 0.0;
    for (int l = 0; l < m; ++l) val += std::real(w(l, l));
    for (int k = 0; k < m; ++k)
        for (int l = k + 1; l < m; ++l) {
            double mag = std::abs(w(k, l));
            if (mag == 0.0) continue;
            double phase = std::arg(w(k, l)) +
                           2.0 * kPi * spacing_ratio * altitude * (l - k) / dist;
            val += 2.0 * mag * std::cos(phase);
        }
    return val;
}

/// d(eta)/d(u) for the UAV at u serving node v; closed form matching
/// central finite differences of eta(W, distance(u)).
inline Vec2 eta_gradient(const CMat& w, double spacing_ratio, double altitude, const Vec2& u,
                         const Vec2& v) {
    const int m = static_cast<int>(w.rows());
    double dist = distance(altitude, u, v);
    double scale = 0.0;  // d(eta)/d(dist) * (1/dist)
    for (int k = 0; k < m; ++k)
        for (int l = k + 1; l < m; ++l) {
            double mag = std::abs(w(k, l));
            if (mag == 0.0) continue;
            double c = 2.0 * kPi * spacing_ratio * altitude * (l - k);
            scale += 2.0 * mag * std::sin(std::arg(w(k, l)) + c / dist) * c /
                     (dist * dist * dist);
        }
    return scale * (u - v);
}

}  // namespace covisac
