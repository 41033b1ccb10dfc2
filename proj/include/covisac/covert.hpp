#pragma once

#include "covisac/common.hpp"

#include <Eigen/Eigenvalues>

namespace covisac {

// ============================================================
// Willie-side detection mathematics: likelihood variances,
// detection error probability, KL divergence, kappa root.
// ============================================================

/// Received-power variances at Willie under the two hypotheses.
struct HypothesisVariances {
    double sigma0_sq = 0.0;  // watts, no covert transmission
    double sigma1_sq = 0.0;  // watts, covert transmission present

    double ratio() const { return sigma1_sq / sigma0_sq; }
};

inline void require_psd(const CMat& m, const char* what) {
    if (m.size() == 0) return;
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw invariant_error(std::string(what) + " is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff();
    double scale = std::max(1e-300, es.eigenvalues().cwiseAbs().maxCoeff());
    if (lo < -1e-9 * scale)
        throw invariant_error(std::string(what) + " is not positive semidefinite");
}

/// Willie observes the sensing residue and the jamming signal under
/// both hypotheses; the covert signal appears only under H1. With the
/// jamming power in sigma0 the variance-ratio test is exactly the
/// kappa-form covertness constraint.
inline HypothesisVariances hypothesis_variances(const CVec& h_aw, const CVec& h_jw,
                                                const CVec& w_a, const CVec& w_j,
                                                const CMat& sensing_cov, double varpi_rw,
                                                double sigma_w_sq) {
    if (!(sigma_w_sq > 0.0)) throw invariant_error("sigma_w^2 must be positive");
    require_psd(sensing_cov, "sensing covariance");
    double sensed = sensing_cov.size() > 0 ? quad_form(sensing_cov, h_aw) : 0.0;
    double jammed = w_j.size() > 0 ? std::norm(h_jw.dot(w_j)) : 0.0;
    HypothesisVariances v;
    v.sigma0_sq = varpi_rw * sensed + jammed + sigma_w_sq;
    v.sigma1_sq = v.sigma0_sq + (w_a.size() > 0 ? std::norm(h_aw.dot(w_a)) : 0.0);
    return v;
}

/// Minimum detection error probability at the optimal radiometer
/// threshold; continuous limit 1 as sigma1 -> sigma0.
inline double min_dep(const HypothesisVariances& v) {
    double r = v.ratio();
    double d = r - 1.0;
    if (d <= 1e-14) return 1.0;
    // exponents r/(r-1) and 1/(r-1), stabilised through log1p
    double lnr = std::log1p(d);
    return 1.0 + std::exp(-r * lnr / d) - std::exp(-lnr / d);
}

/// Radiometer threshold minimising the detection error probability.
inline double optimal_threshold(const HypothesisVariances& v) {
    if (!(v.sigma1_sq > v.sigma0_sq))
        throw invariant_error("no distinguishing power: sigma1^2 == sigma0^2");
    return v.sigma0_sq * v.sigma1_sq * std::log(v.sigma1_sq / v.sigma0_sq) /
           (v.sigma1_sq - v.sigma0_sq);
}

/// D(p0 || p1) = ln(s1/s0) + s0/s1 - 1, in nats.
inline double kl_divergence(const HypothesisVariances& v) {
    if (!(v.sigma0_sq > 0.0 && v.sigma1_sq > 0.0))
        throw invariant_error("variances must be positive");
    return std::log(v.sigma1_sq / v.sigma0_sq) + v.sigma0_sq / v.sigma1_sq - 1.0;
}

/// Unique root > 1 of ln(k) + 1/k - 1 = 2 eps^2, by bracketed bisection.
inline double solve_kappa(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw invariant_error("epsilon must be in (0,1)");
    double target = 2.0 * epsilon * epsilon;
    auto f = [](double k) { return std::log(k) + 1.0 / k - 1.0; };
    double hi = 2.0;
    while (f(hi) <= target) hi *= 2.0;
    double lo = 1.0;
    while (hi - lo > 1e-13 * hi) {
        double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Covertness constraint slack in watts; the constraint holds iff >= 0.
/// CCO drops the sensing covariance term.
inline double covertness_slack(const CVec& h_aw, const CVec& h_jw, const CVec& w_a,
                               const CVec& w_j, const CMat& sensing_cov, double kappa,
                               double sigma_w_sq, double varpi_rw, Phase phase) {
    if (!(kappa > 1.0)) throw invariant_error("kappa must exceed 1");
    double lhs = w_a.size() > 0 ? std::norm(h_aw.dot(w_a)) : 0.0;
    if (w_j.size() > 0) lhs += (1.0 - kappa) * std::norm(h_jw.dot(w_j));
    if (phase == Phase::ccs && sensing_cov.size() > 0)
        lhs += (1.0 - kappa) * varpi_rw * quad_form(sensing_cov, h_aw);
    return (kappa - 1.0) * sigma_w_sq - lhs;
}

}  // namespace covisac
