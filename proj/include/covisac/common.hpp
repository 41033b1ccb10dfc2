#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace covisac {

using Vec2 = Eigen::Vector2d;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

/// 10^(dB/10). Accepts -inf (maps to 0).
inline double db_to_linear(double db) {
    if (std::isinf(db) && db < 0.0) return 0.0;
    return std::pow(10.0, db / 10.0);
}

inline double linear_to_db(double lin) {
    if (lin <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(lin);
}

/// dBm -> watts.
inline double dbm_to_watts(double dbm) { return db_to_linear(dbm) * 1e-3; }

inline double watts_to_dbm(double w) { return linear_to_db(w * 1e3); }

inline double log2_safe(double x) {
    if (x <= 0.0) throw std::domain_error("log2 of non-positive value");
    return std::log2(x);
}

/// Exception carrying a named constraint or parse location.
class invariant_error : public std::runtime_error {
public:
    explicit invariant_error(const std::string& what) : std::runtime_error(what) {}
};

enum class Phase { cco, ccs };

inline const char* phase_name(Phase p) { return p == Phase::cco ? "cco" : "ccs"; }

/// Re(h^H M h); exact real for Hermitian M.
inline double quad_form(const CMat& m, const CVec& h) {
    return std::real(h.dot(m * h));
}

}  // namespace covisac
