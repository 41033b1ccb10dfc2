#pragma once

#include "covisac/common.hpp"
#include "covisac/scenario.hpp"

namespace covisac {

/// 3-D distance between a UAV at altitude A over u and a ground node at v.
inline double distance(double altitude, const Vec2& u, const Vec2& v) {
    return std::sqrt(altitude * altitude + (u - v).squaredNorm());
}

inline double distance_sq(double altitude, const Vec2& u, const Vec2& v) {
    return altitude * altitude + (u - v).squaredNorm();
}

/// cos(theta) of the angle of departure; in (0, 1].
inline double aod_cos(double altitude, const Vec2& u, const Vec2& v) {
    return altitude / distance(altitude, u, v);
}

/// ULA steering vector, entry k = exp(j 2*pi * (d_m/lambda) * k * cos(theta)).
inline CVec steering_vector(double spacing_ratio, int antennas, double cos_theta) {
    CVec a(antennas);
    double step = 2.0 * kPi * spacing_ratio * cos_theta;
    for (int k = 0; k < antennas; ++k)
        a(k) = std::polar(1.0, step * static_cast<double>(k));
    return a;
}

inline CVec steering_vector(const Scenario& s, double altitude, const Vec2& u, const Vec2& v) {
    return steering_vector(s.antenna_spacing_ratio, s.antennas, aod_cos(altitude, u, v));
}

enum class UavId { alice, jack };

inline double uav_altitude(const Scenario& s, UavId id) {
    return id == UavId::alice ? s.altitude_alice : s.altitude_jack;
}

/// LoS channel sqrt(beta / d^2) * a(u, v); squared norm M*beta/d^2.
inline CVec channel(const Scenario& s, UavId uav, const Vec2& uav_pos, const Vec2& node_pos) {
    double alt = uav_altitude(s, uav);
    double d2 = distance_sq(alt, uav_pos, node_pos);
    return std::sqrt(s.pathloss_ref() / d2) * steering_vector(s, alt, uav_pos, node_pos);
}

/// Rank-one outer product h h^H.
inline CMat channel_matrix(const CVec& h) {
    return h * h.adjoint();
}

}  // namespace covisac
