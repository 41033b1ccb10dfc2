#pragma once

#include "covisac/common.hpp"

#include <random>

namespace covisac::testing {

inline std::mt19937& rng(unsigned seed = 0) {
    static std::mt19937 gen(12345);
    if (seed != 0) gen.seed(seed);
    return gen;
}

inline double uniform(std::mt19937& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline cplx random_unit_cplx(std::mt19937& g) {
    return std::polar(1.0, uniform(g, 0.0, 2.0 * kPi));
}

inline CVec random_cvec(std::mt19937& g, int m, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    CVec v(m);
    for (int i = 0; i < m; ++i) v(i) = cplx(n(g), n(g));
    return v;
}

inline CMat random_hermitian(std::mt19937& g, int m, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    CMat a(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = cplx(n(g), n(g));
    return 0.5 * (a + CMat(a.adjoint()));
}

inline CMat random_psd(std::mt19937& g, int m, double scale = 1.0) {
    CMat a = random_cvec(g, m * m, scale).reshaped(m, m);
    return a * a.adjoint() / static_cast<double>(m);
}

}  // namespace covisac::testing
