#pragma once

// Independent test oracles: quadrature, finite differences, closed forms.
// These live in test code only and never share a code path with the library
// implementations they check.

#include <cmath>
#include <functional>
#include <vector>

#include "padis/tensor.hpp"

namespace oracles {

// log of the sigma-smoothed density of an arbitrary 2-pixel prior, computed by
// brute-force trapezoid quadrature over x0 in [-span, span]^2.
inline double smoothed_logdensity_quadrature(
    const std::function<double(double, double)>& prior_density, double x0, double x1, double sigma,
    double span, int steps) {
    double h = 2.0 * span / steps;
    double acc = 0.0;
    double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int a = 0; a <= steps; ++a) {
        double u = -span + a * h;
        double wa = (a == 0 || a == steps) ? 0.5 : 1.0;
        for (int b = 0; b <= steps; ++b) {
            double v = -span + b * h;
            double wb = (b == 0 || b == steps) ? 0.5 : 1.0;
            double d0 = x0 - u, d1 = x1 - v;
            acc += wa * wb * prior_density(u, v) * std::exp(-(d0 * d0 + d1 * d1) * inv2s2);
        }
    }
    acc *= h * h / (2.0 * M_PI * sigma * sigma);
    return std::log(acc);
}

// central finite difference of a scalar function along direction u
inline double directional_derivative(const std::function<double(const padis::Image&)>& f,
                                     const padis::Image& x, const padis::Image& u, double h) {
    padis::Image xp = x, xm = x;
    padis::axpy(xp, h, u);
    padis::axpy(xm, -h, u);
    return (f(xp) - f(xm)) / (2.0 * h);
}

// central finite difference of a vector-valued map along direction u
inline padis::Image directional_jvp(const std::function<padis::Image(const padis::Image&)>& f,
                                    const padis::Image& x, const padis::Image& u, double h) {
    padis::Image xp = x, xm = x;
    padis::axpy(xp, h, u);
    padis::axpy(xm, -h, u);
    padis::Image out = f(xp) - f(xm);
    out *= 1.0 / (2.0 * h);
    return out;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

inline double rel_err(const padis::Image& got, const padis::Image& want) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < got.v.size(); ++i) {
        double d = got.v[i] - want.v[i];
        num += d * d;
        den += want.v[i] * want.v[i];
    }
    return std::sqrt(num) / std::max(1e-300, std::sqrt(den));
}

}  // namespace oracles
