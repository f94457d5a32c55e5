#pragma once

// Embedded Runge-Kutta-Fehlberg 4(5) pair on fixed-size real state vectors.
// By default the fourth-order solution is propagated and the fifth-order one
// only feeds the local error estimate; local extrapolation advances with the
// fifth-order solution instead.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "cirlab/errors.hpp"

namespace cirlab {

struct StepControl {
    double atol = 1e-9;
    double rtol = 1e-9;
    double h_min = 1e-12;
    double h_max = 1.0;
    double safety = 0.9;
    double shrink_limit = 0.2;
    double growth_limit = 5.0;
    bool local_extrapolation = false;  // advance with the fifth-order solution
};

template <std::size_t N>
struct StepResult {
    std::array<double, N> y;
    double error = 0.0;  // scaled error norm, accept when <= 1
    double h_next = 0.0;
    bool accepted = false;
};

namespace rkf {
inline constexpr double c2 = 1.0 / 4, c3 = 3.0 / 8, c4 = 12.0 / 13, c5 = 1.0, c6 = 1.0 / 2;
inline constexpr double a21 = 1.0 / 4;
inline constexpr double a31 = 3.0 / 32, a32 = 9.0 / 32;
inline constexpr double a41 = 1932.0 / 2197, a42 = -7200.0 / 2197, a43 = 7296.0 / 2197;
inline constexpr double a51 = 439.0 / 216, a52 = -8.0, a53 = 3680.0 / 513, a54 = -845.0 / 4104;
inline constexpr double a61 = -8.0 / 27, a62 = 2.0, a63 = -3544.0 / 2565, a64 = 1859.0 / 4104,
                        a65 = -11.0 / 40;
inline constexpr double b1 = 25.0 / 216, b3 = 1408.0 / 2565, b4 = 2197.0 / 4104, b5 = -1.0 / 5;
inline constexpr double e1 = 1.0 / 360, e3 = -128.0 / 4275, e4 = -2197.0 / 75240, e5 = 1.0 / 50,
                        e6 = 2.0 / 55;
} // namespace rkf

/// One Fehlberg step of size h from (t, y). `f(t, y, dydt)` fills the derivative.
/// The step is accepted when the mixed abs/rel error norm is <= 1; h_next follows
/// the usual safety-factor rule with exponent 1/5 and clamped growth.
template <std::size_t N, class Rhs>
StepResult<N> rkf45_attempt(Rhs&& f, double t, const std::array<double, N>& y, double h,
                            const StepControl& ctl) {
    using namespace rkf;
    std::array<double, N> k1, k2, k3, k4, k5, k6, tmp;
    f(t, y, k1);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + c6 * h, tmp, k6);

    StepResult<N> out;
    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double y4 = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i]);
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i]);
        out.y[i] = ctl.local_extrapolation ? y4 + e : y4;
        const double scale = ctl.atol + ctl.rtol * std::max(std::abs(y[i]), std::abs(out.y[i]));
        err = std::max(err, std::abs(e) / scale);
    }
    if (!std::isfinite(err)) err = 1e300;
    out.error = err;
    out.accepted = err <= 1.0;

    double factor = err > 0.0 ? ctl.safety * std::pow(err, -0.2) : ctl.growth_limit;
    factor = std::clamp(factor, ctl.shrink_limit, ctl.growth_limit);
    out.h_next = std::clamp(std::abs(h) * factor, ctl.h_min, ctl.h_max);  // magnitude only
    return out;
}

/// Fixed-step use of the same tableau (fourth-order solution).
template <std::size_t N, class Rhs>
std::array<double, N> rkf45_fixed(Rhs&& f, double t, const std::array<double, N>& y, double h) {
    StepControl ctl;
    ctl.h_min = 0.0;
    ctl.h_max = std::abs(h);
    return rkf45_attempt<N>(f, t, y, h, ctl).y;
}

/// Adaptive integration of y from t0 to t1 (either direction).
/// Throws StepSizeUnderflow when the tolerance would need |h| < h_min.
template <std::size_t N, class Rhs>
std::array<double, N> rkf45_integrate(Rhs&& f, double t0, double t1, std::array<double, N> y,
                                      const StepControl& ctl, double h0 = 0.0,
                                      long max_steps = 10'000'000) {
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    double h = h0 > 0.0 ? h0 : std::min(ctl.h_max, std::abs(t1 - t0) / 100.0);
    h = std::max(h, ctl.h_min);
    double t = t0;
    long steps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > max_steps) throw ConvergenceError("rkf45_integrate exceeded step budget");
        double hs = std::min(h, dir * (t1 - t));
        const bool final_step = hs < h;
        auto res = rkf45_attempt<N>(f, t, y, dir * hs, ctl);
        if (res.accepted) {
            t = final_step ? t1 : t + dir * hs;
            y = res.y;
            h = res.h_next;
        } else {
            if (hs <= ctl.h_min) throw StepSizeUnderflow("required step below h_min");
            h = std::max(ctl.h_min, std::min(std::abs(res.h_next), hs));
        }
    }
    return y;
}

} // namespace cirlab
