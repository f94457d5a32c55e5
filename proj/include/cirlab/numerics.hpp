#pragma once

// Small numerical building blocks shared across modules: bracketed root
// finding, Gauss-Legendre rules and Legendre polynomial evaluation.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "cirlab/errors.hpp"
#include "cirlab/model.hpp"

namespace cirlab {

/// Brent's method on a sign-changing bracket [a, b].
template <class F>
double brent_root(F&& f, double a, double b, double xtol = 1e-14, int max_iter = 300) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) throw ConvergenceError("brent_root: bracket does not change sign");
    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0) return b;
        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
    }
    throw ConvergenceError("brent_root: iteration limit reached");
}

/// Standard (unnormalized) Legendre polynomial P_n(x) and its derivative.
inline std::pair<double, double> legendre_with_derivative(int n, double x) {
    double p0 = 1.0, p1 = x;
    if (n == 0) return {1.0, 0.0};
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

/// All normalized Legendre values sqrt((2l+1)/2) P_l(x) for l = 0..lmax.
inline std::vector<double> normalized_legendre_all(int lmax, double x) {
    std::vector<double> out(lmax + 1);
    double p0 = 1.0, p1 = x;
    out[0] = std::sqrt(0.5);
    if (lmax >= 1) out[1] = std::sqrt(1.5) * x;
    for (int k = 2; k <= lmax; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        out[k] = std::sqrt((2.0 * k + 1.0) / 2.0) * p2;
        p0 = p1;
        p1 = p2;
    }
    return out;
}

struct QuadratureRule {
    std::vector<double> nodes;    // ascending in (-1, 1)
    std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration from the
/// Tricomi asymptotic initial guesses.
inline QuadratureRule gauss_legendre(int n, double tol = 1e-15) {
    if (n < 1) throw ArgumentError("gauss_legendre needs n >= 1");
    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 1; i <= half; ++i) {
        // Tricomi's guess for the i-th largest root.
        const double th = pi * (4.0 * i - 1.0) / (4.0 * n + 2.0);
        double x = (1.0 - (n - 1.0) / (8.0 * n * n * n) - 1.0 / (384.0 * std::pow(n, 4)) *
                                                             (39.0 - 28.0 / (std::sin(th) * std::sin(th)))) *
                   std::cos(th);
        bool converged = false;
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            auto [p, d] = legendre_with_derivative(n, x);
            dp = d;
            const double dx = p / d;
            x -= dx;
            if (std::abs(dx) <= tol) {
                converged = true;
                break;
            }
        }
        if (!converged) throw ConvergenceError("gauss_legendre: Newton iteration failed for n=" + std::to_string(n));
        dp = legendre_with_derivative(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - i] = x;
        rule.nodes[i - 1] = -x;
        rule.weights[n - i] = w;
        rule.weights[i - 1] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

/// Composite Gauss-Legendre integral of f over [a, b] with `panels` equal panels.
template <class F>
double integrate_gl(F&& f, double a, double b, int panels = 1, const QuadratureRule* rule = nullptr) {
    static const QuadratureRule default_rule = gauss_legendre(20);
    const QuadratureRule& r = rule ? *rule : default_rule;
    const double width = (b - a) / panels;
    double sum = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double lo = a + k * width;
        const double mid = lo + 0.5 * width, half = 0.5 * width;
        double s = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
        sum += s * half;
    }
    return sum;
}

} // namespace cirlab
