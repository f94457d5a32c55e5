#pragma once

// Unconfined classical scattering off a central potential: effective
// potential, distance of closest approach, deflection angle and the orbiting
// threshold where the deflection diverges.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cirlab/errors.hpp"
#include "cirlab/model.hpp"
#include "cirlab/numerics.hpp"

namespace cirlab {

struct ImpactConfig {
    double s = 0.0;       // impact parameter
    double energy = 1.0;  // incident energy E

    double velocity() const { return std::sqrt(2.0 * energy / UnitSystem::mu); }
    double angular_momentum() const { return UnitSystem::mu * s * velocity(); }

    void validate() const {
        if (!(s >= 0.0)) throw ValidationError("impact parameter s must be >= 0");
        if (!(energy > 0.0)) throw ValidationError("incident energy must be > 0");
    }
};

inline double effective_potential(const PotentialSpec& spec, double j, double r) {
    if (!(r > 0.0)) throw DomainError("effective potential requires r > 0");
    return potential_value(spec, r) + j * j / (2.0 * UnitSystem::mu * r * r);
}

namespace detail {

inline double effective_potential_slope(const PotentialSpec& spec, double j, double r) {
    return potential_derivative(spec, r) - j * j / (UnitSystem::mu * r * r * r);
}

// Radius beyond which |V| < 1e-14 E; the motion there is purely centrifugal.
inline double outer_radius(const PotentialSpec& spec, double energy, double r_start) {
    double r = std::max(r_start, spec.range);
    if (spec.v0 == 0.0) return 2.0 * r;
    const double target = 1e-14 * energy;
    while (std::abs(potential_value(spec, r)) >= target) {
        r *= 1.5;
        if (r > 1e12 * spec.range) throw ConvergenceError("outer_radius: potential does not decay");
    }
    return r;
}

struct CriticalPoint {
    double r;
    bool maximum;
};

// Stationary points of V_eff on a geometric scan, refined with Brent.
inline std::vector<CriticalPoint> effective_critical_points(const PotentialSpec& spec, double j, double r_lo,
                                                            double r_hi, int n_scan = 4000) {
    std::vector<CriticalPoint> out;
    auto d = [&](double r) { return effective_potential_slope(spec, j, r); };
    const double q = std::pow(r_hi / r_lo, 1.0 / n_scan);
    double a = r_lo, fa = d(a);
    for (int i = 1; i <= n_scan; ++i) {
        const double b = r_lo * std::pow(q, i);
        const double fb = d(b);
        if ((fa > 0.0) != (fb > 0.0) && fa != 0.0) {
            const double r = brent_root(d, a, b, 1e-13 * b);
            out.push_back({r, fa > 0.0});  // slope goes + to - outward: a maximum
        }
        a = b;
        fa = fb;
    }
    return out;
}

} // namespace detail

/// Largest root of g(r) = E - V(r) - J^2/2r^2 reached from r = infinity.
/// Throws OrbitingSingular when that root is (within 1e-6 in V0) a double root,
/// i.e. the top of the effective barrier sits at the incident energy.
/// For J = 0 with a potential that stays below E down to the origin, returns 0.
inline double closest_approach(const PotentialSpec& spec, const ImpactConfig& cfg) {
    cfg.validate();
    spec.validate();
    const double e = cfg.energy, j = cfg.angular_momentum();
    if (spec.v0 == 0.0) return cfg.s;
    auto g = [&](double r) { return e - effective_potential(spec, j, r); };
    const double r_lo = 1e-4 * spec.range;
    const double r_hi = detail::outer_radius(spec, e, 10.0 * std::max(cfg.s, spec.range));
    const auto crit = detail::effective_critical_points(spec, j, r_lo, r_hi);

    double upper = r_hi;
    for (auto it = crit.rbegin(); it != crit.rend(); ++it) {
        const double gc = g(it->r);
        if (it->maximum) {
            const double band = 1e-6 * std::abs(potential_value(spec, it->r) / spec.v0);
            if (std::abs(gc) <= band)
                throw OrbitingSingular("effective barrier top within 1e-6 (in V0) of E at r = " +
                                       std::to_string(it->r));
        }
        if (gc < 0.0) return brent_root(g, it->r, upper, 1e-13 * upper);
        upper = it->r;
    }
    if (g(r_lo) < 0.0) return brent_root(g, r_lo, upper, 1e-13 * upper);
    if (j == 0.0) return 0.0;
    throw ConvergenceError("closest_approach: no turning point above r = " + std::to_string(r_lo));
}

/// Deflection angle Theta = -pi + 2 int_{r_m}^inf (J/r^2) / sqrt(2 mu g(r)) dr.
/// The endpoint singularity is removed with r = r_m + u^2; beyond the radius
/// where |V| < 1e-14 E the centrifugal tail is integrated in closed form.
/// Panels are doubled until the result changes by less than `tol`.
inline double deflection_angle(const PotentialSpec& spec, const ImpactConfig& cfg, double tol = 1e-11) {
    const double e = cfg.energy, j = cfg.angular_momentum();
    const double rm = closest_approach(spec, cfg);
    if (j == 0.0) return -pi;  // head-on
    const double r_out = detail::outer_radius(spec, e, 4.0 * std::max(rm, cfg.s));
    const double mu = UnitSystem::mu;
    auto integrand = [&](double u) {
        const double r = rm + u * u;
        const double gr = e - effective_potential(spec, j, r);
        if (!(gr > 0.0)) return 0.0;
        return 2.0 * u * (j / (r * r)) / std::sqrt(2.0 * mu * gr);
    };
    const double u_max = std::sqrt(r_out - rm);
    static const QuadratureRule rule = gauss_legendre(20);
    int panels = 16;
    double prev = integrate_gl(integrand, 0.0, u_max, panels, &rule);
    double cur = prev;
    for (int pass = 0; pass < 12; ++pass) {
        panels *= 2;
        cur = integrate_gl(integrand, 0.0, u_max, panels, &rule);
        if (std::abs(cur - prev) < tol) break;
        prev = cur;
    }
    const double tail = std::asin(std::min(1.0, j / (r_out * std::sqrt(2.0 * mu * e))));
    return -pi + 2.0 * (cur + tail);
}

/// Depth V0* at which the top of the effective barrier equals E, so that the
/// deflection angle diverges (orbiting). Solves V_eff(r*) = E, V_eff'(r*) = 0:
/// along the stationarity curve V0(r) = J^2 / (mu r^3 v'(r)), with v = V/V0,
/// the energy condition becomes a one-dimensional root problem in r.
struct OrbitingPoint {
    double v0 = 0.0;
    double r = 0.0;
};

inline OrbitingPoint orbiting_threshold(const PotentialSpec& spec, double s, double energy) {
    ImpactConfig cfg{s, energy};
    cfg.validate();
    const double j = cfg.angular_momentum();
    if (j == 0.0) throw NoOrbitingRegime("no centrifugal barrier for J = 0");
    const double mu = UnitSystem::mu;
    const PotentialSpec unit = spec.with_v0(1.0);
    auto v0_of = [&](double r) { return j * j / (mu * r * r * r * potential_derivative(unit, r)); };
    auto f = [&](double r) {
        return j * j * potential_value(unit, r) / (mu * r * r * r * potential_derivative(unit, r)) +
               j * j / (2.0 * mu * r * r) - energy;
    };
    const double r_lo = 1e-3 * spec.range, r_hi = 1e3 * std::max(spec.range, s);
    const int n_scan = 20000;
    const double q = std::pow(r_hi / r_lo, 1.0 / n_scan);
    std::optional<OrbitingPoint> best;
    double a = r_lo;
    for (int i = 1; i <= n_scan; ++i) {
        const double b = r_lo * std::pow(q, i);
        const double da = potential_derivative(unit, a), db = potential_derivative(unit, b);
        if (da > 0.0 && db > 0.0) {
            const double fa = f(a), fb = f(b);
            if (std::isfinite(fa) && std::isfinite(fb) && (fa > 0.0) != (fb > 0.0)) {
                const double r = brent_root(f, a, b, 1e-12 * b);
                const double v0 = v0_of(r);
                const PotentialSpec at = spec.with_v0(v0);
                const double h = 1e-4 * r;
                const double curv = (effective_potential(at, j, r + h) - 2.0 * effective_potential(at, j, r) +
                                     effective_potential(at, j, r - h)) /
                                    (h * h);
                if (v0 > 0.0 && curv < 0.0 && (!best || v0 < best->v0)) best = OrbitingPoint{v0, r};
            }
        }
        a = b;
    }
    if (!best) throw NoOrbitingRegime("effective potential never develops a barrier at E");
    return *best;
}

struct DeflectionPoint {
    double v0 = 0.0;
    double theta = 0.0;     // +inf at orbiting
    bool singular = false;
    std::string error;      // non-empty if the point failed for another reason
};

/// Deflection angle over a V0 grid; orbiting points are marked, not raised.
inline std::vector<DeflectionPoint> theta_vs_v0(const PotentialSpec& spec, double s, double energy,
                                                const std::vector<double>& grid) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ArgumentError("theta_vs_v0 grid must be strictly increasing");
    std::vector<DeflectionPoint> out;
    out.reserve(grid.size());
    for (double v0 : grid) {
        DeflectionPoint p;
        p.v0 = v0;
        try {
            p.theta = deflection_angle(spec.with_v0(v0), ImpactConfig{s, energy});
        } catch (const OrbitingSingular&) {
            p.theta = std::numeric_limits<double>::infinity();
            p.singular = true;
        } catch (const Error& ex) {
            p.theta = std::numeric_limits<double>::quiet_NaN();
            p.error = ex.what();
        }
        out.push_back(p);
    }
    return out;
}

} // namespace cirlab
