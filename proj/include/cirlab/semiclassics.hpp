#pragma once

// Semiclassical treatment of the transverse 2D oscillator: turning points,
// radial action, Bohr-Sommerfeld levels and sampling of launch conditions
// over the (optionally complexified) family of oscillator orbits.

#include <cmath>
#include <cstddef>
#include <vector>

#include "cirlab/errors.hpp"
#include "cirlab/model.hpp"
#include "cirlab/numerics.hpp"
#include "cirlab/rng.hpp"

namespace cirlab {

struct TurningPair {
    double rho1 = 0.0;
    double rho2 = 0.0;
};

inline TurningPair turning_points(double energy, int lz, const UnitSystem& units = {}) {
    const double w = units.omega;
    const double lw = std::abs(lz) * w;
    if (energy < lw)
        throw ArgumentError("energy " + std::to_string(energy) + " below |lz|*omega = " + std::to_string(lw));
    const double disc = std::sqrt(std::max(0.0, energy * energy - lw * lw));
    // rho^2 = (E -+ disc) / omega^2; the small root is computed as Lz^2 / (E + disc)
    // to avoid cancellation when E >> |Lz| omega.
    const double big = (energy + disc) / (w * w);
    const double small = energy + disc > 0.0 ? double(lz) * double(lz) / (energy + disc) : 0.0;
    return {std::sqrt(small), std::sqrt(big)};
}

/// Radial action 2 * int_{rho1}^{rho2} sqrt(2E - Lz^2/rho^2 - omega^2 rho^2) d rho.
/// The substitution rho = m - d cos(phi) absorbs the square-root zeros at the
/// turning points, so a single Gauss-Legendre rule converges spectrally.
inline double radial_action(double energy, int lz, const UnitSystem& units = {}) {
    const auto tp = turning_points(energy, lz, units);
    if (tp.rho2 - tp.rho1 <= 0.0) return 0.0;
    const double w = units.omega;
    const double lz2 = double(lz) * double(lz);
    const double m = 0.5 * (tp.rho1 + tp.rho2), d = 0.5 * (tp.rho2 - tp.rho1);
    static const QuadratureRule rule = gauss_legendre(64);
    auto integrand = [&](double phi) {
        const double rho = m - d * std::cos(phi);
        double arg = 2.0 * energy - w * w * rho * rho;
        if (lz != 0) arg -= lz2 / (rho * rho);
        return std::sqrt(std::max(0.0, arg)) * d * std::sin(phi);
    };
    return 2.0 * integrate_gl(integrand, 0.0, pi, 4, &rule);
}

/// Energies E_n solving radial_action(E) = 2 pi (n + 1/2) for n = 0..n_max.
inline std::vector<double> bohr_sommerfeld_levels(int n_max, int lz, const UnitSystem& units = {}) {
    if (n_max < 0) throw ArgumentError("n_max must be >= 0");
    std::vector<double> levels;
    const double e_min = std::abs(lz) * units.omega;
    for (int n = 0; n <= n_max; ++n) {
        const double target = 2.0 * pi * (n + 0.5);
        auto f = [&](double e) { return radial_action(e, lz, units) - target; };
        double hi = e_min + units.omega;
        int grow = 0;
        while (f(hi) < 0.0) {
            hi = e_min + 2.0 * (hi - e_min);
            if (++grow > 200) throw ConvergenceError("bohr_sommerfeld_levels: no bracket for n=" + std::to_string(n));
        }
        levels.push_back(brent_root(f, e_min, hi, 1e-14));
    }
    return levels;
}

/// One member of the complexified orbit family of the transverse oscillator:
/// an ellipse with semi-axes (rho2, rho1) oriented at `orientation`, traversed
/// with complex time t + i*delta and phase offset `phase`.
struct TransverseOrbit {
    double energy = 1.0;
    int lz = 0;
    double delta = 0.0;
    double phase = 0.0;
    double orientation = 0.0;

    struct Point {
        cplx x, y, px, py;
    };

    Point at(double t, const UnitSystem& units = {}) const {
        const auto tp = turning_points(energy, lz, units);
        const double w = units.omega;
        const double sgn = lz >= 0 ? 1.0 : -1.0;
        const cplx arg = w * cplx{t, delta} + phase;
        const cplx c = std::cos(arg), s = std::sin(arg);
        const cplx X = tp.rho2 * c, Y = sgn * tp.rho1 * s;
        const cplx PX = -w * tp.rho2 * s, PY = sgn * w * tp.rho1 * c;
        const double ca = std::cos(orientation), sa = std::sin(orientation);
        return {ca * X - sa * Y, sa * X + ca * Y, ca * PX - sa * PY, sa * PX + ca * PY};
    }
};

struct OrbitSamplingConfig {
    double delta_max = 0.5;          // in units of 1/omega; 0 selects the real-orbit family
    double z0 = -10.0;               // launch position along the guide
    bool random_orientation = false; // axial symmetry makes orientation outcome-neutral

    bool operator==(const OrbitSamplingConfig&) const = default;

    void validate() const {
        if (!(delta_max >= 0.0)) throw ValidationError("delta_max must be >= 0");
        if (!(z0 < 0.0)) throw ValidationError("z0 must be negative (incoming from -infinity)");
    }
};

struct OrbitSample {
    PhaseState state;
    double weight = 1.0;
    double delta = 0.0;
    double phase = 0.0;
    double orientation = 0.0;
};

/// Builds a launch state from an orbit member. The longitudinal momentum is
/// fixed so that H equals E_perp + E_par exactly: p_z = sqrt(2 mu (E_par - V(q0))),
/// principal branch, which is real and positive whenever V(q0) is real.
inline PhaseState launch_state(const TransverseOrbit& orbit, double e_par, double z0,
                               const PotentialSpec& potential, const UnitSystem& units = {}) {
    const auto pt = orbit.at(0.0, units);
    PhaseState s;
    s.q = {pt.x, pt.y, cplx{z0, 0.0}};
    cplx v{0.0, 0.0};
    if (potential.v0 != 0.0) v = potential_value(potential, complex_radius(s.q));
    s.p = {pt.px, pt.py, std::sqrt(2.0 * UnitSystem::mu * (e_par - v))};
    s.t = 0.0;
    return s;
}

inline OrbitSample sample_initial_state(const ScatterParams& params, const PotentialSpec& potential,
                                        const OrbitSamplingConfig& cfg, EventStream& stream,
                                        const UnitSystem& units = {}, double weight = 1.0) {
    if (params.e_perp < std::abs(params.lz) * units.omega)
        throw ArgumentError("e_perp below |lz|*omega");
    TransverseOrbit orbit;
    orbit.energy = params.e_perp;
    orbit.lz = params.lz;
    // Draw order is fixed: delta, phase, orientation.
    const double u_delta = stream.uniform();
    const double u_phase = stream.uniform();
    const double u_orient = stream.uniform();
    orbit.delta = cfg.delta_max * u_delta / units.omega;
    orbit.phase = 2.0 * pi * u_phase;
    orbit.orientation = cfg.random_orientation ? 2.0 * pi * u_orient : 0.0;
    OrbitSample out;
    out.state = launch_state(orbit, params.e_par, cfg.z0, potential, units);
    out.weight = weight;
    out.delta = orbit.delta;
    out.phase = orbit.phase;
    out.orientation = orbit.orientation;
    return out;
}

/// Normalized 2D histogram on a rectangular grid.
struct Histogram2D {
    double a_min = 0, a_max = 1;
    int na = 1;
    double b_min = 0, b_max = 1;
    int nb = 1;
    std::vector<double> mass;  // row-major, index = ia * nb + ib
    std::size_t out_of_range = 0;

    Histogram2D() = default;
    Histogram2D(double a0, double a1, int na_, double b0, double b1, int nb_)
        : a_min(a0), a_max(a1), na(na_), b_min(b0), b_max(b1), nb(nb_), mass(std::size_t(na_) * nb_, 0.0) {
        if (na <= 0 || nb <= 0 || !(a1 > a0) || !(b1 > b0)) throw ArgumentError("invalid histogram grid");
    }

    double a_center(int ia) const { return a_min + (ia + 0.5) * (a_max - a_min) / na; }
    double b_center(int ib) const { return b_min + (ib + 0.5) * (b_max - b_min) / nb; }
    double& at(int ia, int ib) { return mass[std::size_t(ia) * nb + ib]; }
    double at(int ia, int ib) const { return mass[std::size_t(ia) * nb + ib]; }

    bool add(double a, double b, double w = 1.0) {
        const double fa = (a - a_min) / (a_max - a_min) * na;
        const double fb = (b - b_min) / (b_max - b_min) * nb;
        if (!(fa >= 0.0 && fa < na && fb >= 0.0 && fb < nb)) {
            ++out_of_range;
            return false;
        }
        at(int(fa), int(fb)) += w;
        return true;
    }

    double total() const {
        double s = 0.0;
        for (double m : mass) s += m;
        return s;
    }

    void normalize() {
        const double t = total();
        if (t > 0.0)
            for (double& m : mass) m /= t;
    }
};

/// Histogram of sampled launch x over the complex plane (Re x, Im x) on the
/// y = 0 slice, i.e. with the orbit oriented along x. Mass inside the grid sums to 1.
inline Histogram2D transverse_density_profile(double e_perp, int lz, std::size_t n_samples, Histogram2D grid,
                                              const OrbitSamplingConfig& cfg = {}, std::uint64_t seed = 42,
                                              const UnitSystem& units = {}) {
    if (n_samples < 10000) throw ArgumentError("transverse_density_profile needs >= 1e4 samples");
    for (std::size_t i = 0; i < n_samples; ++i) {
        EventStream stream(seed, i);
        TransverseOrbit orbit;
        orbit.energy = e_perp;
        orbit.lz = lz;
        orbit.delta = cfg.delta_max * stream.uniform() / units.omega;
        orbit.phase = 2.0 * pi * stream.uniform();
        const auto pt = orbit.at(0.0, units);
        grid.add(pt.x.real(), pt.x.imag());
    }
    grid.normalize();
    return grid;
}

/// Time-sampled path of the complexified transverse orbit over `duration`.
inline std::vector<PhaseState> orbit_trace(double e_perp, int lz, double delta, double duration,
                                           const UnitSystem& units = {}, int n_points = 256,
                                           double phase = 0.0) {
    if (!(duration > 0.0)) throw ArgumentError("orbit_trace duration must be > 0");
    if (n_points < 2) throw ArgumentError("orbit_trace needs at least 2 points");
    TransverseOrbit orbit{e_perp, lz, delta, phase, 0.0};
    std::vector<PhaseState> path;
    path.reserve(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double t = duration * i / (n_points - 1);
        const auto pt = orbit.at(t, units);
        PhaseState s;
        s.q = {pt.x, pt.y, {}};
        s.p = {pt.px, pt.py, {}};
        s.t = t;
        path.push_back(s);
    }
    return path;
}

} // namespace cirlab
