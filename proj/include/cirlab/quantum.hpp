#pragma once

// Coupled-channel solver for the confined relative motion with m = 0.
//
// psi(r, theta) is expanded in Legendre-based discrete functions on the Gauss
// nodes of cos(theta); the radial functions u_j(r) = r sqrt(lambda_j) psi(r, theta_j)
// obey u'' = W(r) u with
//   W = L / r^2 + diag(mu^2 omega^2 r^2 sin^2 theta_j + 2 mu (V(r) - E)),
// discretized by three-point differences on a mapped radial grid and
// propagated from the origin as a ratio (Riccati) recursion. The z -> -z
// symmetry splits the problem into even and odd sectors that are matched
// separately to standing waves in the open channels at r = r_m.

#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cirlab/errors.hpp"
#include "cirlab/mc.hpp"
#include "cirlab/model.hpp"
#include "cirlab/numerics.hpp"
#include "cirlab/parallel.hpp"
#include "cirlab/rkf45.hpp"

namespace cirlab {

struct AngularGrid {
    int n_theta = 0;
    std::vector<double> theta;   // ascending in (0, pi)
    std::vector<double> x;       // cos(theta), descending
    std::vector<double> lambda;  // Gauss-Legendre weights
    Eigen::MatrixXd p_hat;       // (l, j): lambda_j P_l(x_j)
    Eigen::MatrixXd a;           // (j, l): [p_hat^-1]
    Eigen::MatrixXd l2;          // (j, k): sqrt(lambda_j lambda_k) sum_l l(l+1) P_l(x_j) a(k, l)
};

inline AngularGrid build_angular_grid(int n_theta) {
    if (n_theta < 2) throw ArgumentError("n_theta must be >= 2");
    const auto rule = gauss_legendre(n_theta, 1e-15);
    AngularGrid g;
    g.n_theta = n_theta;
    for (int j = 0; j < n_theta; ++j) {
        const int src = n_theta - 1 - j;  // descending cos theta
        g.x.push_back(rule.nodes[src]);
        g.lambda.push_back(rule.weights[src]);
        g.theta.push_back(std::acos(rule.nodes[src]));
    }
    g.p_hat.resize(n_theta, n_theta);
    Eigen::MatrixXd pl(n_theta, n_theta);  // (l, j): P_l(x_j)
    for (int j = 0; j < n_theta; ++j) {
        double p0 = 1.0, p1 = g.x[j];
        for (int l = 0; l < n_theta; ++l) {
            double p;
            if (l == 0) p = 1.0;
            else if (l == 1) p = g.x[j];
            else {
                p = ((2.0 * l - 1.0) * g.x[j] * p1 - (l - 1.0) * p0) / l;
                p0 = p1;
                p1 = p;
            }
            pl(l, j) = p;
            g.p_hat(l, j) = g.lambda[j] * p;
        }
    }
    g.a = g.p_hat.partialPivLu().inverse();
    g.l2.resize(n_theta, n_theta);
    for (int j = 0; j < n_theta; ++j)
        for (int k = 0; k < n_theta; ++k) {
            double s = 0.0;
            for (int l = 1; l < n_theta; ++l) s += l * (l + 1.0) * pl(l, j) * g.a(k, l);
            g.l2(j, k) = std::sqrt(g.lambda[j] * g.lambda[k]) * s;
        }
    return g;
}

struct RadialGrid {
    int n_r = 0;
    double r_m = 0.0;
    double gamma = 0.0;
    std::vector<double> r;  // r[0] = 0 (virtual origin), r[1..n_r]
};

inline RadialGrid build_radial_grid(int n_r, double r_m, double gamma) {
    if (n_r < 50) throw ArgumentError("n_r must be >= 50");
    if (!(r_m > 0.0)) throw ArgumentError("r_m must be > 0");
    if (!(gamma > 0.0)) throw ArgumentError("gamma must be > 0");
    RadialGrid g;
    g.n_r = n_r;
    g.r_m = r_m;
    g.gamma = gamma;
    g.r.resize(n_r + 1);
    const double denom = std::expm1(gamma);
    for (int j = 0; j <= n_r; ++j) g.r[j] = r_m * std::expm1(gamma * double(j) / n_r) / denom;
    g.r[n_r] = r_m;
    return g;
}

/// Normalized m = 0 eigenfunction of the 2D oscillator,
/// sqrt(mu omega / pi) L_n(mu omega rho^2) exp(-mu omega rho^2 / 2), and its rho derivative.
inline std::pair<double, double> oscillator_mode(int n, double rho, const UnitSystem& units = {}) {
    const double c = UnitSystem::mu * units.omega;
    const double s = c * rho * rho;
    double l_prev = 0.0, l = 1.0;
    for (int k = 1; k <= n; ++k) {
        const double next = k == 1 ? 1.0 - s : ((2.0 * k - 1.0 - s) * l - (k - 1.0) * l_prev) / k;
        l_prev = l;
        l = next;
    }
    // dL_n/ds = n (L_n - L_{n-1}) / s, with the limit -n at s = 0
    const double dl = n == 0 ? 0.0 : (s > 1e-300 ? n * (l - l_prev) / s : -double(n));
    const double norm = std::sqrt(c / pi);
    const double e = std::exp(-0.5 * s);
    const double val = norm * l * e;
    const double dval = norm * e * (dl - 0.5 * l) * 2.0 * c * rho;
    return {val, dval};
}

struct ChannelSet {
    int m = 0;
    double energy = 0.0;
    std::vector<double> thresholds;  // open channels only
    std::vector<double> k;
    int n_open() const { return int(k.size()); }
};

inline ChannelSet build_channels(double energy, const UnitSystem& units = {}) {
    ChannelSet ch;
    ch.energy = energy;
    for (int n = 0;; ++n) {
        const double en = transverse_energy(n, 0, units);
        if (std::abs(energy - en) < 1e-10) throw DomainError("energy within 1e-10 of channel threshold " + std::to_string(en));
        if (en > energy) break;
        ch.thresholds.push_back(en);
        ch.k.push_back(std::sqrt(2.0 * UnitSystem::mu * (energy - en)));
    }
    if (ch.k.empty()) throw DomainError("energy below the lowest channel threshold");
    return ch;
}

struct QuantumNumerics {
    int n_theta = 160;
    int n_r = 2000;
    double r_m = 28.0;
    double gamma = 4.0;
    double max_condition = 1e12;
    bool richardson = true;  // combine n_r and 2 n_r to cancel the O(h^2) radial error

    bool operator==(const QuantumNumerics&) const = default;

    void validate() const {
        if (n_theta < 4 || n_theta % 2 != 0) throw ValidationError("n_theta must be even and >= 4");
        if (n_r < 50) throw ValidationError("n_r must be >= 50");
        if (!(r_m > 0.0)) throw ValidationError("r_m must be > 0");
        if (!(gamma > 0.0)) throw ValidationError("gamma must be > 0");
        if (!(max_condition > 1.0)) throw ValidationError("max_condition must be > 1");
    }
};

/// Block-tridiagonal operator of the discretized coupled equations:
///   a_i u_{i-1} - (b_i + W_i) u_i + c_i u_{i+1} = 0,  i = 1 .. n_r - 1, u_0 = 0.
/// Blocks are n_theta x n_theta and only neighbouring radii couple.
struct CoupledSystem {
    AngularGrid angular;
    RadialGrid radial;
    PotentialSpec potential;
    UnitSystem units;
    double energy = 0.0;

    int bandwidth() const { return angular.n_theta; }

    double a(int i) const {
        const double h0 = radial.r[i] - radial.r[i - 1], h1 = radial.r[i + 1] - radial.r[i];
        return 2.0 / (h0 * (h0 + h1));
    }
    double b(int i) const {
        const double h0 = radial.r[i] - radial.r[i - 1], h1 = radial.r[i + 1] - radial.r[i];
        return 2.0 / (h0 * h1);
    }
    double c(int i) const {
        const double h0 = radial.r[i] - radial.r[i - 1], h1 = radial.r[i + 1] - radial.r[i];
        return 2.0 / (h1 * (h0 + h1));
    }

    /// Diagonal part of W at grid radius index i (1..n_r).
    Eigen::VectorXd local_diagonal(int i) const {
        const double r = radial.r[i];
        const double mu = UnitSystem::mu, w = units.omega;
        const double v = potential.v0 == 0.0 ? 0.0 : potential_value(potential, r);
        Eigen::VectorXd d(angular.n_theta);
        for (int j = 0; j < angular.n_theta; ++j) {
            const double s2 = 1.0 - angular.x[j] * angular.x[j];
            d[j] = mu * mu * w * w * r * r * s2 + 2.0 * mu * (v - energy);
        }
        return d;
    }

    Eigen::MatrixXd coupling(int i) const {
        const double r = radial.r[i];
        Eigen::MatrixXd wm = angular.l2 / (r * r);
        wm.diagonal() += local_diagonal(i);
        return wm;
    }

    /// Residual of the interior equations for columns u(:, 0..n_r), u(:, 0) the origin.
    Eigen::MatrixXd residual(const Eigen::MatrixXd& u) const {
        Eigen::MatrixXd out(angular.n_theta, radial.n_r - 1);
        for (int i = 1; i < radial.n_r; ++i)
            out.col(i - 1) = a(i) * u.col(i - 1) - b(i) * u.col(i) - coupling(i) * u.col(i) + c(i) * u.col(i + 1);
        return out;
    }
};

inline CoupledSystem assemble_system(const AngularGrid& angular, const RadialGrid& radial, const PotentialSpec& potential,
                                     double energy, const UnitSystem& units = {}) {
    potential.validate();
    units.validate();
    if (energy <= transverse_energy(0, 0, units)) throw DomainError("energy must exceed the lowest threshold");
    return CoupledSystem{angular, radial, potential, units, energy};
}

struct ScatteringSolution {
    ChannelSet channels;
    int incident = 0;
    Eigen::MatrixXcd f_plus, f_minus;   // (n, n'): amplitudes for incidence in channel n
    Eigen::MatrixXcd s_even, s_odd;
    Eigen::MatrixXd k_even, k_odd;
    std::vector<double> t_channel;      // |delta + f+|^2 k_n'/k_n for the incident channel
    std::vector<double> r_channel;
    double t = 0.0;
    double r = 0.0;
    double condition = 0.0;             // largest matching condition number of the two sectors
    double tail_potential = 0.0;        // |V(r_m)|
    double unitarity_defect() const { return std::abs(t + r - 1.0); }
};

namespace detail {

struct SectorMatch {
    Eigen::MatrixXd k;
    double condition = 0.0;
};

// Propagates the sector ratio recursion and fits the open-channel standing-wave
// K matrix at r_m by least squares. parity = +1 (even) or -1 (odd).
inline SectorMatch match_sector(const CoupledSystem& sys, const ChannelSet& ch, int parity, double max_condition) {
    const int nt = sys.angular.n_theta, h = nt / 2, n_r = sys.radial.n_r;
    const auto& rr = sys.radial.r;
    Eigen::MatrixXd l2s(h, h);
    for (int j = 0; j < h; ++j)
        for (int k = 0; k < h; ++k) l2s(j, k) = sys.angular.l2(j, k) + parity * sys.angular.l2(j, nt - 1 - k);

    Eigen::MatrixXd r_prev = Eigen::MatrixXd::Zero(h, h), r_prev2 = Eigen::MatrixXd::Zero(h, h);
    Eigen::MatrixXd m(h, h);
    for (int i = 1; i < n_r; ++i) {
        const Eigen::VectorXd diag = sys.local_diagonal(i).head(h);
        const double ri = rr[i];
        m = sys.a(i) * r_prev - l2s / (ri * ri);
        m.diagonal() -= diag;
        m.diagonal().array() -= sys.b(i);
        Eigen::MatrixXd next = -sys.c(i) * m.partialPivLu().inverse();
        r_prev2 = std::move(r_prev);
        r_prev = std::move(next);
    }
    // u_n = I, u_{n-1} = R_{n-1}, u_{n-2} = R_{n-2} R_{n-1}
    const double d1 = rr[n_r] - rr[n_r - 1], d2 = rr[n_r] - rr[n_r - 2];
    const double wn = 1.0 / d1 + 1.0 / d2, wn1 = -d2 / (d1 * (d2 - d1)), wn2 = d1 / (d2 * (d2 - d1));
    Eigen::MatrixXd y = wn1 * r_prev + wn2 * (r_prev2 * r_prev);
    y.diagonal().array() += wn;

    const int ne = ch.n_open();
    const double rm = sys.radial.r_m;
    Eigen::MatrixXd f(h, ne), g(h, ne), fd(h, ne), gd(h, ne);
    for (int j = 0; j < h; ++j) {
        const double ct = sys.angular.x[j], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        const double sl = std::sqrt(sys.angular.lambda[j]);
        const double rho = rm * st, z = rm * ct;
        for (int n = 0; n < ne; ++n) {
            const auto [phi, dphi] = oscillator_mode(n, rho, sys.units);
            const double kn = ch.k[n], nk = 1.0 / std::sqrt(kn);
            const double cs = std::cos(kn * z), sn = std::sin(kn * z);
            // standing waves: even (cos, sin), odd (sin, -cos), flux normalized
            const double fz = parity > 0 ? cs : sn, dfz = parity > 0 ? -kn * sn : kn * cs;
            const double gz = parity > 0 ? sn : -cs, dgz = parity > 0 ? kn * cs : kn * sn;
            f(j, n) = sl * rm * phi * fz * nk;
            g(j, n) = sl * rm * phi * gz * nk;
            // d/dr of r phi(r sin) s(r cos)
            fd(j, n) = sl * nk * (phi * fz + rm * st * dphi * fz + rm * ct * phi * dfz);
            gd(j, n) = sl * nk * (phi * gz + rm * st * dphi * gz + rm * ct * phi * dgz);
        }
    }
    const Eigen::MatrixXd lhs = y * g - gd;
    const Eigen::MatrixXd rhs = -(y * f - fd);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lhs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(cond <= max_condition))
        throw IllConditionedMatch("matching condition number " + std::to_string(cond) + " exceeds limit");
    return {svd.solve(rhs), cond};
}

inline Eigen::MatrixXcd cayley(const Eigen::MatrixXd& k) {
    const int n = int(k.rows());
    const std::complex<double> i1{0.0, 1.0};
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd ik = i1 * k.cast<std::complex<double>>();
    return (id - ik) * (id + ik).inverse();
}

} // namespace detail

/// Assembles amplitudes for incidence in `incident` from sector K matrices.
inline ScatteringSolution assemble_solution(const ChannelSet& ch, int incident, Eigen::MatrixXd k_even,
                                            Eigen::MatrixXd k_odd, double condition) {
    if (incident < 0 || incident >= ch.n_open()) throw ArgumentError("incident channel is not open");
    ScatteringSolution sol;
    sol.channels = ch;
    sol.incident = incident;
    sol.k_even = std::move(k_even);
    sol.k_odd = std::move(k_odd);
    sol.condition = condition;
    sol.s_even = detail::cayley(sol.k_even);
    sol.s_odd = detail::cayley(sol.k_odd);
    const Eigen::MatrixXcd tm = 0.5 * (sol.s_even + sol.s_odd);
    const Eigen::MatrixXcd rm = 0.5 * (sol.s_even - sol.s_odd);
    const int ne = ch.n_open();
    sol.f_plus.resize(ne, ne);
    sol.f_minus.resize(ne, ne);
    for (int n = 0; n < ne; ++n)
        for (int np = 0; np < ne; ++np) {
            const double scale = std::sqrt(ch.k[n] / ch.k[np]);
            sol.f_plus(n, np) = scale * tm(np, n) - (n == np ? 1.0 : 0.0);
            sol.f_minus(n, np) = scale * rm(np, n);
        }
    for (int np = 0; np < ne; ++np) {
        const double w = ch.k[np] / ch.k[incident];
        const double tp = w * std::norm((np == incident ? 1.0 : 0.0) + sol.f_plus(incident, np));
        const double rp = w * std::norm(sol.f_minus(incident, np));
        sol.t_channel.push_back(tp);
        sol.r_channel.push_back(rp);
        sol.t += tp;
        sol.r += rp;
    }
    return sol;
}

/// Matches both parity sectors of one discretization.
inline ScatteringSolution solve_and_match(const CoupledSystem& sys, const ChannelSet& ch, int incident,
                                          double max_condition = 1e12) {
    if (sys.angular.n_theta % 2 != 0) throw ArgumentError("solve_and_match needs an even n_theta");
    if (incident < 0 || incident >= ch.n_open()) throw ArgumentError("incident channel is not open");
    const auto even = detail::match_sector(sys, ch, +1, max_condition);
    const auto odd = detail::match_sector(sys, ch, -1, max_condition);
    auto sol = assemble_solution(ch, incident, even.k, odd.k, std::max(even.condition, odd.condition));
    sol.tail_potential = std::abs(potential_value(sys.potential, sys.radial.r_m));
    return sol;
}

/// Full solve for m = 0 incidence in channel params.n at E = e_perp + e_par.
inline ScatteringSolution solve_quantum(const ScatterParams& params, const PotentialSpec& potential,
                                        const QuantumNumerics& num = {}, const UnitSystem& units = {}) {
    num.validate();
    params.validate(units);
    if (params.lz != 0) throw ArgumentError("quantum scattering is restricted to lz = 0");
    if (std::abs(params.e_perp - transverse_energy(params.n, 0, units)) > 1e-12 * params.e_perp)
        throw ArgumentError("e_perp must equal the threshold of channel n");
    const double energy = params.e_perp + params.e_par;
    const auto ch = build_channels(energy, units);
    const auto angular = build_angular_grid(num.n_theta);
    const auto coarse = assemble_system(angular, build_radial_grid(num.n_r, num.r_m, num.gamma), potential, energy, units);
    auto sol = solve_and_match(coarse, ch, params.n, num.max_condition);
    if (!num.richardson) return sol;
    const auto fine = assemble_system(angular, build_radial_grid(2 * num.n_r, num.r_m, num.gamma), potential, energy, units);
    const auto even = detail::match_sector(fine, ch, +1, num.max_condition);
    const auto odd = detail::match_sector(fine, ch, -1, num.max_condition);
    const double tail = sol.tail_potential;
    sol = assemble_solution(ch, params.n, (4.0 * even.k - sol.k_even) / 3.0, (4.0 * odd.k - sol.k_odd) / 3.0,
                            std::max({sol.condition, even.condition, odd.condition}));
    sol.tail_potential = tail;
    return sol;
}

inline double transmission_quantum(const ScatterParams& params, const PotentialSpec& potential,
                                   const QuantumNumerics& num = {}, const UnitSystem& units = {}) {
    return solve_quantum(params, potential, num, units).t;
}

inline void apply_axis(ScatterParams& params, PotentialSpec& potential, SweepAxis axis, double value) {
    switch (axis) {
    case SweepAxis::V0: potential.v0 = value; break;
    case SweepAxis::EPerp: params.e_perp = value; break;
    case SweepAxis::EPar: params.e_par = value; break;
    case SweepAxis::Lz: params.lz = int(std::lround(value)); break;
    case SweepAxis::Range: potential.range = value; break;
    }
}

struct QuantumPoint {
    double value = 0.0;
    std::optional<ScatteringSolution> solution;
    std::string error;
};

struct QuantumSweep {
    TransmissionCurve curve;           // std_error = 0 throughout
    std::vector<QuantumPoint> points;  // same order as curve.points
};

/// transmission_quantum per grid point, points solved in parallel. Failures
/// are recorded per point. `on_point` sees finished points in grid order.
template <class OnPoint>
QuantumSweep sweep_quantum(const ScatterParams& base, const PotentialSpec& potential, SweepAxis axis,
                           const std::vector<double>& grid, const QuantumNumerics& num, int workers,
                           OnPoint&& on_point) {
    check_grid(grid);
    num.validate();
    QuantumSweep out;
    out.curve.axis = axis;
    out.curve.grid = grid;
    out.points.resize(grid.size());
    std::vector<char> done(grid.size(), 0);
    std::size_t flushed = 0;
    std::mutex mtx;
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        QuantumPoint q;
        q.value = grid[i];
        try {
            ScatterParams p = base;
            PotentialSpec v = potential;
            apply_axis(p, v, axis, grid[i]);
            q.solution = solve_quantum(p, v, num);
        } catch (const Error& ex) {
            q.error = ex.what();
        }
        std::lock_guard<std::mutex> lock(mtx);
        out.points[i] = std::move(q);
        done[i] = 1;
        while (flushed < grid.size() && done[flushed]) on_point(out.points[flushed++]);
    });
    for (const auto& q : out.points) {
        CurvePoint c;
        c.value = q.value;
        c.std_error = 0.0;
        if (q.solution) c.t = q.solution->t;
        else c.error = q.error;
        out.curve.points.push_back(std::move(c));
    }
    return out;
}

inline QuantumSweep sweep_quantum(const ScatterParams& base, const PotentialSpec& potential, SweepAxis axis,
                                  const std::vector<double>& grid, const QuantumNumerics& num = {}, int workers = 1) {
    return sweep_quantum(base, potential, axis, grid, num, workers, [](const QuantumPoint&) {});
}

/// Grid minimum of a V0 sweep refined by golden-section search on the
/// deterministic T(V0) inside the bracketing interval (log abscissa when positive).
inline TminResult refine_quantum_tmin(const ScatterParams& params, const PotentialSpec& potential,
                                      const TransmissionCurve& curve, const QuantumNumerics& num = {},
                                      double rel_tol = 1e-4) {
    if (curve.axis != SweepAxis::V0) throw ArgumentError("refine_quantum_tmin needs a V0 sweep");
    TminResult res = locate_tmin(curve);
    const bool lg = res.bracket_lo > 0.0;
    auto to_v = [&](double x) { return lg ? std::exp(x) : x; };
    auto t_at = [&](double x) { return transmission_quantum(params, potential.with_v0(to_v(x)), num); };
    double a = lg ? std::log(res.bracket_lo) : res.bracket_lo;
    double b = lg ? std::log(res.bracket_hi) : res.bracket_hi;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = t_at(c), fd = t_at(d);
    const double tol = lg ? rel_tol : rel_tol * std::max(std::abs(a), std::abs(b));
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = t_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = t_at(d);
        }
    }
    const double x = fc < fd ? c : d;
    const double tx = std::min(fc, fd);
    const double t_grid = curve.points[res.index].t;
    res.log_abscissa = lg;
    if (tx <= t_grid) {
        res.v0_star = to_v(x);
        res.t_min = tx;
    } else {
        res.v0_star = curve.points[res.index].value;
        res.t_min = t_grid;
    }
    res.v0_star_stderr = 0.0;
    res.t_min_stderr = 0.0;
    return res;
}

struct ScatteringLength {
    double a_s = 0.0;
    bool divergent = false;  // |a_s| > 1e8
    int nodes = 0;           // zeros of the zero-energy solution, counting the tail zero at r = a_s
};

/// Zero-energy s-wave scattering length from u'' = 2 mu V(r) u, integrated
/// outward with the adaptive Fehlberg pair until |V| < 1e-14 and read off as
/// a_s = r - u/u'. Lennard-Jones starts inside the repulsive core from the
/// decaying WKB solution.
inline ScatteringLength scattering_length_detail(const PotentialSpec& spec, double rtol = 1e-12) {
    spec.validate();
    ScatteringLength out;
    if (spec.v0 == 0.0) return out;
    const double mu = UnitSystem::mu;
    double r0, u, du;
    if (spec.kind == PotentialKind::Yukawa) {
        r0 = 1e-8 * spec.range;
        // u = r + mu v0 r0 ... series: u'' = -2 mu v0 range e^{-r/range} u / r
        u = r0 - mu * spec.v0 * spec.range * r0 * r0;
        du = 1.0 - 2.0 * mu * spec.v0 * spec.range * r0;
    } else {
        const double s = spec.range;
        const double kappa_coeff = std::sqrt(8.0 * mu * spec.v0) * std::pow(s, 6);
        r0 = std::pow(kappa_coeff / 40.0, 0.2);
        const double kappa = kappa_coeff / std::pow(r0, 6);
        const double dkappa = -6.0 * kappa / r0;
        u = 1e-20;
        du = u * (kappa - dkappa / (2.0 * kappa));
    }
    double r_end = std::max(4.0 * spec.range, 2.0 * r0);
    while (std::abs(potential_value(spec, r_end)) >= 1e-14) r_end *= 1.2;

    auto rhs = [&](double r, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        dy[0] = y[1];
        dy[1] = 2.0 * mu * potential_value(spec, r) * y[0];
    };
    StepControl ctl;
    ctl.atol = 1e-300;
    ctl.rtol = rtol;
    ctl.h_min = 1e-14 * spec.range;
    ctl.h_max = 0.05 * spec.range;
    ctl.local_extrapolation = true;
    // integrate in segments to count nodes and keep magnitudes bounded
    std::array<double, 2> y{u, du};
    double r = r0;
    const int segments = 400;
    const double q = std::pow(r_end / r0, 1.0 / segments);
    for (int sgm = 0; sgm < segments; ++sgm) {
        const double r_next = sgm + 1 == segments ? r_end : r * q;
        const double before = y[0];
        y = rkf45_integrate<2>(rhs, r, r_next, y, ctl, std::min(ctl.h_max, 0.1 * (r_next - r)));
        if ((before > 0.0) != (y[0] > 0.0)) ++out.nodes;
        const double scale = std::max(std::abs(y[0]), std::abs(y[1]));
        if (scale > 1e100 || (scale < 1e-100 && scale > 0.0)) {
            y[0] /= scale;
            y[1] /= scale;
        }
        r = r_next;
    }
    out.a_s = r - y[0] / y[1];
    if (!std::isfinite(out.a_s) || std::abs(out.a_s) > 1e8) out.divergent = true;
    // the free tail u ~ (r - a_s) still has its zero ahead of us
    else if (out.a_s > r_end) ++out.nodes;
    return out;
}

inline double scattering_length(const PotentialSpec& spec) {
    const auto s = scattering_length_detail(spec);
    if (s.divergent) throw DivergentLength("|a_s| exceeds 1e8 (bound-state threshold)");
    return s.a_s;
}

} // namespace cirlab
