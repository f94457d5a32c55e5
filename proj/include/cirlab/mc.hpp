#pragma once

// Monte Carlo transmission estimates over ensembles of confined trajectories,
// parameter sweeps, minimum location, convergence batches, time-weighted
// density maps and the ensemble winding angle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cirlab/cdyn.hpp"
#include "cirlab/errors.hpp"
#include "cirlab/model.hpp"
#include "cirlab/parallel.hpp"
#include "cirlab/rng.hpp"
#include "cirlab/semiclassics.hpp"

namespace cirlab {

enum class SweepAxis { V0, EPerp, EPar, Lz, Range };

inline std::string_view to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::V0: return "v0";
    case SweepAxis::EPerp: return "e_perp";
    case SweepAxis::EPar: return "e_par";
    case SweepAxis::Lz: return "lz";
    case SweepAxis::Range: return "range";
    }
    return "?";
}

inline SweepAxis parse_axis(std::string_view s) {
    if (s == "v0") return SweepAxis::V0;
    if (s == "e_perp") return SweepAxis::EPerp;
    if (s == "e_par") return SweepAxis::EPar;
    if (s == "lz") return SweepAxis::Lz;
    if (s == "range") return SweepAxis::Range;
    throw ValidationError("unknown sweep axis '" + std::string(s) + "'");
}

/// Unit label used in CSV headers for values along an axis.
inline std::string_view axis_unit(SweepAxis a) {
    switch (a) {
    case SweepAxis::Lz: return "hbar";
    case SweepAxis::Range: return "a_ho";
    default: return "hbar*omega";
    }
}

struct EnsembleSpec {
    ScatterParams params;
    PotentialSpec potential;
    std::size_t n_events = 1600;
    std::uint64_t master_seed = 42;
    IntegratorConfig integrator;
    OrbitSamplingConfig sampling;
    UnitSystem units;
    int max_attempts = 3;          // samples tried per event before it counts as excluded
    double excluded_budget = 0.05; // largest tolerated excluded fraction

    void validate() const {
        units.validate();
        potential.validate();
        params.validate(units);
        sampling.validate();
        integrator.validate(sampling.z0);
        if (n_events < 1) throw ValidationError("n_events must be >= 1");
        if (max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
        if (!(excluded_budget >= 0.0 && excluded_budget <= 1.0)) throw ValidationError("excluded_budget must be in [0, 1]");
    }
};

struct EventResult {
    Outcome outcome = Outcome::Trapped;
    int attempts = 0;
    double theta = 0.0;
    bool theta_resolved = true;
    double energy_drift = 0.0;
    long n_steps = 0;
};

struct TransmissionEstimate {
    double t = 0.0;
    double std_error = 0.0;
    std::size_t n_trans = 0, n_refl = 0, n_excluded = 0;
    double mean_theta = 0.0;      // over escaped events with a resolved winding angle
    std::size_t n_theta = 0;
    double theta_sd = 0.0;
    double max_energy_drift = 0.0;
    long total_steps = 0;
    EnsembleSpec spec;

    std::size_t n_events() const { return n_trans + n_refl + n_excluded; }
};

/// One event: up to max_attempts fresh samples, stream (master, index, attempt).
/// `observer_reset` is called before each attempt and `observer` on every step.
template <class Observer, class Reset>
EventResult simulate_event(const EnsembleSpec& spec, std::size_t index, Observer&& observer, Reset&& observer_reset) {
    EventResult ev;
    for (int a = 0; a < spec.max_attempts; ++a) {
        observer_reset();
        EventStream stream(spec.master_seed, index, std::uint64_t(a));
        const auto sample = sample_initial_state(spec.params, spec.potential, spec.sampling, stream, spec.units);
        const auto rec = integrate_trajectory(sample.state, spec.integrator, spec.potential, spec.units, observer);
        ev.outcome = rec.outcome;
        ev.attempts = a + 1;
        ev.theta = rec.theta;
        ev.theta_resolved = rec.theta_resolved;
        ev.energy_drift = rec.energy_drift;
        ev.n_steps += rec.n_steps;
        if (rec.escaped()) break;
    }
    return ev;
}

inline EventResult simulate_event(const EnsembleSpec& spec, std::size_t index) {
    return simulate_event(spec, index, NoObserver{}, [] {});
}

inline std::vector<EventResult> run_events(const EnsembleSpec& spec, std::size_t n, int workers = 1) {
    return parallel_map<EventResult>(n, workers, [&](std::size_t i) { return simulate_event(spec, i); });
}

/// Aggregates events [0, n) into an estimate with the binomial standard error.
/// Throws ExcludedBudgetExceeded if too many events never escaped.
inline TransmissionEstimate summarize(const EnsembleSpec& spec, const std::vector<EventResult>& events,
                                      std::size_t n = std::size_t(-1)) {
    n = std::min(n, events.size());
    TransmissionEstimate est;
    est.spec = spec;
    double th_sum = 0.0, th_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = events[i];
        est.total_steps += e.n_steps;
        if (e.outcome == Outcome::Transmitted) ++est.n_trans;
        else if (e.outcome == Outcome::Reflected) ++est.n_refl;
        else ++est.n_excluded;
        if (e.outcome == Outcome::Transmitted || e.outcome == Outcome::Reflected) {
            est.max_energy_drift = std::max(est.max_energy_drift, e.energy_drift);
            if (e.theta_resolved) {
                th_sum += e.theta;
                th_sq += e.theta * e.theta;
                ++est.n_theta;
            }
        }
    }
    if (double(est.n_excluded) > spec.excluded_budget * double(n))
        throw ExcludedBudgetExceeded(std::to_string(est.n_excluded) + " of " + std::to_string(n) +
                                     " events never escaped");
    const double valid = double(est.n_trans + est.n_refl);
    est.t = est.n_trans / valid;
    est.std_error = std::sqrt(est.t * (1.0 - est.t) / valid);
    if (est.n_theta > 0) {
        est.mean_theta = th_sum / est.n_theta;
        if (est.n_theta > 1)
            est.theta_sd = std::sqrt(std::max(0.0, (th_sq - th_sum * th_sum / est.n_theta) / (est.n_theta - 1)));
    }
    return est;
}

inline TransmissionEstimate estimate_transmission(const EnsembleSpec& spec, int workers = 1) {
    spec.validate();
    return summarize(spec, run_events(spec, spec.n_events, workers));
}

/// Seed of the r-th independent batch derived from a master seed.
inline std::uint64_t batch_seed(std::uint64_t master, std::size_t r) {
    return splitmix64(master ^ splitmix64(0x5851f42d4c957f2dULL + r));
}

struct BatchStatistics {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(n_repeats)
    double sd = 0.0;
    std::vector<double> values;
};

inline BatchStatistics batch_statistics(std::vector<double> values) {
    BatchStatistics b;
    const double n = double(values.size());
    for (double v : values) b.mean += v;
    b.mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - b.mean) * (v - b.mean);
    b.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    b.std_error = b.sd / std::sqrt(n);
    b.values = std::move(values);
    return b;
}

/// Mean T over n_repeats independent ensembles of spec.n_events events each.
inline BatchStatistics repeat_batches(const EnsembleSpec& spec, std::size_t n_repeats, int workers = 1) {
    if (n_repeats < 2) throw ArgumentError("repeat_batches needs n_repeats >= 2");
    spec.validate();
    std::vector<double> ts;
    for (std::size_t r = 0; r < n_repeats; ++r) {
        EnsembleSpec b = spec;
        b.master_seed = batch_seed(spec.master_seed, r);
        ts.push_back(estimate_transmission(b, workers).t);
    }
    return batch_statistics(std::move(ts));
}

struct ConvergenceRow {
    std::size_t n = 0;
    BatchStatistics stats;
};

/// T(N) for each N in `sizes`, n_repeats batches per N. Batch r always draws
/// events from the same stream family, so smaller N use a prefix of the events
/// of larger N within a batch.
inline std::vector<ConvergenceRow> convergence_study(const EnsembleSpec& spec, const std::vector<std::size_t>& sizes,
                                                     std::size_t n_repeats, int workers = 1) {
    if (sizes.empty()) throw ArgumentError("convergence_study needs at least one N");
    if (n_repeats < 2) throw ArgumentError("convergence_study needs n_repeats >= 2");
    spec.validate();
    const std::size_t n_max = *std::max_element(sizes.begin(), sizes.end());
    std::vector<std::vector<double>> per_size(sizes.size());
    for (std::size_t r = 0; r < n_repeats; ++r) {
        EnsembleSpec b = spec;
        b.master_seed = batch_seed(spec.master_seed, r);
        const auto events = run_events(b, n_max, workers);
        for (std::size_t k = 0; k < sizes.size(); ++k) per_size[k].push_back(summarize(b, events, sizes[k]).t);
    }
    std::vector<ConvergenceRow> rows;
    for (std::size_t k = 0; k < sizes.size(); ++k) rows.push_back({sizes[k], batch_statistics(per_size[k])});
    return rows;
}

inline void apply_axis(EnsembleSpec& spec, SweepAxis axis, double value) {
    switch (axis) {
    case SweepAxis::V0: spec.potential.v0 = value; break;
    case SweepAxis::EPerp: spec.params.e_perp = value; break;
    case SweepAxis::EPar: spec.params.e_par = value; break;
    case SweepAxis::Lz: spec.params.lz = int(std::lround(value)); break;
    case SweepAxis::Range: spec.potential.range = value; break;
    }
}

struct CurvePoint {
    double value = 0.0;
    std::optional<TransmissionEstimate> estimate;
    double t = std::numeric_limits<double>::quiet_NaN();
    double std_error = 0.0;
    std::string error;  // why the point has no estimate
};

struct TransmissionCurve {
    SweepAxis axis = SweepAxis::V0;
    std::vector<double> grid;
    std::vector<CurvePoint> points;
};

inline void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw ArgumentError("sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ArgumentError("sweep grid must be strictly increasing");
}

/// One estimate per grid value. Every point uses the base master seed, so the
/// curve is reproducible point by point. Failures are recorded per point.
/// `on_point` (optional) sees each finished point in grid order.
template <class OnPoint>
TransmissionCurve sweep_transmission(const EnsembleSpec& base, SweepAxis axis, const std::vector<double>& grid,
                                     int workers, OnPoint&& on_point) {
    check_grid(grid);
    TransmissionCurve curve;
    curve.axis = axis;
    curve.grid = grid;
    for (double v : grid) {
        CurvePoint p;
        p.value = v;
        try {
            EnsembleSpec s = base;
            apply_axis(s, axis, v);
            p.estimate = estimate_transmission(s, workers);
            p.t = p.estimate->t;
            p.std_error = p.estimate->std_error;
        } catch (const Error& ex) {
            p.error = ex.what();
        }
        on_point(p);
        curve.points.push_back(std::move(p));
    }
    return curve;
}

inline TransmissionCurve sweep_transmission(const EnsembleSpec& base, SweepAxis axis, const std::vector<double>& grid,
                                            int workers = 1) {
    return sweep_transmission(base, axis, grid, workers, [](const CurvePoint&) {});
}

/// Log-spaced grid of n points from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > lo) || n < 2) throw ArgumentError("log_grid needs 0 < lo < hi and n >= 2");
    std::vector<double> g(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
    if (!(hi > lo) || n < 2) throw ArgumentError("linear_grid needs lo < hi and n >= 2");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return g;
}

struct ParabolaVertex {
    double x = 0.0, y = 0.0;
};

/// Vertex of the parabola through three points, clamped to [x0, x2].
inline ParabolaVertex parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d01 = x1 - x0, d12 = x1 - x2;
    const double num = d01 * d01 * (y1 - y2) - d12 * d12 * (y1 - y0);
    const double den = d01 * (y1 - y2) - d12 * (y1 - y0);
    double x = x1;
    if (den != 0.0) x = x1 - 0.5 * num / den;
    x = std::clamp(x, std::min(x0, x2), std::max(x0, x2));
    const double l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
    const double l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
    const double l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
    return {x, l0 * y0 + l1 * y1 + l2 * y2};
}

struct TminResult {
    double v0_star = 0.0;
    double t_min = 0.0;
    double v0_star_stderr = 0.0;  // linear propagation of the bracketing T errors
    double t_min_stderr = 0.0;
    std::size_t index = 0;        // grid argmin
    bool log_abscissa = true;
    double bracket_lo = 0.0, bracket_hi = 0.0;
};

/// Grid argmin refined by a parabola through the bracketing points, in log of
/// the abscissa when all three are positive.
inline TminResult locate_tmin(const TransmissionCurve& curve) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < curve.points.size(); ++i)
        if (std::isfinite(curve.points[i].t)) idx.push_back(i);
    if (idx.size() < 5) throw ArgumentError("locate_tmin needs at least 5 valid points");
    std::size_t k = 0;
    for (std::size_t i = 1; i < idx.size(); ++i)
        if (curve.points[idx[i]].t < curve.points[idx[k]].t) k = i;
    if (k == 0 || k + 1 == idx.size()) throw NoInteriorMinimum("argmin at grid endpoint");
    const auto& p0 = curve.points[idx[k - 1]];
    const auto& p1 = curve.points[idx[k]];
    const auto& p2 = curve.points[idx[k + 1]];
    TminResult res;
    res.index = idx[k];
    res.bracket_lo = p0.value;
    res.bracket_hi = p2.value;
    res.log_abscissa = p0.value > 0.0;
    auto tx = [&](double v) { return res.log_abscissa ? std::log(v) : v; };
    const double x0 = tx(p0.value), x1 = tx(p1.value), x2 = tx(p2.value);
    const double y[3] = {p0.t, p1.t, p2.t};
    const double sy[3] = {p0.std_error, p1.std_error, p2.std_error};
    const auto v = parabola_vertex(x0, y[0], x1, y[1], x2, y[2]);
    double var_x = 0.0, var_y = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (sy[i] == 0.0) continue;
        double yp[3] = {y[0], y[1], y[2]};
        const double h = 1e-3 * sy[i];
        yp[i] += h;
        const auto vp = parabola_vertex(x0, yp[0], x1, yp[1], x2, yp[2]);
        var_x += std::pow((vp.x - v.x) / h * sy[i], 2);
        var_y += std::pow((vp.y - v.y) / h * sy[i], 2);
    }
    res.v0_star = res.log_abscissa ? std::exp(v.x) : v.x;
    res.t_min = v.y;
    res.v0_star_stderr = res.log_abscissa ? res.v0_star * std::sqrt(var_x) : std::sqrt(var_x);
    res.t_min_stderr = std::sqrt(var_y);
    return res;
}

/// Fraction of histogram mass in cells whose centers satisfy |a| < a_half and |b| < b_half.
inline double central_mass_fraction(const Histogram2D& h, double a_half, double b_half) {
    double inside = 0.0, total = 0.0;
    for (int i = 0; i < h.na; ++i)
        for (int j = 0; j < h.nb; ++j) {
            const double m = h.at(i, j);
            total += m;
            if (std::abs(h.a_center(i)) < a_half && std::abs(h.b_center(j)) < b_half) inside += m;
        }
    return total > 0.0 ? inside / total : 0.0;
}

/// Time-weighted occupation of (Re x, Re z) cells by escaped trajectories of the
/// real orbit family (delta = 0 regardless of spec.sampling), normalized so the
/// mass inside the grid sums to 1. Axis a of `grid` is x, axis b is z.
inline Histogram2D density_map(const EnsembleSpec& spec, double v0, Histogram2D grid, int workers = 1) {
    EnsembleSpec s = spec;
    s.potential.v0 = v0;
    s.sampling.delta_max = 0.0;
    s.validate();
    const std::size_t block = 32;
    const std::size_t n_blocks = (s.n_events + block - 1) / block;
    for (double& m : grid.mass) m = 0.0;
    grid.out_of_range = 0;
    const Histogram2D empty = grid;
    struct BlockResult {
        Histogram2D hist;
        std::size_t excluded = 0;
    };
    auto blocks = parallel_map<BlockResult>(n_blocks, workers, [&](std::size_t b) {
        BlockResult out{empty, 0};
        Histogram2D ev = empty;
        for (std::size_t i = b * block; i < std::min(s.n_events, (b + 1) * block); ++i) {
            auto observer = [&](const PhaseState& prev, const PhaseState& cur) {
                const double dt = cur.t - prev.t;
                ev.add(0.5 * (prev.q.x.real() + cur.q.x.real()), 0.5 * (prev.q.z.real() + cur.q.z.real()), dt);
            };
            auto reset = [&] {
                std::fill(ev.mass.begin(), ev.mass.end(), 0.0);
                ev.out_of_range = 0;
            };
            const auto e = simulate_event(s, i, observer, reset);
            if (e.outcome == Outcome::Transmitted || e.outcome == Outcome::Reflected) {
                for (std::size_t c = 0; c < ev.mass.size(); ++c) out.hist.mass[c] += ev.mass[c];
                out.hist.out_of_range += ev.out_of_range;
            } else {
                ++out.excluded;
            }
        }
        return out;
    });
    std::size_t excluded = 0;
    for (const auto& b : blocks) {
        for (std::size_t c = 0; c < grid.mass.size(); ++c) grid.mass[c] += b.hist.mass[c];
        grid.out_of_range += b.hist.out_of_range;
        excluded += b.excluded;
    }
    if (double(excluded) > s.excluded_budget * double(s.n_events))
        throw ExcludedBudgetExceeded(std::to_string(excluded) + " of " + std::to_string(s.n_events) +
                                     " events never escaped");
    grid.normalize();
    return grid;
}

struct ThetaPoint {
    double v0 = 0.0;
    double mean_theta = std::numeric_limits<double>::quiet_NaN();
    double theta_stderr = 0.0;
    std::size_t n_theta = 0;
    std::size_t n_unresolved = 0;
    std::optional<TransmissionEstimate> estimate;
    std::string error;
};

/// Ensemble-mean winding angle and transmission over a V0 grid, real orbits.
template <class OnPoint>
std::vector<ThetaPoint> theta_vs_v0_confined(const EnsembleSpec& spec, const std::vector<double>& grid, int workers,
                                             OnPoint&& on_point) {
    check_grid(grid);
    std::vector<ThetaPoint> out;
    for (double v0 : grid) {
        ThetaPoint p;
        p.v0 = v0;
        try {
            EnsembleSpec s = spec;
            s.potential.v0 = v0;
            s.sampling.delta_max = 0.0;
            s.validate();
            const auto events = run_events(s, s.n_events, workers);
            p.estimate = summarize(s, events);
            p.mean_theta = p.estimate->mean_theta;
            p.n_theta = p.estimate->n_theta;
            p.theta_stderr = p.n_theta > 1 ? p.estimate->theta_sd / std::sqrt(double(p.n_theta)) : 0.0;
            p.n_unresolved = p.estimate->n_trans + p.estimate->n_refl - p.n_theta;
        } catch (const Error& ex) {
            p.error = ex.what();
        }
        on_point(p);
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<ThetaPoint> theta_vs_v0_confined(const EnsembleSpec& spec, const std::vector<double>& grid,
                                                    int workers = 1) {
    return theta_vs_v0_confined(spec, grid, workers, [](const ThetaPoint&) {});
}

} // namespace cirlab
