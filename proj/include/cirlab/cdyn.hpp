#pragma once

// Complexified Hamiltonian dynamics of the confined relative particle.
//
// The six complex phase-space coordinates are integrated as twelve real
// components with the embedded Fehlberg pair. The square root in r is followed
// continuously along the trajectory; leaving the principal sheet (Re r < 0)
// means the path crossed the cut of the principal branch.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cirlab/errors.hpp"
#include "cirlab/model.hpp"
#include "cirlab/rkf45.hpp"

namespace cirlab {

enum class Outcome { Transmitted, Reflected, Trapped, BranchCut, StepBudgetExceeded };

inline std::string_view to_string(Outcome o) {
    switch (o) {
    case Outcome::Transmitted: return "transmitted";
    case Outcome::Reflected: return "reflected";
    case Outcome::Trapped: return "trapped";
    case Outcome::BranchCut: return "branch-cut";
    case Outcome::StepBudgetExceeded: return "step-budget-exceeded";
    }
    return "?";
}

enum class BranchPolicy {
    Terminate,  // stop the trajectory with Outcome::BranchCut
    Continue    // keep following r analytically onto the next sheet
};

struct IntegratorConfig {
    double atol = 1e-9;
    double rtol = 1e-9;
    double h_init = 1e-2;
    double h_min = 1e-12;
    double h_max = 0.5;
    long max_steps = 10'000'000;
    double z_cut = 15.0;
    double t_max = 1e4;
    int record_every = 0;  // keep every k-th accepted state in the record; 0 keeps none
    BranchPolicy branch_policy = BranchPolicy::Continue;
    bool local_extrapolation = true;

    bool operator==(const IntegratorConfig&) const = default;

    void validate(double z0 = -10.0) const {
        if (!(atol > 0.0 && rtol > 0.0)) throw ValidationError("atol and rtol must be > 0");
        if (!(h_min > 0.0 && h_min <= h_init && h_init <= h_max))
            throw ValidationError("need 0 < h_min <= h_init <= h_max");
        if (!(z_cut > std::abs(z0))) throw ValidationError("z_cut must exceed |z0|");
        if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
        if (!(t_max > 0.0)) throw ValidationError("t_max must be > 0");
    }

    StepControl step_control() const {
        StepControl c;
        c.atol = atol;
        c.rtol = rtol;
        c.h_min = h_min;
        c.h_max = h_max;
        c.local_extrapolation = local_extrapolation;
        return c;
    }
};

struct TrajectoryRecord {
    Outcome outcome = Outcome::Trapped;
    PhaseState final_state;
    double theta = 0.0;           // excess winding of (Re x, Re z) inside the interaction sphere
    bool theta_resolved = true;   // false if some accepted step turned by more than pi/2
    double energy_drift = 0.0;    // max |H(t) - H(0)|
    double max_imag = 0.0;        // max |Im| over all six coordinates along the path
    long n_steps = 0;
    long n_rejected = 0;
    std::vector<PhaseState> samples;

    bool escaped() const { return outcome == Outcome::Transmitted || outcome == Outcome::Reflected; }
};

using StateVector = std::array<double, 12>;

inline StateVector pack(const PhaseState& s) {
    return {s.q.x.real(), s.q.x.imag(), s.q.y.real(), s.q.y.imag(), s.q.z.real(), s.q.z.imag(),
            s.p.x.real(), s.p.x.imag(), s.p.y.real(), s.p.y.imag(), s.p.z.real(), s.p.z.imag()};
}

inline PhaseState unpack(const StateVector& v, double t) {
    PhaseState s;
    s.q = {{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}};
    s.p = {{v[6], v[7]}, {v[8], v[9]}, {v[10], v[11]}};
    s.t = t;
    return s;
}

/// Picks the square root of r2 closest to the reference branch value.
inline cplx radius_on_branch(cplx r2, cplx r_ref) {
    cplx r = std::sqrt(r2);
    if (r.real() * r_ref.real() + r.imag() * r_ref.imag() < 0.0) r = -r;
    return r;
}

/// Right-hand side dq/dt = dH/dp, dp/dt = -dH/dq in complex arithmetic.
/// `r_ref` selects the branch of r for the Yukawa family.
class HamiltonFlow {
public:
    HamiltonFlow(const PotentialSpec& spec, const UnitSystem& units, cplx r_ref = {1.0, 0.0})
        : spec_(spec), w2_(units.omega * units.omega), r_ref_(r_ref) {}

    void set_reference(cplx r) { r_ref_ = r; }
    cplx reference() const { return r_ref_; }

    void operator()(double /*t*/, const StateVector& y, StateVector& dy) const {
        const cplx x{y[0], y[1]}, yy{y[2], y[3]}, z{y[4], y[5]};
        const double inv_mu = 1.0 / UnitSystem::mu;
        dy[0] = y[6] * inv_mu;
        dy[1] = y[7] * inv_mu;
        dy[2] = y[8] * inv_mu;
        dy[3] = y[9] * inv_mu;
        dy[4] = y[10] * inv_mu;
        dy[5] = y[11] * inv_mu;
        cplx f{0.0, 0.0};
        if (spec_.v0 != 0.0) {
            const cplx r2 = x * x + yy * yy + z * z;
            f = force_factor(r2);
        }
        const double mw2 = UnitSystem::mu * w2_;
        const cplx fx = -(mw2 + f) * x, fy = -(mw2 + f) * yy, fz = -f * z;
        dy[6] = fx.real();
        dy[7] = fx.imag();
        dy[8] = fy.real();
        dy[9] = fy.imag();
        dy[10] = fz.real();
        dy[11] = fz.imag();
    }

    cplx force_factor(cplx r2) const {
        if (spec_.kind == PotentialKind::LennardJones) return detail::lj_force_factor_from_r2(spec_, r2);
        const cplx r = radius_on_branch(r2, r_ref_);
        const cplx v = detail::yukawa(spec_, r);
        return detail::yukawa_force_factor(spec_, r, v);
    }

private:
    PotentialSpec spec_;
    double w2_;
    cplx r_ref_;
};

/// Time derivative of a phase state (complex-analytic form, principal branch).
inline PhaseState phase_derivatives(const PhaseState& s, const PotentialSpec& spec, const UnitSystem& units = {}) {
    cplx r_ref{1.0, 0.0};
    if (spec.v0 != 0.0) {
        const cplx r = complex_radius(s.q);
        detail::check_radius(r);
        r_ref = r;
    }
    HamiltonFlow flow(spec, units, r_ref);
    StateVector dy;
    flow(s.t, pack(s), dy);
    PhaseState d = unpack(dy, 1.0);
    return d;
}

namespace detail {

// Forward-mode dual number over complex values: value and derivative with
// respect to one real input variable.
struct CDual {
    cplx v, d;
};
inline CDual operator+(CDual a, CDual b) { return {a.v + b.v, a.d + b.d}; }
inline CDual operator-(CDual a, CDual b) { return {a.v - b.v, a.d - b.d}; }
inline CDual operator*(CDual a, CDual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline CDual operator*(double k, CDual a) { return {k * a.v, k * a.d}; }
inline CDual operator/(CDual a, CDual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
inline CDual dexp(CDual a) {
    const cplx e = std::exp(a.v);
    return {e, e * a.d};
}
inline CDual dsqrt(CDual a) {
    const cplx s = std::sqrt(a.v);
    return {s, a.d / (2.0 * s)};
}
inline CDual dpow(CDual a, int n) {
    CDual out{{1.0, 0.0}, {0.0, 0.0}};
    for (int i = 0; i < n; ++i) out = out * a;
    return out;
}

// H written out in plain arithmetic, differentiated in one real direction.
inline CDual hamiltonian_dual(const std::array<CDual, 6>& z, const PotentialSpec& spec, const UnitSystem& units) {
    const CDual &x = z[0], &y = z[1], &zz = z[2], &px = z[3], &py = z[4], &pz = z[5];
    const double w2 = units.omega * units.omega;
    CDual h = (0.5 / UnitSystem::mu) * (px * px + py * py + pz * pz) + (0.5 * UnitSystem::mu * w2) * (x * x + y * y);
    if (spec.v0 != 0.0) {
        const CDual r2 = x * x + y * y + zz * zz;
        if (spec.kind == PotentialKind::Yukawa) {
            const CDual r = dsqrt(r2);
            const CDual range{{spec.range, 0.0}, {0.0, 0.0}};
            const CDual minus_r_over_range = (-1.0) * (r / range);
            h = h + (-spec.v0 * spec.range) * (dexp(minus_r_over_range) / r);
        } else {
            const CDual s2{{spec.range * spec.range, 0.0}, {0.0, 0.0}};
            const CDual u6 = dpow(s2 / r2, 3);
            h = h + (4.0 * spec.v0) * (u6 * u6 - u6);
        }
    }
    return h;
}

} // namespace detail

/// Real/imaginary split of Hamilton's equations driven by H1 = Re H only:
///   d x1/dt =  dH1/dp1,  d p1/dt = -dH1/dx1,
///   d x2/dt = -dH1/dp2,  d p2/dt =  dH1/dx2,
/// for each of the three coordinate pairs. The partial derivatives of H1 are
/// taken by forward-mode differentiation of the plain Hamiltonian, independent
/// of the hand-written gradient used by phase_derivatives.
inline PhaseState phase_derivatives_split(const PhaseState& s, const PotentialSpec& spec,
                                          const UnitSystem& units = {}) {
    const std::array<cplx, 6> base{s.q.x, s.q.y, s.q.z, s.p.x, s.p.y, s.p.z};
    // dH1/d(real part) and dH1/d(imag part) of every complex coordinate.
    std::array<double, 6> d_re{}, d_im{};
    for (int k = 0; k < 6; ++k) {
        for (int part = 0; part < 2; ++part) {
            std::array<detail::CDual, 6> z;
            for (int j = 0; j < 6; ++j) z[j] = {base[j], {0.0, 0.0}};
            z[k].d = part == 0 ? cplx{1.0, 0.0} : cplx{0.0, 1.0};
            const double dh1 = detail::hamiltonian_dual(z, spec, units).d.real();
            (part == 0 ? d_re : d_im)[k] = dh1;
        }
    }
    auto qdot = [&](int k) { return cplx{d_re[k + 3], -d_im[k + 3]}; };
    auto pdot = [&](int k) { return cplx{-d_re[k], d_im[k]}; };
    PhaseState d;
    d.q = {qdot(0), qdot(1), qdot(2)};
    d.p = {pdot(0), pdot(1), pdot(2)};
    d.t = 1.0;
    return d;
}

/// Combined parity and time reversal: x -> -conj(x), p -> conj(p) for every
/// coordinate. It is an involution.
inline PhaseState pt_transform(const PhaseState& s) {
    PhaseState o;
    o.q = {-std::conj(s.q.x), -std::conj(s.q.y), -std::conj(s.q.z)};
    o.p = {std::conj(s.p.x), std::conj(s.p.y), std::conj(s.p.z)};
    o.t = s.t;
    return o;
}

struct StepOutcome {
    PhaseState state;
    double error = 0.0;
    double h_next = 0.0;
    bool accepted = false;
};

/// Single Fehlberg step from s with step h (may be negative). Throws
/// StepSizeUnderflow if the step is rejected and |h| is already at h_min.
inline StepOutcome rkf45_step(const PhaseState& s, double h, const IntegratorConfig& cfg, const PotentialSpec& spec,
                              const UnitSystem& units = {}) {
    cplx r_ref{1.0, 0.0};
    if (spec.v0 != 0.0) r_ref = complex_radius(s.q);
    HamiltonFlow flow(spec, units, r_ref);
    const auto res = rkf45_attempt<12>(flow, s.t, pack(s), h, cfg.step_control());
    if (!res.accepted && std::abs(h) <= cfg.h_min) throw StepSizeUnderflow("rkf45_step: step rejected at h_min");
    return {unpack(res.y, s.t + h), res.error, res.h_next, res.accepted};
}

namespace detail {

inline double max_abs_imag(const StateVector& v) {
    double m = 0.0;
    for (int i = 1; i < 12; i += 2) m = std::max(m, std::abs(v[i]));
    return m;
}

inline double wrap_angle(double a) {
    while (a > pi) a -= 2.0 * pi;
    while (a <= -pi) a += 2.0 * pi;
    return a;
}

// Accumulates the winding of (Re x, Re z) about the origin caused by the force:
// per visit inside the sphere, |net rotation - rotation of the force-free orbit
// launched from the entry state|. The free orbit is the closed-form confined
// motion, followed to its own exit from the sphere (or over the same duration
// when the visit never ends). Between samples the path is the cubic Hermite
// segment through (q, p/mu), which is exact for straight free motion.
class WindingTracker {
public:
    WindingTracker(double radius, double omega) : radius_(radius), omega_(omega) {}

    void observe(double re_r, const PhaseState& s) {
        const bool inside = re_r < radius_;
        if (inside) {
            if (!inside_) {
                inside_ = true;
                entry_ = s;
                net_ = 0.0;
            } else {
                net_ += sweep([&](double f) { return WindingTracker::hermite(last_, s, f); }, 0.0, 1.0);
            }
            last_ = s;
        } else if (inside_) {
            auto seg = [&](double f) { return WindingTracker::hermite(last_, s, f); };
            double lo = 0.0, hi = 1.0;
            if (principal_r(seg(1.0)) >= radius_) {
                for (int i = 0; i < 60; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    (principal_r(seg(mid)) >= radius_ ? hi : lo) = mid;
                }
            }
            net_ += sweep(seg, 0.0, hi);
            close(true);
        }
    }

    double finish() {
        if (inside_) close(false);
        return theta_;
    }
    bool resolved() const { return resolved_; }

private:
    static double angle(const ComplexVec3& q) { return std::atan2(q.x.real(), q.z.real()); }
    static double principal_r(const ComplexVec3& q) { return std::sqrt(q.squared()).real(); }

    static ComplexVec3 hermite(const PhaseState& a, const PhaseState& b, double f) {
        const double dt = b.t - a.t;
        const double f2 = f * f, f3 = f2 * f;
        const double h00 = 2 * f3 - 3 * f2 + 1, h10 = f3 - 2 * f2 + f, h01 = -2 * f3 + 3 * f2, h11 = f3 - f2;
        auto one = [&](cplx qa, cplx pa, cplx qb, cplx pb) {
            return h00 * qa + h10 * dt * pa / UnitSystem::mu + h01 * qb + h11 * dt * pb / UnitSystem::mu;
        };
        return {one(a.q.x, a.p.x, b.q.x, b.p.x), one(a.q.y, a.p.y, b.q.y, b.p.y), one(a.q.z, a.p.z, b.q.z, b.p.z)};
    }

    PhaseState free_at(double tau) const {
        PhaseState s = entry_;
        const double w = omega_;
        const double c = w > 0.0 ? std::cos(w * tau) : 1.0;
        const double sn = w > 0.0 ? std::sin(w * tau) / w : tau;
        const double ws = w > 0.0 ? -w * std::sin(w * tau) : 0.0;
        s.q.x = entry_.q.x * c + entry_.p.x * sn / UnitSystem::mu;
        s.q.y = entry_.q.y * c + entry_.p.y * sn / UnitSystem::mu;
        s.q.z = entry_.q.z + entry_.p.z * tau / UnitSystem::mu;
        s.p.x = entry_.p.x * c + UnitSystem::mu * entry_.q.x * ws;
        s.p.y = entry_.p.y * c + UnitSystem::mu * entry_.q.y * ws;
        s.t = entry_.t + tau;
        return s;
    }

    // rotation along a parametrized path over [a, b], bisected until each piece turns by < 0.5 rad
    template <class Path>
    double sweep(const Path& path, double a, double b, int depth = 0) {
        const double d = wrap_angle(angle(path(b)) - angle(path(a)));
        if (std::abs(d) <= 0.5 || depth >= 50) {
            if (std::abs(d) > 0.5 * pi) resolved_ = false;
            return d;
        }
        const double m = 0.5 * (a + b);
        return sweep(path, a, m, depth + 1) + sweep(path, m, b, depth + 1);
    }

    double free_rotation(bool to_exit) {
        auto path = [&](double tau) { return free_at(tau).q; };
        const double dt = 0.05 / std::max(omega_, 1.0);
        const double limit = to_exit ? free_time_cap : last_.t - entry_.t;
        double tau = 0.0, total = 0.0;
        while (tau < limit) {
            const double next = std::min(tau + dt, limit);
            if (to_exit && principal_r(path(next)) >= radius_) {
                double lo = tau, hi = next;
                for (int i = 0; i < 60; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    (principal_r(path(mid)) >= radius_ ? hi : lo) = mid;
                }
                return total + sweep(path, tau, hi);
            }
            total += sweep(path, tau, next);
            tau = next;
        }
        return total;
    }

    void close(bool exited) {
        theta_ += std::abs(net_ - free_rotation(exited));
        inside_ = false;
    }

    static constexpr double free_time_cap = 1e5;
    double radius_, omega_;
    bool inside_ = false;
    bool resolved_ = true;
    PhaseState entry_{}, last_{};
    double net_ = 0.0, theta_ = 0.0;
};

} // namespace detail

/// Observer invoked after each accepted step with (previous, current) states.
struct NoObserver {
    void operator()(const PhaseState&, const PhaseState&) const {}
};

/// Integrates until the particle escapes past |Re z| >= z_cut, the time or step
/// budget is exhausted, or the path reaches the branch cut or a singularity.
/// Never throws for dynamical failures: they are reported through the outcome.
template <class Observer = NoObserver>
TrajectoryRecord integrate_trajectory(const PhaseState& initial, const IntegratorConfig& cfg, const PotentialSpec& spec,
                                      const UnitSystem& units = {}, Observer&& observer = {}) {
    TrajectoryRecord rec;
    rec.final_state = initial;
    const StepControl ctl = cfg.step_control();
    const bool interacting = spec.v0 != 0.0;

    cplx r_ref{1.0, 0.0};
    if (interacting) {
        const cplx r2 = initial.q.squared();
        if (r2 == cplx{0.0, 0.0} || (r2.imag() == 0.0 && r2.real() <= 0.0)) {
            rec.outcome = Outcome::BranchCut;
            return rec;
        }
        r_ref = std::sqrt(r2);
    }
    HamiltonFlow flow(spec, units, r_ref);
    auto energy = [&](const PhaseState& s, cplx r) {
        return kinetic_energy(s.p) + confinement_energy(units, s.q) +
               (interacting ? potential_on_branch(spec, s.q, r) : cplx{0.0, 0.0});
    };
    const cplx h0 = energy(initial, r_ref);
    detail::WindingTracker winding(5.0 * spec.range, units.omega);

    StateVector y = pack(initial);
    double t = initial.t;
    double h = cfg.h_init;
    PhaseState prev = initial;
    rec.max_imag = detail::max_abs_imag(y);
    {
        const cplx r0 = interacting ? r_ref : std::sqrt(initial.q.squared());
        winding.observe(r0.real(), initial);
    }
    if (cfg.record_every > 0) rec.samples.push_back(initial);

    long attempts = 0;
    while (true) {
        if (t - initial.t > cfg.t_max) {
            rec.outcome = Outcome::Trapped;
            break;
        }
        if (rec.n_steps >= cfg.max_steps || ++attempts > 4 * cfg.max_steps) {
            rec.outcome = Outcome::StepBudgetExceeded;
            break;
        }
        auto res = rkf45_attempt<12>(flow, t, y, h, ctl);
        if (!res.accepted) {
            ++rec.n_rejected;
            if (h <= cfg.h_min) {
                rec.outcome = Outcome::BranchCut;  // singular region: no step size satisfies the tolerance
                break;
            }
            h = std::min(res.h_next, h);
            continue;
        }
        t += h;
        y = res.y;
        h = res.h_next;
        ++rec.n_steps;

        const PhaseState cur = unpack(y, t);
        const double z_re = y[4];
        if (!std::isfinite(z_re) || !cur.q.finite() || !cur.p.finite()) {
            rec.outcome = Outcome::BranchCut;
            break;
        }
        cplx r{0.0, 0.0};
        const cplx r2 = cur.q.squared();
        if (interacting) {
            r = radius_on_branch(r2, flow.reference());
            if (r.real() < 0.0 && cfg.branch_policy == BranchPolicy::Terminate) {
                rec.final_state = cur;
                rec.outcome = Outcome::BranchCut;
                break;
            }
            flow.set_reference(r);
        } else {
            r = std::sqrt(r2);
        }
        rec.max_imag = std::max(rec.max_imag, detail::max_abs_imag(y));
        rec.energy_drift = std::max(rec.energy_drift, std::abs(energy(cur, r) - h0));
        winding.observe(r.real(), cur);
        observer(prev, cur);
        if (cfg.record_every > 0 && rec.n_steps % cfg.record_every == 0) rec.samples.push_back(cur);
        prev = cur;
        rec.final_state = cur;

        if (z_re >= cfg.z_cut && y[10] > 0.0) {
            rec.outcome = Outcome::Transmitted;
            break;
        }
        if (z_re <= -cfg.z_cut && y[10] < 0.0) {
            rec.outcome = Outcome::Reflected;
            break;
        }
    }
    rec.theta = winding.finish();
    rec.theta_resolved = winding.resolved();
    if (cfg.record_every > 0 && (rec.samples.empty() || rec.samples.back().t != rec.final_state.t))
        rec.samples.push_back(rec.final_state);
    return rec;
}

/// Winding angle carried by a record; InsufficientSamples if the path was
/// stepped too coarsely to unwrap the polar angle.
inline double winding_angle(const TrajectoryRecord& record) {
    if (!record.theta_resolved) throw InsufficientSamples("polar angle changed by more than pi/2 in one step");
    return record.theta;
}

/// Winding angle of an explicit path of (Re x, Re z) samples.
inline double winding_angle(const std::vector<PhaseState>& path, double sphere_radius, const UnitSystem& units = {}) {
    if (path.size() < 3) throw InsufficientSamples("need at least three path samples");
    detail::WindingTracker tracker(sphere_radius, units.omega);
    for (const auto& s : path) tracker.observe(std::sqrt(s.q.squared()).real(), s);
    const double theta = tracker.finish();
    if (!tracker.resolved()) throw InsufficientSamples("polar angle changed by more than pi/2 between samples");
    return theta;
}

/// Fixed-duration propagation (t_end may lie before s.t), following the branch
/// of r continuously. Throws StepSizeUnderflow or BranchCutError on failure.
/// `branch`, if given: a nonzero value on entry picks the starting sheet of r
/// (default: principal root); on return it holds r at t_end on the followed sheet.
inline PhaseState propagate(const PhaseState& s, double t_end, const IntegratorConfig& cfg, const PotentialSpec& spec,
                            const UnitSystem& units = {}, std::vector<PhaseState>* path = nullptr,
                            double path_dt = 0.0, cplx* branch = nullptr) {
    const bool interacting = spec.v0 != 0.0;
    cplx r_ref = interacting ? complex_radius(s.q) : cplx{1.0, 0.0};
    if (interacting && branch && *branch != cplx{}) r_ref = radius_on_branch(s.q.squared(), *branch);
    HamiltonFlow flow(spec, units, r_ref);
    const StepControl ctl = cfg.step_control();
    const double dir = t_end >= s.t ? 1.0 : -1.0;
    StateVector y = pack(s);
    double t = s.t, h = cfg.h_init;
    double next_mark = s.t;
    auto mark = [&](const StateVector& v, double tt) {
        if (!path) return;
        path->push_back(unpack(v, tt));
    };
    if (path && path_dt > 0.0) {
        mark(y, t);
        next_mark = s.t + dir * path_dt;
    }
    long steps = 0;
    while (dir * (t_end - t) > 0.0) {
        if (++steps > cfg.max_steps) throw ConvergenceError("propagate exceeded max_steps");
        double target = t_end;
        if (path && path_dt > 0.0 && dir * (next_mark - t_end) < 0.0) target = next_mark;
        const double remaining = std::abs(target - t);
        const double hs = std::min(h, remaining);
        auto res = rkf45_attempt<12>(flow, t, y, dir * hs, ctl);
        if (!res.accepted) {
            if (hs <= cfg.h_min) throw StepSizeUnderflow("propagate: step rejected at h_min");
            h = std::min(res.h_next, hs);
            continue;
        }
        const bool hit = hs == remaining;
        t = hit ? target : t + dir * hs;
        y = res.y;
        if (!hit || hs == h) h = res.h_next;
        if (interacting) {
            const cplx r = radius_on_branch(unpack(y, t).q.squared(), flow.reference());
            if (r.real() < 0.0 && cfg.branch_policy == BranchPolicy::Terminate)
                throw BranchCutError("propagate: path crossed the branch cut of r");
            flow.set_reference(r);
        }
        if (hit && path && path_dt > 0.0 && target == next_mark) {
            mark(y, t);
            next_mark += dir * path_dt;
        }
    }
    if (branch) *branch = interacting ? radius_on_branch(unpack(y, t).q.squared(), flow.reference()) : r_ref;
    return unpack(y, t);
}

} // namespace cirlab
