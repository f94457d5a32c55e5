#pragma once

// Units, interaction potentials and the confined relative-motion Hamiltonian.
//
// Units are fixed at hbar = mu = 1; the trap frequency omega is configurable
// and all energies are in units of hbar*omega.

#include <cmath>
#include <complex>
#include <string>
#include <string_view>

#include "cirlab/errors.hpp"

namespace cirlab {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

struct UnitSystem {
    static constexpr double hbar = 1.0;
    static constexpr double mu = 1.0;
    double omega = 1.0;

    bool operator==(const UnitSystem&) const = default;

    void validate() const {
        if (!(omega > 0.0) || !std::isfinite(omega))
            throw ValidationError("omega must be positive, got " + std::to_string(omega));
    }
};

enum class PotentialKind { Yukawa, LennardJones };

inline std::string_view to_string(PotentialKind k) {
    return k == PotentialKind::Yukawa ? "yukawa" : "lennard-jones";
}

inline PotentialKind parse_potential_kind(std::string_view s) {
    if (s == "yukawa") return PotentialKind::Yukawa;
    if (s == "lennard-jones" || s == "lj") return PotentialKind::LennardJones;
    throw ArgumentError("unknown potential kind '" + std::string(s) + "'");
}

/// Interaction family with depth `v0` and length scale `range`
/// (r0 for Yukawa, sigma for Lennard-Jones).
struct PotentialSpec {
    PotentialKind kind = PotentialKind::Yukawa;
    double v0 = 0.0;
    double range = 1.0;

    bool operator==(const PotentialSpec&) const = default;

    void validate() const {
        if (!(v0 >= 0.0) || !std::isfinite(v0))
            throw ValidationError("v0 must be >= 0, got " + std::to_string(v0));
        if (!(range > 0.0) || !std::isfinite(range))
            throw ValidationError("range must be > 0, got " + std::to_string(range));
    }

    PotentialSpec with_v0(double v) const {
        PotentialSpec s = *this;
        s.v0 = v;
        return s;
    }
};

struct ComplexVec3 {
    cplx x{}, y{}, z{};

    cplx dot(const ComplexVec3& o) const { return x * o.x + y * o.y + z * o.z; }
    cplx squared() const { return dot(*this); }
    bool finite() const {
        auto f = [](cplx c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); };
        return f(x) && f(y) && f(z);
    }
    friend ComplexVec3 operator*(cplx a, const ComplexVec3& v) { return {a * v.x, a * v.y, a * v.z}; }
    friend ComplexVec3 operator+(const ComplexVec3& a, const ComplexVec3& b) {
        return {a.x + b.x, a.y + b.y, a.z + b.z};
    }
    friend ComplexVec3 operator-(const ComplexVec3& a, const ComplexVec3& b) {
        return {a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend bool operator==(const ComplexVec3&, const ComplexVec3&) = default;
};

struct PhaseState {
    ComplexVec3 q;
    ComplexVec3 p;
    double t = 0.0;

    friend bool operator==(const PhaseState&, const PhaseState&) = default;
};

/// Channel-like scattering parameters. `n` is the transverse label; when the
/// object is built from (n, lz) the transverse energy is (2n + |lz| + 1) omega.
struct ScatterParams {
    double e_perp = 1.0;
    double e_par = 1e-5;
    int lz = 0;
    int n = 0;

    bool operator==(const ScatterParams&) const = default;

    void validate(const UnitSystem& u = {}) const {
        if (!(e_par > 0.0))
            throw ValidationError("e_par must be > 0, got " + std::to_string(e_par));
        if (e_perp < std::abs(lz) * u.omega)
            throw ValidationError("e_perp = " + std::to_string(e_perp) + " is below |lz|*omega = " +
                                  std::to_string(std::abs(lz) * u.omega));
        if (n < 0) throw ValidationError("n must be >= 0");
    }
};

inline double transverse_energy(int n, int lz, const UnitSystem& units = {}) {
    if (n < 0) throw ArgumentError("transverse label n must be >= 0, got " + std::to_string(n));
    return (2.0 * n + std::abs(lz) + 1.0) * units.omega;
}

inline ScatterParams make_channel(int n, int lz, double e_par, const UnitSystem& units = {}) {
    return ScatterParams{transverse_energy(n, lz, units), e_par, lz, n};
}

/// Principal square root of x^2 + y^2 + z^2. The cut is the non-positive real axis.
inline cplx complex_radius(const ComplexVec3& q) {
    const cplx r2 = q.squared();
    if (r2.imag() == 0.0 && r2.real() <= 0.0)
        throw BranchCutError("x^2+y^2+z^2 = " + std::to_string(r2.real()) + " lies on the cut");
    return std::sqrt(r2);
}

namespace detail {

inline void check_radius(cplx r) {
    if (r == cplx{0.0, 0.0}) throw DomainError("potential evaluated at r = 0");
    if (!(r.real() > 0.0)) throw DomainError("potential requires Re r > 0");
}

// Lennard-Jones depends on r only through r^2, so it can be evaluated without a square root.
inline cplx lj_from_r2(const PotentialSpec& s, cplx r2) {
    const cplx u6 = std::pow(s.range * s.range / r2, 3);
    return 4.0 * s.v0 * (u6 * u6 - u6);
}

// (dV/dr) / r for Lennard-Jones, again a function of r^2 alone.
inline cplx lj_force_factor_from_r2(const PotentialSpec& s, cplx r2) {
    const cplx inv = 1.0 / r2;
    const cplx u6 = std::pow(s.range * s.range * inv, 3);
    return 4.0 * s.v0 * (-12.0 * u6 * u6 + 6.0 * u6) * inv;
}

inline cplx yukawa(const PotentialSpec& s, cplx r) {
    return -s.v0 * s.range / r * std::exp(-r / s.range);
}

// (dV/dr) / r for Yukawa given the potential value at r.
inline cplx yukawa_force_factor(const PotentialSpec& s, cplx r, cplx v) {
    return -v * (1.0 / r + 1.0 / s.range) / r;
}

} // namespace detail

/// Interaction potential at complex separation r (principal branch, Re r > 0).
inline cplx potential_value(const PotentialSpec& spec, cplx r) {
    detail::check_radius(r);
    if (spec.v0 == 0.0) return {0.0, 0.0};
    if (spec.kind == PotentialKind::Yukawa) return detail::yukawa(spec, r);
    return detail::lj_from_r2(spec, r * r);
}

inline double potential_value(const PotentialSpec& spec, double r) {
    return potential_value(spec, cplx{r, 0.0}).real();
}

/// dV/dr on the real axis.
inline double potential_derivative(const PotentialSpec& spec, double r) {
    if (!(r > 0.0)) throw DomainError("potential derivative requires r > 0");
    if (spec.v0 == 0.0) return 0.0;
    if (spec.kind == PotentialKind::Yukawa) {
        const double v = detail::yukawa(spec, r).real();
        return -v * (1.0 / r + 1.0 / spec.range);
    }
    return (detail::lj_force_factor_from_r2(spec, r * r) * r).real();
}

/// Value and (dV/dr)/r on a chosen branch of r. `r` must square to `r2`.
struct RadialTerms {
    cplx v;
    cplx force_factor;
};

inline RadialTerms radial_terms(const PotentialSpec& spec, cplx r2, cplx r) {
    if (spec.v0 == 0.0) return {{0.0, 0.0}, {0.0, 0.0}};
    if (r2 == cplx{0.0, 0.0}) throw DomainError("potential evaluated at r = 0");
    if (spec.kind == PotentialKind::LennardJones)
        return {detail::lj_from_r2(spec, r2), detail::lj_force_factor_from_r2(spec, r2)};
    const cplx v = detail::yukawa(spec, r);
    return {v, detail::yukawa_force_factor(spec, r, v)};
}

inline ComplexVec3 potential_gradient(const PotentialSpec& spec, const ComplexVec3& q) {
    const cplx r = complex_radius(q);
    detail::check_radius(r);
    const auto terms = radial_terms(spec, q.squared(), r);
    return terms.force_factor * q;
}

/// Interaction energy along a trajectory whose radius is tracked on branch `r`.
inline cplx potential_on_branch(const PotentialSpec& spec, const ComplexVec3& q, cplx r) {
    return radial_terms(spec, q.squared(), r).v;
}

inline cplx confinement_energy(const UnitSystem& u, const ComplexVec3& q) {
    return 0.5 * UnitSystem::mu * u.omega * u.omega * (q.x * q.x + q.y * q.y);
}

inline cplx kinetic_energy(const ComplexVec3& p) { return p.squared() / (2.0 * UnitSystem::mu); }

/// p^2/2mu + mu omega^2 (x^2 + y^2)/2 + V(r), principal branch of r.
inline cplx hamiltonian_rel(const UnitSystem& units, const PotentialSpec& spec, const PhaseState& s) {
    cplx v{0.0, 0.0};
    if (spec.v0 != 0.0) v = potential_value(spec, complex_radius(s.q));
    return kinetic_energy(s.p) + confinement_energy(units, s.q) + v;
}

/// Same Hamiltonian with r taken on an explicitly tracked branch.
inline cplx hamiltonian_rel(const UnitSystem& units, const PotentialSpec& spec, const PhaseState& s, cplx r) {
    return kinetic_energy(s.p) + confinement_energy(units, s.q) + potential_on_branch(spec, s.q, r);
}

} // namespace cirlab
