#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cirlab/model.hpp"

using namespace cirlab;

namespace {

PotentialSpec yukawa(double v0, double r0 = 1.0) { return {PotentialKind::Yukawa, v0, r0}; }
PotentialSpec lj(double v0, double sigma = 1.0) { return {PotentialKind::LennardJones, v0, sigma}; }

} // namespace

TEST(Potential, YukawaClosedForm) {
    EXPECT_NEAR(potential_value(yukawa(50.0), 1.0), -50.0 / std::exp(1.0), 1e-13);
    EXPECT_NEAR(potential_value(yukawa(50.0), 1.0), -18.3940, 1e-4);
    EXPECT_NEAR(potential_value(yukawa(2.0, 0.5), 1.5), -2.0 * 0.5 * std::exp(-3.0) / 1.5, 1e-15);
    EXPECT_LT(std::abs(potential_value(yukawa(3.0), 60.0)), 1e-25);
}

TEST(Potential, LennardJonesLandmarks) {
    EXPECT_NEAR(potential_value(lj(1.0), 1.0), 0.0, 1e-15);
    EXPECT_NEAR(potential_value(lj(1.0), std::pow(2.0, 1.0 / 6.0)), -1.0, 1e-14);
    EXPECT_NEAR(potential_value(lj(2.5, 2.0), 3.0), 10.0 * (std::pow(2.0 / 3.0, 12) - std::pow(2.0 / 3.0, 6)), 1e-14);
}

TEST(Potential, RejectsInvalidSpec) {
    EXPECT_THROW(yukawa(-1.0).validate(), ValidationError);
    EXPECT_THROW(yukawa(1.0, 0.0).validate(), ValidationError);
    EXPECT_NO_THROW(yukawa(0.0).validate());
}

TEST(Gradient, YukawaOnAxisIsRadial) {
    const auto spec = yukawa(1.3);
    const auto g = potential_gradient(spec, {{0.0, 0.0}, {0.0, 0.0}, {1.7, 0.0}});
    EXPECT_EQ(g.x, cplx(0.0, 0.0));
    EXPECT_EQ(g.y, cplx(0.0, 0.0));
    EXPECT_NEAR(g.z.real(), potential_derivative(spec, 1.7), 1e-14);
    const double r = 1.7, v0 = 1.3;
    EXPECT_NEAR(g.z.real(), v0 * std::exp(-r) * (1.0 / r + 1.0 / (r * r)), 1e-14);
}

TEST(Gradient, LennardJonesVanishesAtMinimum) {
    const auto g = potential_gradient(lj(1.0), {{std::pow(2.0, 1.0 / 6.0), 0.0}, {0.0, 0.0}, {0.0, 0.0}});
    EXPECT_LT(std::abs(g.x), 1e-13);
    EXPECT_LT(std::abs(g.y), 1e-13);
    EXPECT_LT(std::abs(g.z), 1e-13);
}

// Central differences of the complex potential along each complex coordinate.
static ComplexVec3 fd_gradient(const PotentialSpec& spec, const ComplexVec3& q, double h) {
    auto v = [&](ComplexVec3 p) { return potential_value(spec, complex_radius(p)); };
    ComplexVec3 out;
    for (int k = 0; k < 3; ++k) {
        ComplexVec3 a = q, b = q;
        cplx* pa = k == 0 ? &a.x : k == 1 ? &a.y : &a.z;
        cplx* pb = k == 0 ? &b.x : k == 1 ? &b.y : &b.z;
        *pa += h;
        *pb -= h;
        const cplx d = (v(a) - v(b)) / (2.0 * h);
        (k == 0 ? out.x : k == 1 ? out.y : out.z) = d;
    }
    return out;
}

TEST(Gradient, YukawaMatchesFiniteDifferencesAtOnes) {
    const auto spec = yukawa(1.0);
    const ComplexVec3 q{{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}};
    const auto g = potential_gradient(spec, q);
    const auto f = fd_gradient(spec, q, 1e-6);
    for (auto [a, b] : {std::pair{g.x, f.x}, {g.y, f.y}, {g.z, f.z}}) EXPECT_LT(std::abs(a - b) / std::abs(b), 1e-8);
}

TEST(Gradient, RandomComplexDomainFiniteDifferences) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> re(-3.0, 3.0), im(-0.3, 0.3);
    for (const auto& spec : {yukawa(2.0, 0.7), lj(1.5, 1.0)}) {
        int checked = 0;
        while (checked < 200) {
            const ComplexVec3 q{{re(rng), im(rng)}, {re(rng), im(rng)}, {re(rng), im(rng)}};
            const cplx r = std::sqrt(q.squared());
            if (r.real() < 0.9 || std::abs(r.imag()) > 0.5 * r.real()) continue;
            const auto g = potential_gradient(spec, q);
            const auto f = fd_gradient(spec, q, 1e-6);
            const double scale = std::abs(g.x) + std::abs(g.y) + std::abs(g.z);
            const double err = std::abs(g.x - f.x) + std::abs(g.y - f.y) + std::abs(g.z - f.z);
            EXPECT_LT(err / scale, 1e-6);
            ++checked;
        }
    }
}

TEST(ComplexRadius, Examples) {
    EXPECT_EQ(complex_radius({{3.0, 0.0}, {4.0, 0.0}, {0.0, 0.0}}), cplx(5.0, 0.0));
    EXPECT_THROW(complex_radius({{0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}}), BranchCutError);
    const cplx r = complex_radius({{1.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}});
    EXPECT_NEAR(r.real(), 1.0, 1e-15);
    EXPECT_NEAR(r.imag(), 1.0, 1e-15);
}

TEST(ComplexRadius, RealInputIsEuclideanNorm) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng), y = u(rng), z = u(rng);
        const cplx r = complex_radius({{x, 0.0}, {y, 0.0}, {z, 0.0}});
        EXPECT_EQ(r.real(), std::sqrt(x * x + y * y + z * z));
        EXPECT_EQ(r.imag(), 0.0);
    }
}

TEST(Hamiltonian, Examples) {
    const UnitSystem u;
    PhaseState s;
    s.q = {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
    EXPECT_NEAR(hamiltonian_rel(u, yukawa(0.0), s).real(), 0.5, 1e-15);

    s.q = {{0.0, 0.0}, {0.0, 0.0}, {1e6, 0.0}};
    s.p = {{0.0, 0.0}, {0.0, 0.0}, {0.3, 0.0}};
    EXPECT_NEAR(hamiltonian_rel(u, yukawa(5.0), s).real(), 0.045, 1e-15);

    s.q = {{0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}};
    s.p = {};
    EXPECT_NEAR(hamiltonian_rel(u, yukawa(50.0), s).real(), -50.0 / std::exp(1.0), 1e-13);
}

TEST(Hamiltonian, RealStatesGiveRealEnergy) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (const auto& spec : {yukawa(4.0), lj(1.0)}) {
        for (int i = 0; i < 500; ++i) {
            PhaseState s;
            s.q = {{u(rng), 0.0}, {u(rng), 0.0}, {u(rng), 0.0}};
            s.p = {{u(rng), 0.0}, {u(rng), 0.0}, {u(rng), 0.0}};
            EXPECT_EQ(hamiltonian_rel(UnitSystem{}, spec, s).imag(), 0.0);
        }
    }
}

TEST(Channels, TransverseEnergy) {
    EXPECT_EQ(transverse_energy(0, 0), 1.0);
    EXPECT_EQ(transverse_energy(1, 0), 3.0);
    EXPECT_EQ(transverse_energy(0, 2), 3.0);
    UnitSystem u;
    u.omega = 0.7;
    for (int lz = -6; lz <= 6; ++lz)
        for (int n = 1; n <= 10; ++n)
            EXPECT_NEAR(transverse_energy(n, lz, u) - transverse_energy(n - 1, lz, u), 2.0 * u.omega, 1e-14);
}

TEST(Channels, ParamsValidation) {
    ScatterParams p = make_channel(0, 1, 1e-5);
    EXPECT_NO_THROW(p.validate());
    p.e_perp = 0.5;
    EXPECT_THROW(p.validate(), ValidationError);
    p = make_channel(0, 0, 1e-5);
    p.e_par = 0.0;
    EXPECT_THROW(p.validate(), ValidationError);
}
