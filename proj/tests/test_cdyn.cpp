#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cirlab/cdyn.hpp"
#include "cirlab/mc.hpp"

using namespace cirlab;

namespace {

const PotentialSpec kFree{PotentialKind::Yukawa, 0.0, 1.0};

PhaseState random_state(std::mt19937_64& rng, double im_scale) {
    std::uniform_real_distribution<double> re(-2.0, 2.0), im(-im_scale, im_scale);
    PhaseState s;
    s.q = {{re(rng), im(rng)}, {re(rng), im(rng)}, {re(rng), im(rng)}};
    s.p = {{re(rng), im(rng)}, {re(rng), im(rng)}, {re(rng), im(rng)}};
    return s;
}

double distance(const PhaseState& a, const PhaseState& b) {
    return std::abs(a.q.x - b.q.x) + std::abs(a.q.y - b.q.y) + std::abs(a.q.z - b.q.z) + std::abs(a.p.x - b.p.x) +
           std::abs(a.p.y - b.p.y) + std::abs(a.p.z - b.p.z);
}

bool away_from_cut(const PhaseState& s) {
    const cplx r = std::sqrt(s.q.squared());
    return r.real() > 0.8 && std::abs(r.imag()) < 0.5 * r.real();
}

} // namespace

TEST(Derivatives, RealOscillatorLimit) {
    PhaseState s;
    s.q = {{0.3, 0.0}, {-0.7, 0.0}, {2.0, 0.0}};
    s.p = {{1.1, 0.0}, {0.2, 0.0}, {0.5, 0.0}};
    const auto d = phase_derivatives(s, kFree);
    EXPECT_EQ(d.q.x, s.p.x);
    EXPECT_EQ(d.q.y, s.p.y);
    EXPECT_EQ(d.q.z, s.p.z);
    EXPECT_EQ(d.p.x, -s.q.x);
    EXPECT_EQ(d.p.y, -s.q.y);
    EXPECT_EQ(d.p.z, cplx(0.0, 0.0));
}

TEST(Derivatives, ForceAtRest) {
    const PotentialSpec y{PotentialKind::Yukawa, 3.0, 1.0};
    PhaseState s;
    s.q = {{0.4, 0.0}, {0.3, 0.0}, {1.2, 0.0}};
    const auto d = phase_derivatives(s, y);
    EXPECT_EQ(std::abs(d.q.x) + std::abs(d.q.y) + std::abs(d.q.z), 0.0);
    const auto g = potential_gradient(y, s.q);
    EXPECT_NEAR(std::abs(d.p.x + g.x + s.q.x), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(d.p.y + g.y + s.q.y), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(d.p.z + g.z), 0.0, 1e-14);
}

TEST(Derivatives, SplitFormAgreesWithComplexForm) {
    std::mt19937_64 rng(5);
    for (const PotentialSpec& spec : {PotentialSpec{PotentialKind::Yukawa, 2.0, 1.0},
                                      PotentialSpec{PotentialKind::LennardJones, 1.0, 1.0}}) {
        int n = 0;
        while (n < 200) {
            const auto s = random_state(rng, 0.4);
            if (!away_from_cut(s)) continue;
            const auto a = phase_derivatives(s, spec);
            const auto b = phase_derivatives_split(s, spec);
            const double scale = std::abs(a.q.x) + std::abs(a.q.y) + std::abs(a.q.z) + std::abs(a.p.x) +
                                 std::abs(a.p.y) + std::abs(a.p.z);
            EXPECT_LT(distance(a, b), 1e-14 * std::max(1.0, scale));
            ++n;
        }
    }
}

TEST(PT, InvolutionAndRealPlane) {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100; ++i) {
        const auto s = random_state(rng, 1.0);
        EXPECT_EQ(distance(pt_transform(pt_transform(s)), s), 0.0);
    }
    PhaseState r;
    r.q = {{0.5, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
    r.p = {{1.5, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
    const auto t = pt_transform(r);
    EXPECT_EQ(t.q.x, cplx(-0.5, 0.0));
    EXPECT_EQ(t.p.x, cplx(1.5, 0.0));
}

TEST(PT, HamiltonianConjugates) {
    std::mt19937_64 rng(13);
    const PotentialSpec y{PotentialKind::Yukawa, 1.7, 1.0};
    int n = 0;
    while (n < 200) {
        const auto s = random_state(rng, 0.5);
        if (!away_from_cut(s)) continue;
        const cplx h = hamiltonian_rel(UnitSystem{}, y, s);
        const cplx hp = hamiltonian_rel(UnitSystem{}, y, pt_transform(s));
        EXPECT_LT(std::abs(hp - std::conj(h)), 1e-13 * std::max(1.0, std::abs(h)));
        ++n;
    }
}

TEST(Integrator, OscillatorReturnsAfterOnePeriod) {
    IntegratorConfig cfg;
    cfg.rtol = 1e-9;
    PhaseState s;
    s.q = {{1.0, 0.3}, {-0.5, 0.1}, {0.0, 0.0}};
    s.p = {{0.2, -0.4}, {0.7, 0.0}, {0.0, 0.0}};
    const auto e = propagate(s, 2.0 * pi, cfg, kFree);
    EXPECT_LT(distance(e, s), 1e-7);
}

TEST(Integrator, FreeLongitudinalMotionIsExact) {
    IntegratorConfig cfg;
    PhaseState s;
    s.q = {{0.0, 0.0}, {0.0, 0.0}, {-10.0, 0.0}};
    s.p = {{0.0, 0.0}, {0.0, 0.0}, {0.3, 0.0}};
    const auto e = propagate(s, 7.0, cfg, kFree);
    EXPECT_NEAR(e.q.z.real(), -10.0 + 0.3 * 7.0, 1e-13);
    EXPECT_EQ(e.p.z.real(), 0.3);
}

TEST(Integrator, FourthOrderConvergence) {
    auto f = [](double, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    auto err = [&](int steps) {
        std::array<double, 2> y{1.0, 0.0};
        const double h = 2.0 * pi / steps;
        for (int i = 0; i < steps; ++i) y = rkf45_fixed<2>(f, i * h, y, h);
        return std::hypot(y[0] - 1.0, y[1]);
    };
    const double ratio = err(50) / err(100);
    EXPECT_GT(ratio, 13.0);
    EXPECT_LT(ratio, 19.0);
}

TEST(Integrator, ReversibleRoundTrip) {
    const PotentialSpec y{PotentialKind::Yukawa, 1.0, 1.0};
    IntegratorConfig cfg;
    PhaseState s;
    s.q = {{1.2, 0.05}, {0.0, 0.0}, {-2.0, 0.02}};
    s.p = {{0.0, 0.1}, {0.3, 0.0}, {0.5, 0.0}};
    const auto fwd = propagate(s, 5.0, cfg, y);
    const auto back = propagate(fwd, 0.0, cfg, y);
    EXPECT_LT(distance(back, s), 1e4 * cfg.atol);
}

TEST(Integrator, RoundTripAcrossBranchCut) {
    const PotentialSpec y{PotentialKind::Yukawa, 1.0, 1.0};
    IntegratorConfig cfg;
    PhaseState s;
    s.q = {{1.0, 0.1}, {0.2, -0.05}, {-1.5, 0.05}};
    s.p = {{0.1, 0.05}, {0.4, 0.0}, {0.6, -0.02}};
    cplx sheet{};
    const auto fwd = propagate(s, 5.0, cfg, y, {}, nullptr, 0.0, &sheet);
    const cplx principal = std::sqrt(fwd.q.squared());
    EXPECT_LT(std::abs(sheet + principal), 1e-12);
    const auto back = propagate(fwd, 0.0, cfg, y, {}, nullptr, 0.0, &sheet);
    EXPECT_LT(distance(back, s), 1e4 * cfg.atol);
}

TEST(Integrator, PTClosureOfPaths) {
    const PotentialSpec y{PotentialKind::Yukawa, 1.0, 1.0};
    IntegratorConfig cfg;
    cfg.atol = cfg.rtol = 1e-11;
    PhaseState s;
    s.q = {{1.0, 0.1}, {0.2, -0.05}, {-1.5, 0.05}};
    s.p = {{0.1, 0.05}, {0.4, 0.0}, {0.6, -0.02}};
    const auto u0 = pt_transform(s);
    for (double t : {0.5, 1.5, 3.0}) {
        const auto fwd = propagate(s, t, cfg, y);
        auto back = propagate(u0, -t, cfg, y);
        EXPECT_LT(distance(back, pt_transform(fwd)), 1e-6) << t;
    }
}

TEST(Integrator, RealInitialDataStayReal) {
    EnsembleSpec spec;
    spec.potential = {PotentialKind::Yukawa, 2.0, 1.0};
    spec.sampling.delta_max = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        EventStream stream(spec.master_seed, i);
        const auto smp = sample_initial_state(spec.params, spec.potential, spec.sampling, stream);
        const auto rec = integrate_trajectory(smp.state, spec.integrator, spec.potential);
        EXPECT_LT(rec.max_imag, 1e-10);
    }
}

TEST(Integrator, OutcomeClassification) {
    EnsembleSpec spec;
    spec.potential = kFree;
    spec.sampling.delta_max = 0.5;
    for (std::size_t i = 0; i < 10; ++i) {
        const auto ev = simulate_event(spec, i);
        EXPECT_EQ(ev.outcome, Outcome::Transmitted);
    }
}

TEST(Integrator, DeepYukawaBothOutcomes) {
    EnsembleSpec spec;
    spec.potential = {PotentialKind::Yukawa, 50.0, 1.0};
    spec.params = make_channel(5, 0, 1e-6);
    spec.n_events = 40;
    int trans = 0, refl = 0;
    for (const auto& ev : run_events(spec, spec.n_events)) {
        trans += ev.outcome == Outcome::Transmitted;
        refl += ev.outcome == Outcome::Reflected;
    }
    EXPECT_GT(trans, 0);
    EXPECT_GT(refl, 0);
}

TEST(Integrator, EscapeRulesMatchFinalState) {
    EnsembleSpec spec;
    spec.potential = {PotentialKind::Yukawa, 0.043, 1.0};
    for (std::size_t i = 0; i < 20; ++i) {
        EventStream stream(spec.master_seed, i);
        const auto smp = sample_initial_state(spec.params, spec.potential, spec.sampling, stream);
        const auto rec = integrate_trajectory(smp.state, spec.integrator, spec.potential);
        const auto& f = rec.final_state;
        if (rec.outcome == Outcome::Transmitted) {
            EXPECT_GE(f.q.z.real(), spec.integrator.z_cut);
            EXPECT_GT(f.p.z.real(), 0.0);
        } else if (rec.outcome == Outcome::Reflected) {
            EXPECT_LE(f.q.z.real(), -spec.integrator.z_cut);
            EXPECT_LT(f.p.z.real(), 0.0);
        }
    }
}

TEST(Integrator, DeterministicOutcomes) {
    EnsembleSpec spec;
    spec.potential = {PotentialKind::Yukawa, 0.043, 1.0};
    for (std::size_t i = 0; i < 10; ++i) {
        const auto a = simulate_event(spec, i), b = simulate_event(spec, i);
        EXPECT_EQ(a.outcome, b.outcome);
        EXPECT_EQ(a.theta, b.theta);
        EXPECT_EQ(a.n_steps, b.n_steps);
    }
}

TEST(Winding, SyntheticRevolution) {
    // Unit-speed loop around the origin, then straight on along -x: the path is the
    // free orbit from the entry point (0, -1) with one extra revolution inserted.
    UnitSystem free_units;
    free_units.omega = 0.0;
    std::vector<PhaseState> path;
    auto add = [&](double x, double z, double px, double pz, double t) {
        PhaseState s;
        s.q = {{x, 0.0}, {0.0, 0.0}, {z, 0.0}};
        s.p = {{px, 0.0}, {0.0, 0.0}, {pz, 0.0}};
        s.t = t;
        path.push_back(s);
    };
    add(0.0, -3.0, 0.0, 1.0, -2.0);
    const int n = 2000;
    for (int i = 0; i <= n; ++i) {
        const double a = pi + 2.0 * pi * i / n;
        add(std::sin(a), std::cos(a), std::cos(a), -std::sin(a), a - pi);
    }
    add(-3.0, -1.0, -1.0, 0.0, 2.0 * pi + 3.0);
    EXPECT_NEAR(winding_angle(path, 2.0, free_units), 2.0 * pi, 1e-6);
}

TEST(Winding, StraightPassageHasNoExcess) {
    UnitSystem free_units;
    free_units.omega = 0.0;
    std::vector<PhaseState> path;
    for (int i = 0; i <= 400; ++i) {
        PhaseState s;
        s.q = {{0.5, 0.0}, {0.0, 0.0}, {-10.0 + 0.05 * i, 0.0}};
        s.p = {{0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}};
        s.t = 0.05 * i;
        path.push_back(s);
    }
    EXPECT_NEAR(winding_angle(path, 5.0, free_units), 0.0, 1e-12);
}

TEST(Winding, VanishesWithoutForce) {
    for (double delta_max : {0.0, 0.5}) {
        EnsembleSpec spec;
        spec.potential = {PotentialKind::Yukawa, 0.0, 1.0};
        spec.sampling.delta_max = delta_max;
        for (std::size_t i = 0; i < 6; ++i) {
            const auto ev = simulate_event(spec, i);
            EXPECT_TRUE(ev.theta_resolved);
            EXPECT_LT(ev.theta, 1e-6) << delta_max << " " << i;
        }
    }
}

TEST(Winding, CoarsePathIsRejected) {
    std::vector<PhaseState> path(3);
    path[0].q = {{0.0, 0.0}, {0.0, 0.0}, {-1.0, 0.0}};
    path[1].q = {{0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}};
    path[2].q = {{0.0, 0.0}, {0.0, 0.0}, {-1.0, 0.0}};
    EXPECT_THROW(winding_angle(path, 5.0), InsufficientSamples);
}

TEST(Winding, NegligibleForWeakPotential) {
    EnsembleSpec spec;
    // fast passage: the weak force can only deflect orbits that nearly hit the centre
    spec.params = make_channel(0, 0, 1.0);
    spec.potential = {PotentialKind::Yukawa, 1e-4, 1.0};
    spec.sampling.delta_max = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        const auto ev = simulate_event(spec, i);
        EXPECT_LT(ev.theta, 0.05);
    }
}
