#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cirlab/freespace.hpp"
#include "oracles.hpp"

using namespace cirlab;
using oracle::g_of;

namespace {

PotentialSpec yukawa(double v0) { return {PotentialKind::Yukawa, v0, 1.0}; }

} // namespace

TEST(EffectivePotential, Limits) {
    const auto spec = yukawa(2.0);
    EXPECT_EQ(effective_potential(spec, 0.0, 1.3), potential_value(spec, 1.3));
    EXPECT_LT(std::abs(effective_potential(spec, 1.0, 1e4)), 1e-8);
    EXPECT_THROW(effective_potential(spec, 1.0, 0.0), DomainError);
}

TEST(EffectivePotential, BarrierAtOrbitingDepth) {
    const double e = 0.1, j = 4.0 * std::sqrt(2.0 * e);
    const auto spec = yukawa(4.8);
    double best = -1e9;
    bool interior = false;
    for (double r = 1.0; r < 20.0; r += 1e-4) {
        const double v = effective_potential(spec, j, r);
        if (v > best) {
            best = v;
            interior = r > 1.0 + 1e-3 && r < 20.0 - 1e-3;
        }
    }
    EXPECT_TRUE(interior);
    EXPECT_NEAR(best, e, 0.01);
}

TEST(ClosestApproach, FreeMotion) {
    EXPECT_EQ(closest_approach(yukawa(0.0), {4.0, 0.1}), 4.0);
    EXPECT_LT(closest_approach(yukawa(1.0), {4.0, 0.1}), 4.0);
}

TEST(ClosestApproach, MatchesDenseScan) {
    const auto spec = yukawa(1.0);
    const ImpactConfig cfg{4.0, 0.1};
    const double rm = closest_approach(spec, cfg);
    const double oracle = oracle::scan_turning_point(spec, cfg.angular_momentum(), cfg.energy);
    EXPECT_NEAR(rm, oracle, 1e-9);
    const double g = g_of(spec, cfg.angular_momentum(), cfg.energy, rm);
    EXPECT_GE(g, -1e-15);
    EXPECT_LE(g, 1e-10);
}

TEST(ClosestApproach, TurningPointInvariantAcrossDepths) {
    for (double v0 : {0.1, 0.5, 2.0, 4.0, 4.7, 6.0, 20.0}) {
        const ImpactConfig cfg{4.0, 0.1};
        const double rm = closest_approach(yukawa(v0), cfg);
        const double g = g_of(yukawa(v0), cfg.angular_momentum(), cfg.energy, rm);
        EXPECT_GE(g, -1e-14) << v0;
        EXPECT_LE(g, 1e-10) << v0;
    }
}

TEST(Deflection, ZeroWithoutPotential) {
    for (double s : {0.5, 2.0, 4.0})
        for (double e : {0.05, 0.1, 1.0}) EXPECT_NEAR(deflection_angle(yukawa(0.0), {s, e}), 0.0, 1e-8);
}

TEST(Deflection, MatchesTanhSinhOracle) {
    for (double v0 : {0.3, 1.0, 3.0}) {
        const double a = deflection_angle(yukawa(v0), {4.0, 0.1});
        const double b = oracle::tanh_sinh_theta(yukawa(v0), 4.0, 0.1);
        EXPECT_NEAR(a, b, 1e-6) << v0;
    }
}

TEST(Deflection, RefinementStable) {
    const auto spec = yukawa(2.0);
    const double a = deflection_angle(spec, {4.0, 0.1}, 1e-11);
    const double b = deflection_angle(spec, {4.0, 0.1}, 1e-14);
    EXPECT_LT(std::abs(a - b), 1e-8);
}

TEST(Orbiting, ThresholdNearFourPointEight) {
    const auto op = orbiting_threshold(yukawa(1.0), 4.0, 0.1);
    EXPECT_NEAR(op.v0, 4.8, 0.1);
    // Double-root conditions at (r*, V0*).
    const double j = 4.0 * std::sqrt(0.2);
    const auto at = yukawa(op.v0);
    EXPECT_NEAR(effective_potential(at, j, op.r), 0.1, 1e-10);
    EXPECT_NEAR(detail::effective_potential_slope(at, j, op.r), 0.0, 1e-10);
}

TEST(Orbiting, HeadOnHasNoRegime) { EXPECT_THROW(orbiting_threshold(yukawa(1.0), 0.0, 0.1), NoOrbitingRegime); }

TEST(Orbiting, LogarithmicDivergenceSlope) {
    // Below V0* the orbit turns just outside r*, where g = E - V_eff ~ (g''/2)(x^2 - x_t^2) and
    // x_t^2 is linear in V0* - V0. Theta then grows by J / (r*^2 sqrt(g'')) per unit of ln(1 / (V0* - V0)).
    const double e = 0.1, j = 4.0 * std::sqrt(2.0 * e);
    const auto op = orbiting_threshold(yukawa(1.0), 4.0, e);
    const double h = 1e-4;
    const auto at = yukawa(op.v0);
    const double g2 = (oracle::g_of(at, j, e, op.r + h) - 2.0 * oracle::g_of(at, j, e, op.r) + oracle::g_of(at, j, e, op.r - h)) / (h * h);
    const double predicted = j / (op.r * op.r * std::sqrt(g2));
    const double t4 = deflection_angle(yukawa(op.v0 - 1e-4), {4.0, e});
    const double t5 = deflection_angle(yukawa(op.v0 - 1e-5), {4.0, e});
    EXPECT_NEAR((t5 - t4) / std::log(10.0) / predicted, 1.0, 2e-2);
}

TEST(Orbiting, ThetaGrowsApproachingThreshold) {
    const double v_star = orbiting_threshold(yukawa(1.0), 4.0, 0.1).v0;
    double prev = -1e9;
    for (double d : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
        const double th = deflection_angle(yukawa(v_star - d), {4.0, 0.1});
        EXPECT_GT(th, prev) << d;
        prev = th;
    }
    EXPECT_GT(prev, 2.0 * pi);
    EXPECT_THROW(deflection_angle(yukawa(v_star), {4.0, 0.1}), OrbitingSingular);
}

TEST(Sweep, BelowThresholdSmoothAndStraddlingFlagged) {
    const auto below = theta_vs_v0(yukawa(1.0), 4.0, 0.1, {0.5, 1.0, 2.0, 3.0, 4.0});
    for (std::size_t i = 0; i < below.size(); ++i) {
        EXPECT_FALSE(below[i].singular);
        EXPECT_TRUE(std::isfinite(below[i].theta));
        if (i > 0) {
            EXPECT_GT(below[i].theta, below[i - 1].theta);
        }
    }
    const double v_star = orbiting_threshold(yukawa(1.0), 4.0, 0.1).v0;
    const auto across = theta_vs_v0(yukawa(1.0), 4.0, 0.1, {v_star - 0.1, v_star, v_star + 0.1});
    EXPECT_FALSE(across[0].singular);
    EXPECT_TRUE(across[1].singular);
    EXPECT_TRUE(std::isinf(across[1].theta));
    EXPECT_THROW(theta_vs_v0(yukawa(1.0), 4.0, 0.1, {2.0, 1.0}), ArgumentError);
}
