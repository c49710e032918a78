#include <gtest/gtest.h>

#include <cmath>

#include "qpkr/classical.hpp"

using namespace qpkr;

namespace {

SimParams classical_params(double K, double eps) {
    SimParams p;
    p.K = K;
    p.epsilon = eps;
    return p;
}

// Builds moments that are exactly linear in t.
ClassicalMoments linear_moments(double s11, double s22, double s12, int n = 50) {
    ClassicalMoments m;
    m.mean.resize(static_cast<std::size_t>(n));
    for (int t = 1; t <= n; ++t) {
        m.times.push_back(t);
        const auto k = static_cast<std::size_t>(t - 1);
        m.mean.p1sq[k] = s11 * t + 3.0;
        m.mean.p2sq[k] = s22 * t - 1.0;
        m.mean.p1p2[k] = s12 * t;
    }
    return m;
}

}  // namespace

TEST(Step, FreeMapWithoutKick) {
    const ClassicalState s{1.0, 2.5, 0.3, -0.7};
    const auto out = step(s, 0.0, 0.4, 1.25);
    EXPECT_EQ(out.p1, s.p1);
    EXPECT_EQ(out.p2, s.p2);
    EXPECT_NEAR(out.x2, wrap_angle(s.x2 + 1.25), 1e-15);
}

TEST(Step, HandEvaluatedKickAtQuarterPhase) {
    const ClassicalState s{0.0, kPi / 2.0, 0.0, 0.0};
    const auto out = step(s, 5.34, 0.36, kDefaultOmega2);
    EXPECT_NEAR(out.p1, 0.0, 1e-15);
    EXPECT_NEAR(out.p2, 1.9224, 1e-12);
}

TEST(Step, UnmodulatedCaseIsTheStandardMap) {
    ClassicalState s{0.4, 1.0, 0.2, 0.0};
    double x = 0.4, p = 0.2;
    for (int t = 0; t < 100; ++t) {
        s = step(s, 5.0, 0.0, kDefaultOmega2);
        p += 5.0 * std::sin(x);
        x = wrap_angle(x + p);
        ASSERT_EQ(s.p2, 0.0);
        ASSERT_NEAR(s.p1, p, 1e-9);
        ASSERT_NEAR(s.x1, x, 1e-9);
    }
}

TEST(Step, BackwardStepInvertsForwardStep) {
    ClassicalState s{0.3, 2.0, -1.2, 0.8};
    const auto start = s;
    // Few steps only: the map is chaotic, so rounding errors grow like (K/2)^t.
    for (int t = 0; t < 4; ++t) s = step(s, 7.0, 0.5, kDefaultOmega2);
    for (int t = 0; t < 4; ++t) s = step_back(s, 7.0, 0.5, kDefaultOmega2);
    EXPECT_NEAR(s.p1, start.p1, 1e-8);
    EXPECT_NEAR(s.p2, start.p2, 1e-8);
    EXPECT_NEAR(std::remainder(s.x1 - start.x1, kTwoPi), 0.0, 1e-8);
    EXPECT_NEAR(std::remainder(s.x2 - start.x2, kTwoPi), 0.0, 1e-8);
}

TEST(WrapAngle, MapsIntoPrincipalInterval) {
    for (double x : {-20.0, -kPi, 0.0, 3.0, 7.0, 1e4}) {
        const double w = wrap_angle(x);
        EXPECT_GE(w, 0.0);
        EXPECT_LT(w, kTwoPi);
        EXPECT_NEAR(std::remainder(w - x, kTwoPi), 0.0, 1e-9);
    }
}

TEST(Simulate, NoKickMeansNoMomentum) {
    const auto m = simulate(classical_params(0.0, 0.3), 200, 20, 1);
    for (std::size_t k = 0; k < m.times.size(); ++k) {
        EXPECT_EQ(m.mean.p1sq[k], 0.0);
        EXPECT_EQ(m.mean.p2sq[k], 0.0);
        EXPECT_EQ(m.mean.p1p2[k], 0.0);
    }
}

TEST(Simulate, UnmodulatedCaseHasNoTransverseMomentum) {
    const auto m = simulate(classical_params(6.0, 0.0), 500, 50, 3);
    for (double v : m.mean.p2sq) EXPECT_EQ(v, 0.0);
    for (double v : m.mean.p1p2) EXPECT_EQ(v, 0.0);
}

TEST(Simulate, IndependentOfWorkerCount) {
    const auto a = simulate(classical_params(8.0, 0.4), 1000, 30, 11, 1);
    const auto b = simulate(classical_params(8.0, 0.4), 1000, 30, 11, 4);
    EXPECT_EQ(a.mean.p1sq, b.mean.p1sq);
    EXPECT_EQ(a.mean.p1p2, b.mean.p1p2);
}

TEST(Simulate, MomentumSpreadGrowsLinearly) {
    const auto m = simulate(classical_params(8.0, 0.4), 100000, 200, 20160101);
    std::vector<double> t(m.times.begin(), m.times.end());
    const auto f = stats::fit_line(t, m.mean.p1sq);
    EXPECT_GT(f.r2, 0.99);
    EXPECT_GT(f.slope, 0.0);
}

TEST(EstimateDiffusion, ExactLineGivesHalfSlope) {
    const auto d = estimate_diffusion(linear_moments(4.0, 0.6, -0.2));
    EXPECT_NEAR(d.d11, 2.0, 1e-12);
    EXPECT_NEAR(d.d22, 0.3, 1e-12);
    EXPECT_NEAR(d.d12, -0.1, 1e-12);
    EXPECT_NEAR(d.stderr11, 0.0, 1e-9);
}

TEST(EstimateDiffusion, WindowTooShortIsRejected) {
    FitWindow w;
    w.t_min = 48;
    EXPECT_THROW(estimate_diffusion(linear_moments(1, 1, 0), w), ValidationError);
}

TEST(EstimateDiffusion, StrongKickMatchesQuasilinearLongitudinalRate) {
    const auto d = estimate_diffusion(simulate(classical_params(10.0, 0.5), 100000, 200, 20160101));
    EXPECT_NEAR(d.d11 / quasilinear_d11(10.0, 0.5), 1.0, 0.3);
    EXPECT_LT(std::abs(d.d12), 3.0 * d.stderr12 + 1e-12);
}

TEST(EstimateDiffusion, ModerateKickStaysNearQuasilinearValues) {
    // At K = 5.34 the transverse rate falls well below the quasilinear estimate;
    // the tolerance was calibrated on 1e5 trajectories over several seeds.
    const auto d = estimate_diffusion(simulate(classical_params(5.34, 0.36), 100000, 200, 20160101));
    EXPECT_NEAR(quasilinear_d11(5.34, 0.36), 7.59, 0.01);
    EXPECT_NEAR(quasilinear_d22(5.34, 0.36), 0.462, 0.001);
    EXPECT_NEAR(d.d11 / quasilinear_d11(5.34, 0.36), 1.0, 0.4);
    EXPECT_NEAR(d.d22 / quasilinear_d22(5.34, 0.36), 1.0, 0.5);
}
