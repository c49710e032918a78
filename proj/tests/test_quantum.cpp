#include <gtest/gtest.h>

#include <cmath>

#include "qpkr/analysis.hpp"
#include "qpkr/quantum.hpp"

using namespace qpkr;

namespace {

// J_m(z) from its power series, summed term by term with a ratio recurrence.
double bessel_series(int m, double z) {
    const int am = std::abs(m);
    double term = 1.0;
    for (int j = 1; j <= am; ++j) term *= (z / 2.0) / j;
    double sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= -(z * z / 4.0) / (static_cast<double>(k) * (k + am));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return (m < 0 && am % 2 == 1) ? -sum : sum;
}

SimParams small_params(double eps = 0.0) {
    SimParams p;
    p.epsilon = eps;
    p.grid_n = 512;
    p.n_kicks = 50;
    return p;
}

}  // namespace

TEST(BesselOracle, SeriesAgreesWithStandardLibrary) {
    for (double z : {0.3, 1.0, 1.85, 4.2})
        for (int m = 0; m <= 15; ++m) EXPECT_NEAR(bessel_series(m, z), std::cyl_bessel_j(m, z), 1e-13);
}

TEST(Kick, ZeroAmplitudeIsIdentity) {
    auto s = WaveState::momentum_eigenstate(64, 3, 0.2);
    s.amps[10] = {0.3, -0.4};
    const auto out = kick(s, 0.0, 2.89);
    EXPECT_EQ(out.amps, s.amps);
}

TEST(Kick, PopulationsAreSquaredBesselWeights) {
    const double K1 = 5.34, hbar = 2.89, z = K1 / hbar;
    const auto out = kick(WaveState::momentum_eigenstate(256, 0, 0.0), K1, hbar);
    for (int m = -30; m <= 30; ++m) {
        const double j = bessel_series(m, z);
        EXPECT_NEAR(std::norm(out.amps[static_cast<std::size_t>(index_of_site(m, 256))]), j * j, 1e-13) << m;
    }
}

TEST(Kick, AmplitudesCarryPlaneWaveExpansionPhases) {
    const double z = 1.7;
    const auto out = kick(WaveState::momentum_eigenstate(128, 0, 0.0), z, 1.0);
    cplx phase = 1.0;
    for (int m = 0; m <= 10; ++m) {
        const cplx expected = phase * bessel_series(m, z);
        const cplx got = out.amps[static_cast<std::size_t>(index_of_site(m, 128))];
        EXPECT_NEAR(std::abs(got - expected), 0.0, 1e-13) << m;
        phase *= cplx(0.0, -1.0);
    }
}

TEST(Kick, SecondMomentIncrementIsHalfArgumentSquared) {
    const double K1 = 4.0, hbar = 1.3, z = K1 / hbar;
    double direct = 0.0;
    for (int m = -60; m <= 60; ++m) direct += m * m * bessel_series(m, z) * bessel_series(m, z);
    EXPECT_NEAR(direct, z * z / 2.0, 1e-12);
    const auto out = kick(WaveState::momentum_eigenstate(512, 0, 0.0), K1, hbar);
    EXPECT_NEAR(out.p2_mean(), z * z / 2.0, 1e-10);
}

TEST(Kick, AppliesToArbitraryStatesUnitarily) {
    auto s = WaveState::momentum_eigenstate(128, 0, 0.4);
    for (std::size_t i = 0; i < s.amps.size(); ++i) s.amps[i] = std::polar(std::exp(-0.05 * std::abs(static_cast<double>(i) - 64.0)), 0.3 * i);
    const double n0 = s.norm2();
    EXPECT_NEAR(kick(s, 7.0, 2.89).norm2(), n0, 1e-12 * n0);
}

TEST(Kick, GridMismatchThrows) {
    FloquetPropagator prop(64, 1.0);
    auto s = WaveState::momentum_eigenstate(32, 0, 0.0);
    EXPECT_THROW(prop.kick(s, 1.0), std::length_error);
}

TEST(FreeFlight, LeavesProbabilitiesUnchanged) {
    auto s = kick(WaveState::momentum_eigenstate(128, 0, 0.37), 5.0, 2.0);
    const auto before = s.probabilities();
    const auto after = free_flight(s, 2.0).probabilities();
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], before[i], 1e-15);
}

TEST(FreeFlight, TwoPiGivesAlternatingSigns) {
    WaveState s{std::vector<cplx>(32, 1.0), 0.0, 0};
    const auto out = free_flight(s, kTwoPi);
    for (int i = 0; i < 32; ++i) {
        const int m = site_of_index(i, 32);
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        EXPECT_NEAR(out.amps[static_cast<std::size_t>(i)].real(), sign, 1e-9) << m;
        EXPECT_NEAR(out.amps[static_cast<std::size_t>(i)].imag(), 0.0, 1e-9) << m;
    }
}

TEST(FreeFlight, TwoFlightsEqualOneWithDoubledHbar) {
    auto s = kick(WaveState::momentum_eigenstate(64, 0, 0.21), 3.0, 1.1);
    const auto twice = free_flight(free_flight(s, 1.1), 1.1);
    const auto once = free_flight(s, 2.2);
    for (std::size_t i = 0; i < s.amps.size(); ++i) EXPECT_NEAR(std::abs(twice.amps[i] - once.amps[i]), 0.0, 1e-12);
}

TEST(Evolve, ZeroKicksGivesInitialDelta) {
    auto p = small_params();
    p.n_kicks = 0;
    const auto r = evolve(p, 0.0, 0.0, {0});
    ASSERT_EQ(r.distributions.size(), 1u);
    const auto& d = r.distributions[0];
    EXPECT_EQ(d.at(0), 1.0);
    for (int m = d.min_site(); m <= d.max_site(); ++m)
        if (m != 0) {
            EXPECT_EQ(d.at(m), 0.0);
        }
    EXPECT_EQ(r.series.size(), 1u);
}

TEST(Evolve, RecordsRequestedTimesAndFullSeries) {
    const auto r = evolve(small_params(0.3), 0.1, 0.5, {0, 10, 50});
    ASSERT_EQ(r.distributions.size(), 3u);
    EXPECT_EQ(r.distributions[1].time, 10);
    EXPECT_EQ(r.series.size(), 51u);
    EXPECT_EQ(r.series.times.back(), 50);
    EXPECT_DOUBLE_EQ(r.distributions[2].params.beta, 0.1);
}

TEST(Evolve, RejectsUnsortedOrOutOfRangeRecordTimes) {
    EXPECT_THROW(evolve(small_params(), 0.0, 0.0, {10, 5}), ValidationError);
    EXPECT_THROW(evolve(small_params(), 0.0, 0.0, {51}), ValidationError);
}

TEST(Evolve, SmallGridOverflowIsReported) {
    auto p = small_params(0.5);
    p.grid_n = 32;
    try {
        evolve(p, 0.0, 0.0, {});
        FAIL() << "expected overflow";
    } catch (const GridOverflowError& e) {
        EXPECT_EQ(e.grid_n(), 32);
        EXPECT_GT(e.edge_mass(), kEdgeMassThreshold);
        EXPECT_GE(e.kick(), 1);
    }
}

TEST(KickAmplitude, FollowsQuasiperiodicModulation) {
    SimParams p;
    p.K = 2.0;
    p.epsilon = 0.5;
    p.omega2 = 1.0;
    EXPECT_DOUBLE_EQ(kick_amplitude(p, 0.0, 0), 3.0);
    EXPECT_DOUBLE_EQ(kick_amplitude(p, 0.3, 4), 2.0 * (1.0 + 0.5 * std::cos(4.3)));
}

TEST(Ensemble, SingleFixedRealizationMatchesEvolve) {
    const auto p = small_params(0.36);
    EnsembleSpec e;
    e.n_realizations = 1;
    e.beta_sampling = Sampling::fixed(0.3);
    e.phi2_sampling = Sampling::fixed(1.1);
    const auto a = run_ensemble(p, e, {25, 50});
    const auto b = evolve(p, 0.3, 1.1, {25, 50});
    EXPECT_EQ(a.distributions[1].probs, b.distributions[1].probs);
    EXPECT_EQ(a.series.p2_mean, b.series.p2_mean);
}

TEST(Ensemble, ParityWithFixedZeroBeta) {
    const auto p = small_params(0.36);
    EnsembleSpec e;
    e.n_realizations = 4;
    e.beta_sampling = Sampling::fixed(0.0);
    const auto d = run_ensemble(p, e, {50}).distributions[0];
    for (int m = 1; m < d.max_site(); ++m) EXPECT_NEAR(d.at(m), d.at(-m), 1e-12) << m;
}

TEST(Ensemble, ResultIndependentOfWorkerCount) {
    const auto p = small_params(0.2);
    EnsembleSpec e;
    e.n_realizations = 6;
    const auto a = run_ensemble(p, e, {50}, 1);
    const auto b = run_ensemble(p, e, {50}, 3);
    EXPECT_EQ(a.distributions[0].probs, b.distributions[0].probs);
    EXPECT_EQ(a.series.p2_mean, b.series.p2_mean);
}

TEST(Ensemble, OverflowNamesTheRealization) {
    auto p = small_params(0.5);
    p.grid_n = 32;
    EnsembleSpec e;
    e.n_realizations = 3;
    try {
        run_ensemble(p, e, {});
        FAIL() << "expected overflow";
    } catch (const GridOverflowError& err) {
        ASSERT_TRUE(err.realization().has_value());
        EXPECT_EQ(*err.realization(), 0);
    }
}

// Localization behaviour at K = 5.34, hbar = 2.89 on a modest ensemble.
class LocalizedEnsemble : public ::testing::Test {
  protected:
    static EvolutionResult run(double eps) {
        SimParams p;
        p.epsilon = eps;
        p.grid_n = 1024;
        p.n_kicks = 1000;
        EnsembleSpec e;
        e.n_realizations = 40;
        return run_ensemble(p, e, {200, 1000});
    }
};

TEST_F(LocalizedEnsemble, OneDimensionalCaseFreezes) {
    const auto r = run(0.0);
    EXPECT_LT(r.series.p2_mean[1000] / r.series.p2_mean[200], 1.5);
}

TEST_F(LocalizedEnsemble, QuasiperiodicProfileIsExponentialAtT200) {
    const auto r = run(0.36);
    const auto fit = fit_exponential(r.distributions[0]);
    EXPECT_GT(fit.r2, fit.gaussian_r2);
    EXPECT_GT(fit.r2, 0.9);
    // Broadens then freezes: the profile keeps growing between 200 and 1000 kicks,
    // but by far less than diffusion would give.
    const double ratio = r.series.p2_mean[1000] / r.series.p2_mean[200];
    EXPECT_GT(ratio, 1.0);
    EXPECT_LT(ratio, 5.0);
}

TEST_F(LocalizedEnsemble, ZeroSiteProxyTracksKineticEnergy) {
    // The m = 0 population carries a return-probability excess once the profile
    // is not a clean exponential, so away from eps = 0 the proxy only tracks the
    // energy in order of magnitude. Bounds calibrated on 40-100 realizations.
    const auto flat = run(0.0);
    EXPECT_NEAR(pi0_proxy(flat.series.pi0[1000]) / kinetic_energy_from_p2(flat.series.p2_mean[1000]), 1.0, 0.2);
    const auto mod = run(0.36);
    const double ratio = pi0_proxy(mod.series.pi0[1000]) / kinetic_energy_from_p2(mod.series.p2_mean[1000]);
    EXPECT_GT(ratio, 0.3);
    EXPECT_LT(ratio, 1.5);
}
