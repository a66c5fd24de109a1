#include "tlsnoise/thermal_model.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "oracles.h"

using namespace tlsnoise;

namespace {

constexpr double kQubit = 5.304e9;

ThermalEnvironment still_environment(double base) {
    ThermalEnvironment env;
    env.qubit_frequency = kQubit;
    env.base_temperature = base;
    env.radiation_stages = {{0.6, 22.0}};
    return env;
}

}  // namespace

TEST(BoseEinstein, ZeroTemperatureIsExactlyZero) {
    EXPECT_EQ(bose_einstein_occupation(kQubit, 0.0), 0.0);
}

TEST(BoseEinstein, MatchesDirectEvaluation) {
    for (double T : {0.01, 0.02, 0.055, 0.1, 0.6, 4.0, 300.0}) {
        EXPECT_NEAR(bose_einstein_occupation(kQubit, T), oracle::occupation(kQubit, T),
                    1e-13 * oracle::occupation(kQubit, T))
            << T;
    }
}

TEST(BoseEinstein, FiftyFiveMillikelvinGivesOnePercent) {
    double n = bose_einstein_occupation(kQubit, 0.055);
    EXPECT_NEAR(n, 0.0099, 0.0003);
    EXPECT_NEAR(n / (1 + 2 * n), 0.0097, 0.0005);
}

TEST(BoseEinstein, StillStageOccupation) {
    // h f / k T = 0.424253 at 600 mK.
    double n = bose_einstein_occupation(kQubit, 0.6);
    EXPECT_NEAR(n, 1.8923, 0.0002);
}

TEST(BoseEinstein, StrictlyMonotoneInTemperature) {
    double prev = 0.0;
    for (double T = 0.005; T < 2.0; T *= 1.05) {
        double n = bose_einstein_occupation(kQubit, T);
        EXPECT_GT(n, prev) << T;
        prev = n;
    }
}

TEST(BoseEinstein, VeryColdUnderflowsToZeroWithoutNan) {
    double n = bose_einstein_occupation(kQubit, 1e-6);
    EXPECT_EQ(n, 0.0);
    EXPECT_FALSE(std::isnan(n));
}

TEST(EffectivePhotonNumber, EmptyColdEnvironment) {
    ThermalEnvironment env;
    EXPECT_EQ(effective_photon_number(env), 0.0);
}

TEST(EffectivePhotonNumber, StillStageAtBaseTemperature) {
    ThermalEnvironment env = still_environment(0.02);
    double expected = oracle::occupation(kQubit, 0.02) + oracle::occupation(kQubit, 0.6) / std::pow(10.0, 2.2);
    double n = effective_photon_number(env);
    EXPECT_NEAR(n, expected, 1e-14);
    EXPECT_NEAR(n, 0.01194, 0.00002);
    EXPECT_LT(oracle::occupation(kQubit, 0.02), 5e-6);
    SteadyState s = steady_state({1.0 / 226e-9, n});
    EXPECT_NEAR(s.rho_ee, 0.01166, 0.00002);
}

TEST(EffectivePhotonNumber, IncreasesWithBaseTemperature) {
    EXPECT_GT(effective_photon_number(still_environment(0.1)), effective_photon_number(still_environment(0.02)));
}

TEST(EffectivePhotonNumber, StagesAdd) {
    ThermalEnvironment env;
    env.base_temperature = 0.05;
    env.radiation_stages = {{0.6, 22.0}, {4.0, 40.0}};
    double expected = oracle::occupation(kQubit, 0.05) + oracle::occupation(kQubit, 0.6) * std::pow(10.0, -2.2) +
                      oracle::occupation(kQubit, 4.0) * 1e-4;
    EXPECT_NEAR(effective_photon_number(env), expected, 1e-14);
}

TEST(ThermalEnvironment, RejectsInvalidValues) {
    ThermalEnvironment env;
    env.qubit_frequency = 0.0;
    EXPECT_THROW(env.validate(), std::invalid_argument);
    env = still_environment(-0.01);
    EXPECT_THROW(env.validate(), std::invalid_argument);
    env = still_environment(0.02);
    env.radiation_stages[0].attenuation_db = -1.0;
    EXPECT_THROW(env.validate(), std::invalid_argument);
    env.radiation_stages[0] = {-0.1, 22.0};
    EXPECT_THROW(env.validate(), std::invalid_argument);
}

TEST(QubitRates, RateRelations) {
    QubitRates r{2.0e6, 0.3};
    EXPECT_DOUBLE_EQ(r.up_rate(), 0.6e6);
    EXPECT_DOUBLE_EQ(r.down_rate(), 2.6e6);
    EXPECT_DOUBLE_EQ(r.fluctuation_rate(), r.up_rate() + r.down_rate());
    EXPECT_EQ(QubitRates({2.0e6, 0.0}).fluctuation_rate(), 2.0e6);
}

TEST(QubitRates, RejectsInvalidValues) {
    EXPECT_THROW(QubitRates({0.0, 0.1}).validate(), std::invalid_argument);
    EXPECT_THROW(QubitRates({1e6, -0.1}).validate(), std::invalid_argument);
    EXPECT_NO_THROW(QubitRates({1e6, 0.0}).validate());
}

TEST(SteadyState, ZeroOccupation) {
    SteadyState s = steady_state({1e6, 0.0});
    EXPECT_EQ(s.rho_ee, 0.0);
    EXPECT_EQ(s.z_mean, -1.0);
}

TEST(SteadyState, InfiniteTemperatureLimit) {
    EXPECT_NEAR(steady_state({1e6, 1e12}).rho_ee, 0.5, 1e-12);
    SteadyState s = steady_state({1e6, std::numeric_limits<double>::infinity()});
    EXPECT_EQ(s.rho_ee, 0.5);
    EXPECT_EQ(s.z_mean, 0.0);
}

TEST(SteadyState, LowTemperatureAnchor) {
    SteadyState s = steady_state({1e6, 0.012});
    EXPECT_NEAR(s.rho_ee, 0.0117, 0.00005);
    EXPECT_NEAR(s.z_mean, -1.0 / 1.024, 1e-15);
    EXPECT_NEAR(s.z_mean, 2 * s.rho_ee - 1, 1e-15);
}

TEST(SteadyState, PopulationBoundedAndVarianceIncreasing) {
    double prev_var = -1.0;
    for (double n = 0.0; n < 50.0; n = n * 1.3 + 1e-4) {
        double rho = steady_state({1e6, n}).rho_ee;
        EXPECT_GE(rho, 0.0);
        EXPECT_LT(rho, 0.5);
        double v = rho * (1 - rho);
        EXPECT_GT(v, prev_var);
        prev_var = v;
    }
}

TEST(EffectiveTemperature, RoundTrip) {
    for (double T : {0.005, 0.02, 0.055, 0.1, 0.3, 1.0, 10.0}) {
        double rho = steady_state({1e6, bose_einstein_occupation(kQubit, T)}).rho_ee;
        EXPECT_NEAR(effective_temperature(rho, kQubit), T, 1e-12 * T) << T;
    }
}

TEST(EffectiveTemperature, OnePercentIsFiftyFiveMillikelvin) {
    EXPECT_NEAR(effective_temperature(0.01, kQubit), 0.055, 0.001);
}

TEST(EffectiveTemperature, Boundaries) {
    EXPECT_EQ(effective_temperature(0.0, kQubit), 0.0);
    EXPECT_THROW(effective_temperature(0.5, kQubit), PopulationInversionError);
    EXPECT_THROW(effective_temperature(0.7, kQubit), PopulationInversionError);
    EXPECT_THROW(effective_temperature(-0.01, kQubit), std::invalid_argument);
}

TEST(OccupationFromPopulation, InvertsSteadyState) {
    for (double n : {0.0, 1e-6, 0.012, 0.5, 3.0}) {
        double rho = steady_state({1e6, n}).rho_ee;
        EXPECT_NEAR(occupation_from_population(rho), n, 1e-12 * std::max(n, 1e-12));
    }
}
