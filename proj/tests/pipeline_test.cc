#include "tlsnoise/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "oracles.h"
#include "tlsnoise/selftest.h"

using namespace tlsnoise;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(std::size_t averages = 400) {
    ExperimentConfig cfg;
    cfg.acquisition.n_averages = averages;
    cfg.temperatures = {0.02, 0.06, 0.1};
    return cfg;
}

std::string slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path &path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

fs::path scratch_dir(const std::string &name) {
    fs::path dir = fs::temp_directory_path() / ("tlsnoise_pipeline_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string sweep_csv(const ExperimentConfig &cfg, const RunOptions &opts, const std::string &name) {
    fs::path dir = scratch_dir(name);
    write_sweep_csv(dir / "sweep.csv", run_sweep(cfg, opts).points);
    return slurp(dir / "sweep.csv");
}

}  // namespace

TEST(ParallelFor, VisitsEveryIndexOnce) {
    for (std::size_t workers : {1u, 3u, 16u}) {
        std::vector<std::atomic<int>> hits(101);
        parallel_for(hits.size(), workers, [&](std::size_t k) { ++hits[k]; });
        for (const auto &h : hits) ASSERT_EQ(h.load(), 1);
    }
    parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, RethrowsWorkerException) {
    EXPECT_THROW(parallel_for(50, 4,
                              [](std::size_t k) {
                                  if (k == 17) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}

TEST(ModelRates, UsesBaseTemperatureAndStages) {
    ExperimentConfig cfg;
    QubitRates r = model_rates(cfg, 0.02);
    EXPECT_EQ(r.gamma_intrinsic, cfg.gamma_intrinsic);
    double expected = oracle::occupation(5.304e9, 0.02);
    for (const auto &s : cfg.environment.radiation_stages) {
        expected += oracle::occupation(5.304e9, s.source_temperature) / std::pow(10.0, s.attenuation_db / 10.0);
    }
    EXPECT_NEAR(r.n_th, expected, 1e-12 * expected);
    EXPECT_THROW(model_rates(cfg, -0.01), std::invalid_argument);
}

TEST(ExtractionDeltaV, OverrideTakesPrecedence) {
    ExperimentConfig cfg;
    EXPECT_DOUBLE_EQ(extraction_delta_v(cfg), 2 * 2.76e-3);
    cfg.calibration.delta_v_half_override = 3.0e-3;
    EXPECT_DOUBLE_EQ(extraction_delta_v(cfg), 6.0e-3);
}

TEST(SimulateSpectra, AveragesRequestedSegments) {
    ExperimentConfig cfg = small_config(300);
    auto spectra = simulate_spectra(cfg, model_rates(cfg, 0.02), 0);
    EXPECT_EQ(spectra.on.n_averages, 300u);
    EXPECT_EQ(spectra.off.n_averages, 300u);
    EXPECT_EQ(spectra.on.size(), 513u);
    EXPECT_EQ(spectra.on.kind, SpectrumKind::on);
    EXPECT_EQ(spectra.off.kind, SpectrumKind::off);
}

TEST(SimulateSpectra, IdenticalForAnyWorkerCount) {
    ExperimentConfig cfg = small_config(500);
    auto rates = model_rates(cfg, 0.06);
    auto a = simulate_spectra(cfg, rates, 1, {1, 0});
    auto b = simulate_spectra(cfg, rates, 1, {4, 0});
    EXPECT_EQ(a.on.values, b.on.values);
    EXPECT_EQ(a.off.values, b.off.values);
    EXPECT_EQ(a.on.standard_error, b.on.standard_error);
}

TEST(SimulateSpectra, StreamsDependOnPointAndReplicate) {
    ExperimentConfig cfg = small_config(200);
    auto rates = model_rates(cfg, 0.02);
    auto base = simulate_spectra(cfg, rates, 0);
    EXPECT_NE(base.on.values, simulate_spectra(cfg, rates, 1).on.values);
    EXPECT_NE(base.on.values, simulate_spectra(cfg, rates, 0, {1, 1}).on.values);
    ExperimentConfig reseeded = cfg;
    reseeded.master_seed += 1;
    EXPECT_NE(base.on.values, simulate_spectra(reseeded, rates, 0).on.values);
}

TEST(SimulateSpectra, RejectsChopWindowShorterThanSegment) {
    ExperimentConfig cfg = small_config();
    cfg.acquisition.chop.period = 1e-5;
    EXPECT_THROW(simulate_spectra(cfg, model_rates(cfg, 0.02), 0), std::invalid_argument);
}

TEST(RunPoint, ModelColumnsComeFromThermalModel) {
    ExperimentConfig cfg = small_config(200);
    auto p = run_point(cfg, 0.06);
    QubitRates r = model_rates(cfg, 0.06);
    EXPECT_EQ(p.row.n_th_effective, r.n_th);
    EXPECT_EQ(p.row.rho_model, steady_state(r).rho_ee);
    EXPECT_EQ(p.row.gamma1_model, r.fluctuation_rate());
    EXPECT_DOUBLE_EQ(p.row.t1_model_ns, 1e9 / r.fluctuation_rate());
    EXPECT_GT(p.row.n_th_effective, oracle::occupation(5.304e9, 0.06));
}

TEST(RunPoint, ZeroTemperatureWithoutNoiseHasNoSignal) {
    ExperimentConfig cfg = small_config(100);
    cfg.environment.radiation_stages.clear();
    cfg.detector.noise_std_per_sample = 0.0;
    auto p = run_point(cfg, 0.0);
    EXPECT_EQ(p.row.status, PointStatus::no_signal);
    EXPECT_EQ(p.row.rho_model, 0.0);
    EXPECT_EQ(p.row.rho_fitted, 0.0);
    EXPECT_TRUE(std::isnan(p.row.gamma1_fitted));
    for (double v : p.subtracted.values) ASSERT_EQ(v, 0.0);
    EXPECT_FALSE(p.fit.has_value());
    EXPECT_FALSE(p.message.empty());
}

TEST(RunPoint, RecoversTwentyMillikelvinPoint) {
    ExperimentConfig cfg = small_config(2000);
    auto p = run_point(cfg, 0.02);
    ASSERT_EQ(p.row.status, PointStatus::ok) << p.message;
    EXPECT_NEAR(p.row.rho_fitted, p.row.rho_model, 4 * p.row.rho_uncertainty);
    EXPECT_LT(p.row.rho_uncertainty, 0.001);
    // The rectangular window leaks power from the Lorentzian core into its tails,
    // widening the expected periodogram by about 2% at this segment length.
    EXPECT_NEAR(p.row.gamma1_fitted, p.row.gamma1_model, 4 * p.row.gamma1_uncertainty + 0.03 * p.row.gamma1_model);
    EXPECT_NEAR(p.row.amplitude_fitted, p.row.amplitude_model, 4 * p.row.amplitude_uncertainty);
    EXPECT_DOUBLE_EQ(p.row.t1_fitted_ns, 1e9 / p.row.gamma1_fitted);
    EXPECT_DOUBLE_EQ(p.delta_v, extraction_delta_v(cfg));
}

TEST(RunPoint, AnalyticSpectrumMatchesModel) {
    ExperimentConfig cfg = small_config(100);
    auto p = run_point(cfg, 0.02);
    ASSERT_EQ(p.analytic.size(), p.subtracted.size());
    EXPECT_EQ(p.analytic.kind, SpectrumKind::analytic);
    const double swing2 = cfg.detector.sensitivity();
    for (std::size_t b = 1; b < p.analytic.size(); b += 37) {
        double expected = swing2 * oracle::telegraph_psd(cfg.gamma_intrinsic, p.rates.n_th, p.analytic.frequencies[b]);
        EXPECT_NEAR(p.analytic.values[b], expected, 1e-12 * expected);
    }
}

TEST(RunPoint, TooSmallSensitivityIsReported) {
    ExperimentConfig cfg = small_config(500);
    cfg.calibration.delta_v_half_override = 1e-5;
    auto p = run_point(cfg, 0.1);
    EXPECT_EQ(p.row.status, PointStatus::amplitude_exceeds_maximum);
    EXPECT_TRUE(std::isnan(p.row.rho_fitted));
    EXPECT_TRUE(std::isfinite(p.row.gamma1_fitted));
    EXPECT_FALSE(p.message.empty());
}

TEST(RunSweep, DeterministicAndWorkerIndependent) {
    ExperimentConfig cfg = small_config(300);
    std::string a = sweep_csv(cfg, {1, 0}, "det_a");
    EXPECT_EQ(a, sweep_csv(cfg, {1, 0}, "det_b"));
    EXPECT_EQ(a, sweep_csv(cfg, {3, 0}, "det_c"));
    cfg.master_seed ^= 0x5a5a;
    EXPECT_NE(a, sweep_csv(cfg, {1, 0}, "det_d"));
}

TEST(RunSweep, ReplicatesAreIndependentDraws) {
    ExperimentConfig cfg = small_config(200);
    auto s = run_sweep(cfg, {1, 1});
    ASSERT_EQ(s.points.size(), 3u);
    ASSERT_EQ(s.replicates.size(), 3u);
    auto plain = run_sweep(cfg);
    EXPECT_TRUE(plain.replicates.empty());
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(s.points[k].subtracted.values, plain.points[k].subtracted.values);
        EXPECT_NE(s.points[k].subtracted.values, s.replicates[k].subtracted.values);
        EXPECT_EQ(s.points[k].row.rho_model, s.replicates[k].row.rho_model);
    }
}

TEST(RunSweep, ModelColumnsAreMonotone) {
    ExperimentConfig cfg;
    cfg.acquisition.n_averages = 50;
    auto s = run_sweep(cfg);
    ASSERT_EQ(s.points.size(), 10u);
    for (std::size_t k = 1; k < s.points.size(); ++k) {
        EXPECT_GT(s.points[k].row.n_th_effective, s.points[k - 1].row.n_th_effective);
        EXPECT_GT(s.points[k].row.rho_model, s.points[k - 1].row.rho_model);
        EXPECT_LT(s.points[k].row.t1_model_ns, s.points[k - 1].row.t1_model_ns);
        EXPECT_GT(s.points[k].row.amplitude_model, s.points[k - 1].row.amplitude_model);
    }
}

TEST(RunSweep, EmptyTemperatureListWritesHeaderOnly) {
    ExperimentConfig cfg = small_config();
    cfg.temperatures.clear();
    auto s = run_sweep(cfg);
    EXPECT_TRUE(s.points.empty());
    EXPECT_EQ(s.failures(), 0u);
    fs::path dir = scratch_dir("empty");
    write_sweep_csv(dir / "sweep.csv", s.points);
    std::string text = slurp(dir / "sweep.csv");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(SweepResult, CountsFailuresAcrossPrimaryAndReplicates) {
    SweepResult s;
    s.points.resize(3);
    s.replicates.resize(2);
    s.points[1].row.status = PointStatus::fit_failed;
    s.replicates[0].row.status = PointStatus::no_signal;
    EXPECT_EQ(s.failures(), 2u);
}

TEST(Outputs, GoldenHeaders) {
    ExperimentConfig cfg = small_config(100);
    cfg.temperatures = {0.02};
    auto s = run_sweep(cfg);
    fs::path dir = scratch_dir("headers");
    write_sweep_csv(dir / "sweep.csv", s.points);
    emit_figure_data(dir, s);
    write_point_outputs(dir, s.points[0], 0);
    EXPECT_EQ(first_line(dir / "sweep.csv"),
              "T_c_K,n_th_effective,rho_model,rho_fitted,rho_uncertainty,gamma1_model_rad_s,gamma1_fitted_rad_s,"
              "gamma1_uncertainty_rad_s,t1_model_ns,t1_fitted_ns,t1_uncertainty_ns,amplitude_model,amplitude_fitted,"
              "amplitude_uncertainty,fit_chi2,status");
    EXPECT_EQ(first_line(dir / "figure_spectra.csv"),
              "T_c_K,frequency_Hz,psd_subtracted_V2_per_Hz,psd_analytic_V2_per_Hz,psd_fit_V2_per_Hz");
    EXPECT_EQ(first_line(dir / "figure_population.csv"), "T_c_K,rho_fitted,rho_uncertainty,rho_model");
    EXPECT_EQ(first_line(dir / "figure_relaxation.csv"), "T_c_K,t1_fitted_ns,t1_uncertainty_ns,t1_model_ns");
    EXPECT_TRUE(fs::exists(dir / "spectrum_0_subtracted.csv"));
    EXPECT_TRUE(fs::exists(dir / "spectrum_0_analytic.csv"));

    auto report = nlohmann::json::parse(slurp(dir / "fit_0.json"));
    EXPECT_EQ(report["status"], to_string(s.points[0].row.status));
    EXPECT_EQ(report["temperature_K"].get<double>(), 0.02);

    auto back = read_spectrum_csv(dir / "spectrum_0_subtracted.csv");
    EXPECT_EQ(back.spectrum.values, s.points[0].subtracted.values);
}

TEST(Outputs, SpectraTableHasOneRowPerBinAndPoint) {
    ExperimentConfig cfg = small_config(50);
    auto s = run_sweep(cfg);
    fs::path dir = scratch_dir("rows");
    emit_figure_data(dir, s);
    std::string text = slurp(dir / "figure_spectra.csv");
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 1 + 3 * 513u);
}

TEST(Outputs, UnwritableDirectoryThrows) {
    EXPECT_THROW(write_sweep_csv("/nonexistent_dir_tlsnoise/sweep.csv", {}), std::runtime_error);
}

TEST(Config, JsonRoundtrip) {
    ExperimentConfig cfg;
    cfg.temperatures = {0.01, 0.03};
    cfg.fit.freq_max = 20e6;
    cfg.calibration.delta_v_half_override = 2.7e-3;
    cfg.detector.gain_profile.i_gain.assign(513, 1.1);
    cfg.detector.gain_profile.q_gain.assign(513, 0.9);
    auto j = config_to_json(cfg);
    ExperimentConfig back = config_from_json(j);
    EXPECT_EQ(config_to_json(back), j);
    EXPECT_EQ(back.temperatures, cfg.temperatures);
    EXPECT_EQ(*back.fit.freq_max, 20e6);
    EXPECT_FALSE(back.fit.freq_min.has_value());
    EXPECT_EQ(back.environment.radiation_stages.size(), cfg.environment.radiation_stages.size());
}

TEST(Config, MissingKeysKeepDefaults) {
    ExperimentConfig c = config_from_json(nlohmann::json::parse(R"({"master_seed": 7})"));
    EXPECT_EQ(c.master_seed, 7u);
    EXPECT_EQ(config_to_json(c)["acquisition"], config_to_json(ExperimentConfig{})["acquisition"]);
}

TEST(Config, UnknownKeysAreRejected) {
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"seed": 7})")), std::invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"acquisition": {"averages": 7}})")),
                 std::invalid_argument);
}

TEST(Config, ValidationRejectsBadValues) {
    ExperimentConfig c;
    c.acquisition.segment_length = 1000;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.acquisition.n_averages = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.temperatures = {0.02, -0.01};
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.calibration.delta_v_half_override = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_NO_THROW(ExperimentConfig{}.validate());
}

TEST(Config, LoadsFromFile) {
    fs::path dir = scratch_dir("config");
    {
        std::ofstream out(dir / "c.json");
        out << R"({"temperatures_k": [0.05], "acquisition": {"n_averages": 12}})";
    }
    ExperimentConfig c = load_config(dir / "c.json");
    EXPECT_EQ(c.temperatures, std::vector<double>{0.05});
    EXPECT_EQ(c.acquisition.n_averages, 12u);
    EXPECT_ANY_THROW(load_config(dir / "missing.json"));
}

TEST(Calibration, RunIsSeededAndNearConfiguredSwing) {
    ExperimentConfig cfg;
    auto a = run_calibration(cfg, 1'000'000);
    auto b = run_calibration(cfg, 1'000'000);
    EXPECT_EQ(a.delta_v_half, b.delta_v_half);
    EXPECT_EQ(a.n_samples, 1'000'000u);
    EXPECT_NEAR(a.delta_v_half, 2.76e-3, 4 * a.statistical_uncertainty);
}

TEST(Selftest, AllChecksPass) {
    std::ostringstream log;
    auto checks = run_selftest(log);
    EXPECT_FALSE(checks.empty());
    for (const auto &c : checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
    EXPECT_NE(log.str().find("PASS"), std::string::npos);
}
