#ifndef TLSNOISE_PIPELINE_H
#define TLSNOISE_PIPELINE_H

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tlsnoise/calibration.h"
#include "tlsnoise/config.h"
#include "tlsnoise/lorentzian_fit.h"
#include "tlsnoise/spectral_estimator.h"

namespace tlsnoise {

struct RunOptions {
    std::size_t workers = 1;
    std::uint64_t replicate = 0;  // 0 is the primary run; k > 0 reruns with a derived seed
};

enum class PointStatus { ok, no_signal, fit_failed, amplitude_exceeds_maximum };
const char *to_string(PointStatus status);

struct SweepRow {
    double temperature = 0.0;  // K, base temperature T_c
    double n_th_effective = 0.0;
    double rho_model = 0.0;
    double rho_fitted = 0.0;
    double rho_uncertainty = 0.0;
    double gamma1_model = 0.0;  // rad/s
    double gamma1_fitted = 0.0;
    double gamma1_uncertainty = 0.0;
    double t1_model_ns = 0.0;   // 1 / gamma1_model
    double t1_fitted_ns = 0.0;  // 1 / gamma1_fitted
    double t1_uncertainty_ns = 0.0;
    double amplitude_fitted = 0.0;  // Lorentzian A in the stored spectral convention
    double amplitude_uncertainty = 0.0;
    double amplitude_model = 0.0;
    double fit_chi2 = 0.0;
    PointStatus status = PointStatus::ok;
};

struct PointResult {
    SweepRow row;
    QubitRates rates;
    PowerSpectrum subtracted;
    PowerSpectrum analytic;
    std::optional<LorentzianFit> fit;
    std::string message;
    double delta_v = 0.0;  // sensitivity used for population extraction
};

struct SweepResult {
    std::vector<PointResult> points;
    std::vector<PointResult> replicates;  // filled when replicate runs were requested

    std::size_t failures() const;
};

/// Calls fn(k) for k in [0, count) on up to `workers` threads. fn must only write
/// to state owned by index k.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)> &fn);

/// Thermal model at base temperature T_c (radiation stages from the config).
QubitRates model_rates(const ExperimentConfig &config, double temperature);

/// Sensitivity Delta V used for extraction: twice the calibration override if present,
/// otherwise the configured detector swing.
double extraction_delta_v(const ExperimentConfig &config);

/// Averaged ON and OFF periodograms for one temperature. The acquisition runs as
/// independent chop cycles (one ON and one OFF window each) with randomness keyed by
/// (master_seed, point_index, replicate, cycle); per-cycle partial sums are merged in
/// cycle order, so the result is bit-identical for any worker count.
OnOffSpectra simulate_spectra(const ExperimentConfig &config, const QubitRates &rates, std::size_t point_index,
                              const RunOptions &options = {});

/// Full chain for one temperature: simulation, background subtraction, fit, inversion.
/// Fit failures are reported in row.status, never thrown.
PointResult run_point(const ExperimentConfig &config, double temperature, std::size_t point_index = 0,
                      const RunOptions &options = {});

/// run_point over config.temperatures; with options.replicate > 0 every point is also
/// rerun with that replicate index into SweepResult::replicates.
SweepResult run_sweep(const ExperimentConfig &config, const RunOptions &options = {});

void write_sweep_csv(const std::filesystem::path &path, const std::vector<PointResult> &points);

/// Per-point spectrum CSVs and fit JSON: spectrum_<k>_subtracted.csv,
/// spectrum_<k>_analytic.csv, fit_<k>.json.
void write_point_outputs(const std::filesystem::path &dir, const PointResult &point, std::size_t index);

/// Plot-ready tables: figure_spectra.csv, figure_population.csv, figure_relaxation.csv.
void emit_figure_data(const std::filesystem::path &dir, const SweepResult &sweep);

/// Saturated and OFF records from the configured detector, then estimate_delta_v.
CalibrationResult run_calibration(const ExperimentConfig &config, std::optional<std::size_t> n_samples = {});

}  // namespace tlsnoise

#endif
