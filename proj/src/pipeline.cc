#include "tlsnoise/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "tlsnoise/rng.h"
#include "tlsnoise/telegraph.h"

namespace tlsnoise {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    return out;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

const char *to_string(PointStatus status) {
    switch (status) {
        case PointStatus::ok:
            return "ok";
        case PointStatus::no_signal:
            return "no_signal";
        case PointStatus::fit_failed:
            return "fit_failed";
        case PointStatus::amplitude_exceeds_maximum:
            return "amplitude_exceeds_maximum";
    }
    return "?";
}

std::size_t SweepResult::failures() const {
    std::size_t n = 0;
    for (const auto *set : {&points, &replicates}) {
        for (const auto &p : *set) {
            n += p.row.status != PointStatus::ok;
        }
    }
    return n;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)> &fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t k = 0; k < count; ++k) {
            fn(k);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < count; k = next++) {
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    next = count;
                }
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

QubitRates model_rates(const ExperimentConfig &config, double temperature) {
    ThermalEnvironment env = config.environment;
    env.base_temperature = temperature;
    env.validate();
    return {config.gamma_intrinsic, effective_photon_number(env)};
}

double extraction_delta_v(const ExperimentConfig &config) {
    if (config.calibration.delta_v_half_override) {
        return 2.0 * *config.calibration.delta_v_half_override;
    }
    return config.detector.delta_v();
}

OnOffSpectra simulate_spectra(const ExperimentConfig &config, const QubitRates &rates, std::size_t point_index,
                              const RunOptions &options) {
    const auto &acq = config.acquisition;
    const std::size_t seg = acq.segment_length;
    const auto period = static_cast<std::size_t>(std::llround(acq.chop.period * acq.sample_rate));
    const auto on_len = static_cast<std::size_t>(std::llround(acq.chop.duty * acq.chop.period * acq.sample_rate));
    const std::size_t on_per_cycle = on_len / seg;
    const std::size_t off_per_cycle = (period - on_len) / seg;
    if (on_per_cycle == 0 || off_per_cycle == 0) {
        throw std::invalid_argument("chop windows shorter than one segment");
    }
    const std::size_t n = acq.n_averages;
    const std::size_t cycles = std::max((n + on_per_cycle - 1) / on_per_cycle, (n + off_per_cycle - 1) / off_per_cycle);
    const double cycle_duration = static_cast<double>(period) / acq.sample_rate;

    std::vector<SegmentAverages> partial(cycles);
    parallel_for(cycles, options.workers, [&](std::size_t c) {
        const std::uint64_t cycle_seed = derive_seed(config.master_seed, {point_index, options.replicate, c});
        TelegraphTrajectory traj = simulate_trajectory(rates, cycle_duration, derive_seed(cycle_seed, {0}));
        QuadratureRecord rec = chop(traj, config.detector, acq.sample_rate, acq.chop, derive_seed(cycle_seed, {1}));
        apply_gain_profile(rec, config.detector.gain_profile, seg);
        const std::size_t take_on = std::min(on_per_cycle, n - std::min(n, c * on_per_cycle));
        const std::size_t take_off = std::min(off_per_cycle, n - std::min(n, c * off_per_cycle));
        partial[c] = accumulate_periodograms(rec, seg, config.detector.gain_profile, take_on, take_off);
    });

    SpectrumAccumulator on(acq.sample_rate, seg);
    SpectrumAccumulator off(acq.sample_rate, seg);
    for (const auto &p : partial) {
        on.merge(p.on);
        off.merge(p.off);
    }
    return {on.mean(SpectrumKind::on), off.mean(SpectrumKind::off)};
}

PointResult run_point(const ExperimentConfig &config, double temperature, std::size_t point_index,
                      const RunOptions &options) {
    config.validate();
    PointResult out;
    out.rates = model_rates(config, temperature);
    out.delta_v = extraction_delta_v(config);

    SweepRow &row = out.row;
    row.temperature = temperature;
    row.n_th_effective = out.rates.n_th;
    row.rho_model = steady_state(out.rates).rho_ee;
    row.gamma1_model = out.rates.fluctuation_rate();
    row.t1_model_ns = 1e9 / row.gamma1_model;
    row.amplitude_model = lorentzian_amplitude(out.rates, config.detector);

    OnOffSpectra spectra = simulate_spectra(config, out.rates, point_index, options);
    out.subtracted = background_subtract(spectra.on, spectra.off);
    out.analytic = analytic_spectrum(out.rates, config.detector, out.subtracted.frequencies);
    out.analytic.sample_rate = out.subtracted.sample_rate;
    out.analytic.segment_length = out.subtracted.segment_length;

    auto mark_no_fit = [&row] {
        row.gamma1_fitted = row.gamma1_uncertainty = kNaN;
        row.t1_fitted_ns = row.t1_uncertainty_ns = kNaN;
        row.amplitude_fitted = row.amplitude_uncertainty = kNaN;
        row.fit_chi2 = kNaN;
        row.rho_fitted = row.rho_uncertainty = kNaN;
    };

    FitOptions fo;
    fo.fit_baseline = config.fit.fit_baseline;
    fo.freq_min = config.fit.freq_min;
    fo.freq_max = config.fit.freq_max;
    fo.inverse_variance_weights = config.fit.inverse_variance_weights;
    try {
        LorentzianFit f = fit(out.subtracted, fo);
        out.fit = f;
        row.amplitude_fitted = f.amplitude;
        row.amplitude_uncertainty = f.amplitude_error();
        row.gamma1_fitted = f.gamma1;
        row.gamma1_uncertainty = f.gamma1_error();
        row.t1_fitted_ns = 1e9 / f.gamma1;
        row.t1_uncertainty_ns = row.t1_fitted_ns * f.gamma1_error() / f.gamma1;
        row.fit_chi2 = f.residual_chi2;
        const double a = sensitivity_amplitude(f.amplitude);
        try {
            row.rho_fitted = population_from_amplitude(a, out.delta_v);
            row.rho_uncertainty =
                population_sensitivity(a, out.delta_v) * sensitivity_amplitude(f.amplitude_error());
        } catch (const AmplitudeExceedsMaximumError &e) {
            row.status = PointStatus::amplitude_exceeds_maximum;
            row.rho_fitted = row.rho_uncertainty = kNaN;
            out.message = e.what();
        }
    } catch (const NoSignalError &e) {
        mark_no_fit();
        row.status = PointStatus::no_signal;
        row.rho_fitted = 0.0;
        row.amplitude_fitted = 0.0;
        out.message = e.what();
    } catch (const FitError &e) {
        mark_no_fit();
        row.status = PointStatus::fit_failed;
        out.message = e.what();
    }
    return out;
}

SweepResult run_sweep(const ExperimentConfig &config, const RunOptions &options) {
    SweepResult result;
    for (std::size_t k = 0; k < config.temperatures.size(); ++k) {
        RunOptions primary = options;
        primary.replicate = 0;
        result.points.push_back(run_point(config, config.temperatures[k], k, primary));
        if (options.replicate > 0) {
            result.replicates.push_back(run_point(config, config.temperatures[k], k, options));
        }
    }
    return result;
}

void write_sweep_csv(const std::filesystem::path &path, const std::vector<PointResult> &points) {
    auto out = open_out(path);
    out << "T_c_K,n_th_effective,rho_model,rho_fitted,rho_uncertainty,gamma1_model_rad_s,gamma1_fitted_rad_s,"
           "gamma1_uncertainty_rad_s,t1_model_ns,t1_fitted_ns,t1_uncertainty_ns,amplitude_model,amplitude_fitted,"
           "amplitude_uncertainty,fit_chi2,status\n";
    for (const auto &p : points) {
        const SweepRow &r = p.row;
        out << fmt(r.temperature) << ',' << fmt(r.n_th_effective) << ',' << fmt(r.rho_model) << ','
            << fmt(r.rho_fitted) << ',' << fmt(r.rho_uncertainty) << ',' << fmt(r.gamma1_model) << ','
            << fmt(r.gamma1_fitted) << ',' << fmt(r.gamma1_uncertainty) << ',' << fmt(r.t1_model_ns) << ','
            << fmt(r.t1_fitted_ns) << ',' << fmt(r.t1_uncertainty_ns) << ',' << fmt(r.amplitude_model) << ','
            << fmt(r.amplitude_fitted) << ',' << fmt(r.amplitude_uncertainty) << ',' << fmt(r.fit_chi2) << ','
            << to_string(r.status) << '\n';
    }
}

void write_point_outputs(const std::filesystem::path &dir, const PointResult &point, std::size_t index) {
    const SpectrumHeader header = {
        {"temperature_K", point.row.temperature},
        {"gamma_intrinsic_per_s", point.rates.gamma_intrinsic},
        {"n_th", point.rates.n_th},
        {"delta_v_V", point.delta_v},
    };
    const std::string stem = std::to_string(index);
    write_spectrum_csv(dir / ("spectrum_" + stem + "_subtracted.csv"), point.subtracted, header);
    write_spectrum_csv(dir / ("spectrum_" + stem + "_analytic.csv"), point.analytic, header);

    nlohmann::json report;
    if (point.fit) {
        double gamma = kNaN;
        if (point.row.status == PointStatus::ok) {
            gamma = gamma_from_width(point.fit->gamma1, occupation_from_population(point.row.rho_fitted));
        }
        report = fit_report(*point.fit, point.row.rho_fitted, gamma);
    }
    report["temperature_K"] = point.row.temperature;
    report["status"] = to_string(point.row.status);
    if (!point.message.empty()) {
        report["message"] = point.message;
    }
    auto out = open_out(dir / ("fit_" + stem + ".json"));
    out << report.dump(2) << '\n';
}

void emit_figure_data(const std::filesystem::path &dir, const SweepResult &sweep) {
    {
        auto out = open_out(dir / "figure_spectra.csv");
        out << "T_c_K,frequency_Hz,psd_subtracted_V2_per_Hz,psd_analytic_V2_per_Hz,psd_fit_V2_per_Hz\n";
        for (const auto &p : sweep.points) {
            for (std::size_t b = 0; b < p.subtracted.size(); ++b) {
                const double f = p.subtracted.frequencies[b];
                out << fmt(p.row.temperature) << ',' << fmt(f) << ',' << fmt(p.subtracted.values[b]) << ','
                    << fmt(p.analytic.values[b]) << ',' << fmt(p.fit ? p.fit->model(f) : kNaN) << '\n';
            }
        }
    }
    {
        auto out = open_out(dir / "figure_population.csv");
        out << "T_c_K,rho_fitted,rho_uncertainty,rho_model\n";
        for (const auto &p : sweep.points) {
            out << fmt(p.row.temperature) << ',' << fmt(p.row.rho_fitted) << ',' << fmt(p.row.rho_uncertainty) << ','
                << fmt(p.row.rho_model) << '\n';
        }
    }
    {
        auto out = open_out(dir / "figure_relaxation.csv");
        out << "T_c_K,t1_fitted_ns,t1_uncertainty_ns,t1_model_ns\n";
        for (const auto &p : sweep.points) {
            out << fmt(p.row.temperature) << ',' << fmt(p.row.t1_fitted_ns) << ',' << fmt(p.row.t1_uncertainty_ns)
                << ',' << fmt(p.row.t1_model_ns) << '\n';
        }
    }
}

CalibrationResult run_calibration(const ExperimentConfig &config, std::optional<std::size_t> n_samples) {
    const std::size_t n = n_samples.value_or(config.calibration.n_samples);
    // Stream keys outside the point-index space used by sweeps.
    const std::uint64_t base = derive_seed(config.master_seed, {0xca1b'0000ULL});
    QuadratureRecord sat = simulate_saturated_records(config.detector, n, derive_seed(base, {0}));
    sat.sample_rate = config.acquisition.sample_rate;
    QuadratureRecord off =
        synthesize_off(n, config.acquisition.sample_rate, config.detector, derive_seed(base, {1}));
    return estimate_delta_v(sat, off);
}

}  // namespace tlsnoise
