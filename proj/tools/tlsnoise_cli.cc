// Command-line front end: temperature sweeps, single points, calibration and
// analytic spectra. Run `tlsnoise --help` for the subcommands.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "tlsnoise/pipeline.h"
#include "tlsnoise/selftest.h"

namespace fs = std::filesystem;
using namespace tlsnoise;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> averages;
    std::string out_dir = "out";
    std::size_t workers = 1;
    bool replicate = false;
    bool keep_going = false;
};

ExperimentConfig load(const CommonFlags &flags) {
    ExperimentConfig cfg = flags.config_path == "default" ? ExperimentConfig{} : load_config(flags.config_path);
    if (flags.seed) {
        cfg.master_seed = *flags.seed;
    }
    if (flags.averages) {
        cfg.acquisition.n_averages = *flags.averages;
    }
    cfg.validate();
    return cfg;
}

void warn_two_level_limit(double temperature) {
    if (temperature > 0.100) {
        std::cerr << "warning: T_c = " << temperature * 1e3
                  << " mK is above ~100 mK, where higher transmon levels are no longer negligible\n";
    }
}

void add_common(CLI::App *cmd, CommonFlags &flags) {
    cmd->add_option("config", flags.config_path, "JSON config file, or 'default' for built-in defaults")->required();
    cmd->add_option("--seed", flags.seed, "Override master_seed");
    cmd->add_option("--averages", flags.averages, "Override acquisition.n_averages");
    cmd->add_option("--out-dir", flags.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--workers", flags.workers, "Worker threads")->capture_default_str();
}

void print_row(const SweepRow &r) {
    std::cout << "T_c=" << r.temperature * 1e3 << " mK  n_th=" << r.n_th_effective << "  rho_model=" << r.rho_model
              << "  rho_fitted=" << r.rho_fitted << " +- " << r.rho_uncertainty << "  T1_model=" << r.t1_model_ns
              << " ns  T1_fitted=" << r.t1_fitted_ns << " ns  [" << to_string(r.status) << "]\n";
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Thermal telegraph-noise spectroscopy of a continuously monitored two-level system"};
    app.require_subcommand(1);

    CommonFlags flags;
    double temperature = 0.0;
    std::optional<std::size_t> calib_samples;

    auto *sweep = app.add_subcommand("sweep", "Simulate, fit and tabulate every configured temperature");
    add_common(sweep, flags);
    sweep->add_flag("--replicate", flags.replicate, "Rerun each point with a derived seed");
    sweep->add_flag("--keep-going", flags.keep_going, "Exit 0 even if some fits fail");

    auto *point = app.add_subcommand("point", "Simulate and fit one temperature");
    add_common(point, flags);
    point->add_option("--temp", temperature, "Base temperature T_c in K")->required();
    point->add_flag("--replicate", flags.replicate, "Also run a replicate with a derived seed");
    point->add_flag("--keep-going", flags.keep_going, "Exit 0 even if the fit fails");

    auto *calibrate = app.add_subcommand("calibrate", "Estimate Delta V/2 from simulated saturated records");
    add_common(calibrate, flags);
    calibrate->add_option("--samples", calib_samples, "Override calibration.n_samples");

    auto *oracle = app.add_subcommand("oracle", "Write the analytic spectrum for one temperature");
    add_common(oracle, flags);
    oracle->add_option("--temp", temperature, "Base temperature T_c in K")->required();

    auto *selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");
    auto *defaults = app.add_subcommand("default-config", "Print the built-in config as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (selftest->parsed()) {
            auto checks = run_selftest(std::cout);
            for (const auto &c : checks) {
                if (!c.passed) {
                    return 1;
                }
            }
            return 0;
        }
        if (defaults->parsed()) {
            std::cout << config_to_json(ExperimentConfig{}).dump(2) << '\n';
            return 0;
        }

        ExperimentConfig cfg = load(flags);
        fs::create_directories(flags.out_dir);
        const fs::path out(flags.out_dir);
        RunOptions options{flags.workers, 0};

        if (sweep->parsed()) {
            for (double t : cfg.temperatures) {
                warn_two_level_limit(t);
            }
            if (flags.replicate) {
                options.replicate = 1;
            }
            SweepResult result = run_sweep(cfg, options);
            write_sweep_csv(out / "sweep.csv", result.points);
            if (!result.replicates.empty()) {
                write_sweep_csv(out / "sweep_replicate.csv", result.replicates);
            }
            for (std::size_t k = 0; k < result.points.size(); ++k) {
                write_point_outputs(out, result.points[k], k);
                print_row(result.points[k].row);
            }
            emit_figure_data(out, result);
            if (result.failures() > 0 && !flags.keep_going) {
                std::cerr << result.failures() << " point(s) failed to fit\n";
                return 2;
            }
            return 0;
        }

        if (point->parsed()) {
            warn_two_level_limit(temperature);
            std::size_t index = 0;
            for (std::size_t k = 0; k < cfg.temperatures.size(); ++k) {
                if (cfg.temperatures[k] == temperature) {
                    index = k;
                    break;
                }
            }
            SweepResult result;
            result.points.push_back(run_point(cfg, temperature, index, options));
            if (flags.replicate) {
                result.replicates.push_back(run_point(cfg, temperature, index, {flags.workers, 1}));
            }
            write_sweep_csv(out / "point.csv", result.points);
            write_point_outputs(out, result.points.front(), index);
            print_row(result.points.front().row);
            if (!result.replicates.empty()) {
                write_sweep_csv(out / "point_replicate.csv", result.replicates);
                print_row(result.replicates.front().row);
            }
            if (result.failures() > 0 && !flags.keep_going) {
                std::cerr << "fit failed: " << result.points.front().message << '\n';
                return 2;
            }
            return 0;
        }

        if (calibrate->parsed()) {
            CalibrationResult res = run_calibration(cfg, calib_samples);
            auto report = calibration_report(res);
            std::ofstream(out / "calibration.json") << report.dump(2) << '\n';
            std::cout << report.dump(2) << '\n';
            return 0;
        }

        if (oracle->parsed()) {
            warn_two_level_limit(temperature);
            QubitRates rates = model_rates(cfg, temperature);
            PowerSpectrum s = analytic_spectrum(
                rates, cfg.detector,
                periodogram_frequencies(cfg.acquisition.sample_rate, cfg.acquisition.segment_length));
            write_spectrum_csv(out / "oracle.csv", s,
                               {{"temperature_K", temperature},
                                {"gamma_intrinsic_per_s", rates.gamma_intrinsic},
                                {"n_th", rates.n_th},
                                {"delta_v_V", cfg.detector.delta_v()}});
            std::cout << "n_th=" << rates.n_th << " rho_ee=" << steady_state(rates).rho_ee
                      << " gamma1=" << rates.fluctuation_rate() << " rad/s -> " << (out / "oracle.csv").string()
                      << '\n';
            return 0;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
