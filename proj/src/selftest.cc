#include "tlsnoise/selftest.h"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "tlsnoise/calibration.h"
#include "tlsnoise/lorentzian_fit.h"
#include "tlsnoise/pipeline.h"
#include "tlsnoise/rng.h"
#include "tlsnoise/telegraph.h"

namespace tlsnoise {

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

template <typename F>
void check(std::vector<SelftestCheck> &out, std::ostream &log, const std::string &name, F &&body) {
    SelftestCheck c{name, false, ""};
    try {
        std::ostringstream detail;
        c.passed = body(detail);
        c.detail = detail.str();
    } catch (const std::exception &e) {
        c.detail = std::string("exception: ") + e.what();
    }
    log << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) {
        log << "  (" << c.detail << ")";
    }
    log << '\n';
    out.push_back(std::move(c));
}

}  // namespace

std::vector<SelftestCheck> run_selftest(std::ostream &log) {
    std::vector<SelftestCheck> results;
    const double f_qubit = 5.304e9;
    const double gamma = 1.0 / 226e-9;

    check(results, log, "temperature roundtrip", [&](std::ostream &d) {
        double worst = 0.0;
        for (double t : {0.005, 0.02, 0.055, 0.3, 3.0, 30.0}) {
            double rho = steady_state({gamma, bose_einstein_occupation(f_qubit, t)}).rho_ee;
            worst = std::max(worst, rel(effective_temperature(rho, f_qubit), t));
        }
        d << "max rel err " << worst;
        return worst < 1e-9;
    });

    check(results, log, "occupation monotone in temperature", [&](std::ostream &) {
        double prev = -1.0;
        for (int k = 1; k <= 200; ++k) {
            double n = bose_einstein_occupation(f_qubit, 0.005 * k);
            if (!(n > prev)) {
                return false;
            }
            prev = n;
        }
        return true;
    });

    check(results, log, "analytic Lorentzian fit self-consistency", [&](std::ostream &d) {
        QubitRates rates{gamma, 0.012};
        DetectorParams det = ExperimentConfig::default_detector();
        PowerSpectrum s = analytic_spectrum(rates, det, periodogram_frequencies(100e6, 1024));
        LorentzianFit f = fit(s);
        double ea = rel(f.amplitude, lorentzian_amplitude(rates, det));
        double eg = rel(f.gamma1, rates.fluctuation_rate());
        d << "A err " << ea << ", gamma1 err " << eg;
        return ea < 1e-8 && eg < 1e-8;
    });

    check(results, log, "spin spectrum integrates to Var(z)", [&](std::ostream &d) {
        QubitRates rates{gamma, 0.3};
        // Simpson on f = c t / (1 - t), t in [0, 1).
        const double c = rates.fluctuation_rate() / (2.0 * std::numbers::pi);
        const int n = 20000;
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
            double t = (k + 0.5) / n;
            double jac = c / ((1.0 - t) * (1.0 - t));
            acc += spin_spectral_density(rates, c * t / (1.0 - t)) * jac / n;
        }
        double rho = steady_state(rates).rho_ee;
        double e = rel(acc, 4.0 * rho * (1.0 - rho));
        d << "rel err " << e;
        return e < 1e-3;
    });

    check(results, log, "periodogram Parseval", [&](std::ostream &d) {
        Rng rng(7);
        std::vector<double> x(1024), zero(1024, 0.0);
        for (double &v : x) {
            v = rng.normal();
        }
        RealFft fft(1024);
        auto p = segment_periodogram(fft, x, zero, 1e6);
        double mean = std::accumulate(x.begin(), x.end(), 0.0) / 1024.0;
        double power = 0.0;
        for (double v : x) {
            power += (v - mean) * (v - mean);
        }
        power /= 1024.0;
        double area = std::accumulate(p.begin(), p.end(), 0.0) * (1e6 / 1024.0);
        d << "rel err " << rel(area, power);
        return rel(area, power) < 1e-9;
    });

    check(results, log, "telegraph determinism and dwell mean", [&](std::ostream &d) {
        QubitRates rates{gamma, 0.2};
        auto a = simulate_trajectory(rates, 0.05, 99);
        auto b = simulate_trajectory(rates, 0.05, 99);
        auto dw = dwell_times(a, QubitState::excited);
        double mean = std::accumulate(dw.begin(), dw.end(), 0.0) / static_cast<double>(dw.size());
        double e = rel(mean, 1.0 / rates.down_rate());
        d << dw.size() << " dwells, mean rel err " << e;
        return a.switch_times() == b.switch_times() && e < 5.0 / std::sqrt(static_cast<double>(dw.size()));
    });

    check(results, log, "population inversion algebra", [&](std::ostream &d) {
        double worst = 0.0;
        for (double rho : {0.0, 0.001, 0.01, 0.1, 0.49}) {
            double dv = 5.52e-3;
            double back = population_from_amplitude(dv * dv * rho * (1.0 - rho), dv);
            worst = std::max(worst, rho == 0.0 ? std::abs(back) : rel(back, rho));
        }
        d << "max rel err " << worst;
        return worst < 1e-12;
    });

    check(results, log, "noiseless calibration is exact", [&](std::ostream &d) {
        DetectorParams det = ExperimentConfig::default_detector();
        det.noise_std_per_sample = 0.0;
        auto sat = simulate_saturated_records(det, 100000, 3);
        auto off = synthesize_off(100000, 1e8, det, 4);
        double e = rel(estimate_delta_v(sat, off).delta_v_half, 0.5 * det.delta_v());
        d << "rel err " << e;
        return e < 1e-12;
    });

    check(results, log, "pipeline reproducible across worker counts", [&](std::ostream &) {
        ExperimentConfig cfg;
        cfg.acquisition.n_averages = 300;
        auto one = simulate_spectra(cfg, model_rates(cfg, 0.05), 0, {1, 0});
        auto two = simulate_spectra(cfg, model_rates(cfg, 0.05), 0, {3, 0});
        return one.on.values == two.on.values && one.off.values == two.off.values;
    });
    return results;
}

}  // namespace tlsnoise
