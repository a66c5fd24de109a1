#ifndef TLSNOISE_LORENTZIAN_FIT_H
#define TLSNOISE_LORENTZIAN_FIT_H

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>

#include <json.hpp>

#include "tlsnoise/spectral_estimator.h"

namespace tlsnoise {

struct FitOptions {
    /// Float a flat offset. Unset: on for SUBTRACTED spectra, off for ANALYTIC ones.
    std::optional<bool> fit_baseline;
    /// Fit range in Hz. Defaults to [2 * bin_width, Nyquist].
    std::optional<double> freq_min;
    std::optional<double> freq_max;
    /// Weight bins by 1 / standard_error^2 when the spectrum carries standard errors.
    bool inverse_variance_weights = false;
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;  // cosine between residual and Jacobian columns
    double step_tolerance = 1e-10;     // relative, on the log-parameters
};

/// Levenberg-Marquardt fit of A * Gamma1 / (Gamma1^2 + omega^2) + baseline,
/// omega = 2 pi f. A and Gamma1 are optimized in log space so both stay positive.
struct LorentzianFit {
    double amplitude = 0.0;  // V^2/Hz * rad/s
    double gamma1 = 0.0;     // rad/s, half width at half maximum
    double baseline = 0.0;   // V^2/Hz
    /// Covariance of (amplitude, gamma1, baseline); baseline row/column zero when not fitted.
    /// Propagated from the per-bin standard errors when the spectrum carries them,
    /// otherwise from the residual scatter.
    std::array<std::array<double, 3>, 3> covariance{};
    /// Reduced chi-square. With standard errors available it is sum((r / se)^2) / dof,
    /// otherwise the residual mean square relative to the squared peak height.
    double residual_chi2 = 0.0;
    bool converged = false;
    int n_iterations = 0;
    std::size_t n_bins = 0;
    bool baseline_fitted = false;

    double amplitude_error() const;
    double gamma1_error() const;
    double model(double frequency) const;
};

class FitError : public std::runtime_error {
   public:
    FitError(const std::string &what, LorentzianFit last) : std::runtime_error(what), last_(last) {}
    const LorentzianFit &last_iterate() const { return last_; }

   private:
    LorentzianFit last_;
};

class NoSignalError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class AmplitudeExceedsMaximumError : public std::domain_error {
   public:
    using std::domain_error::domain_error;
};

/// Requires a SUBTRACTED or ANALYTIC spectrum with at least 8 bins in range.
/// Initial width from the half maximum of a 5-bin moving average, initial amplitude
/// from peak * width. Throws NoSignalError when every in-range value is <= 0 or the
/// amplitude collapses to zero, FitError (with the last iterate) on non-convergence.
LorentzianFit fit(const PowerSpectrum &spectrum, const FitOptions &options = {});

/// Converts a fitted amplitude into the sensitivity form Delta V^2 rho (1 - rho).
inline double sensitivity_amplitude(double fitted_amplitude) { return fitted_amplitude / kAmplitudeConvention; }

/// Thermal root rho < 1/2 of A = Delta V^2 rho (1 - rho).
/// Throws AmplitudeExceedsMaximumError if A > Delta V^2 / 4.
double population_from_amplitude(double amplitude, double delta_v);

/// The root above 1/2 of the same quadratic (an inverted qubit), for diagnostics.
double inverted_population_from_amplitude(double amplitude, double delta_v);

/// d rho / d A on the thermal branch.
double population_sensitivity(double amplitude, double delta_v);

/// Gamma = Gamma1 / (1 + 2 n_th).
double gamma_from_width(double gamma1, double n_th);

/// {A, gamma1_rad_s, gamma1_over_2pi_Hz, rho_ee, gamma_intrinsic, t1_ns, chi2, converged,
///  n_iterations, covariance}. t1_ns is 1 / Gamma1, the relaxation time read off the width.
nlohmann::json fit_report(const LorentzianFit &fit, double rho_ee, double gamma_intrinsic);

}  // namespace tlsnoise

#endif
