#include "tlsnoise/lorentzian_fit.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace tlsnoise {

double LorentzianFit::amplitude_error() const { return std::sqrt(std::max(covariance[0][0], 0.0)); }
double LorentzianFit::gamma1_error() const { return std::sqrt(std::max(covariance[1][1], 0.0)); }

double LorentzianFit::model(double frequency) const {
    double omega = 2.0 * std::numbers::pi * frequency;
    return amplitude * gamma1 / (gamma1 * gamma1 + omega * omega) + baseline;
}

namespace {

struct Problem {
    std::vector<double> omega;
    std::vector<double> y;
    std::vector<double> weight;  // multiplies (model - y)
    double scale = 1.0;          // residuals are divided by this; baseline = theta[2] * scale
    bool baseline = false;
    bool weighted = false;

    int n_params() const { return baseline ? 3 : 2; }
};

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

void evaluate(const Problem &pb, const Vec &theta, Vec &r, Mat *jac) {
    const double a = std::exp(theta[0]);
    const double g = std::exp(theta[1]);
    const double b = pb.baseline ? theta[2] * pb.scale : 0.0;
    const std::size_t n = pb.y.size();
    r.resize(static_cast<Eigen::Index>(n));
    if (jac != nullptr) {
        jac->resize(static_cast<Eigen::Index>(n), pb.n_params());
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double w2 = pb.omega[k] * pb.omega[k];
        const double denom = g * g + w2;
        const double lor = a * g / denom;
        const double f = pb.weight[k] / pb.scale;
        const auto row = static_cast<Eigen::Index>(k);
        r[row] = (lor + b - pb.y[k]) * f;
        if (jac != nullptr) {
            (*jac)(row, 0) = lor * f;
            (*jac)(row, 1) = lor * (w2 - g * g) / denom * f;
            if (pb.baseline) {
                (*jac)(row, 2) = pb.scale * f;
            }
        }
    }
}

// Cosine between the residual and each Jacobian column. Residuals are relative to the
// peak height, so the norm is floored at 1e-7 per bin: a fit whose residual is
// already at rounding level counts as stationary.
double relative_gradient(const Mat &jac, const Vec &r) {
    const double rnorm = std::max(r.norm(), 1e-7 * std::sqrt(static_cast<double>(r.size())));
    Vec g = jac.transpose() * r;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < jac.cols(); ++j) {
        double cn = jac.col(j).norm();
        if (cn > 0.0) {
            worst = std::max(worst, std::abs(g[j]) / (cn * rnorm));
        }
    }
    return worst;
}

// An accepted step that leaves the cost unchanged means rounding has taken over; the
// gradient test is then relaxed to the square root of the tolerance.
bool stationary(double rel_grad, bool no_progress, const FitOptions &options) {
    return rel_grad < options.gradient_tolerance || (no_progress && rel_grad < std::sqrt(options.gradient_tolerance));
}

std::vector<double> moving_average(const std::vector<double> &v, std::size_t half) {
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        std::size_t lo = k >= half ? k - half : 0;
        std::size_t hi = std::min(v.size() - 1, k + half);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) {
            acc += v[j];
        }
        out[k] = acc / static_cast<double>(hi - lo + 1);
    }
    return out;
}

LorentzianFit package(const Problem &pb, const Vec &theta, const Mat &jac, const Vec &r,
                      const std::vector<double> &standard_error, int iterations, bool converged) {
    LorentzianFit out;
    out.amplitude = std::exp(theta[0]);
    out.gamma1 = std::exp(theta[1]);
    out.baseline = pb.baseline ? theta[2] * pb.scale : 0.0;
    out.baseline_fitted = pb.baseline;
    out.n_iterations = iterations;
    out.converged = converged;
    out.n_bins = pb.y.size();

    const double dof = std::max(1.0, static_cast<double>(pb.y.size()) - pb.n_params());
    const double rss = r.squaredNorm();
    const double sigma2 = pb.weighted ? 1.0 : rss / dof;

    // Uniform weights on bins with known, unequal standard errors: the sandwich
    // (J'J)^-1 J' S J (J'J)^-1 replaces sigma^2 (J'J)^-1, which assumes equal noise.
    const bool sandwich = !pb.weighted && standard_error.size() == pb.y.size();
    Mat jtj = jac.transpose() * jac;
    Eigen::FullPivLU<Mat> lu(jtj);
    if (lu.isInvertible()) {
        Mat inv = lu.inverse();
        Mat cp = inv * sigma2;
        if (sandwich) {
            Mat meat = Mat::Zero(pb.n_params(), pb.n_params());
            for (std::size_t k = 0; k < pb.y.size(); ++k) {
                const double s = standard_error[k] / pb.scale;
                auto row = jac.row(static_cast<Eigen::Index>(k));
                meat += (s * s) * row.transpose() * row;
            }
            cp = inv * meat * inv;
        }
        const double d[3] = {out.amplitude, out.gamma1, pb.scale};
        for (int i = 0; i < pb.n_params(); ++i) {
            for (int j = 0; j < pb.n_params(); ++j) {
                out.covariance[i][j] = d[i] * d[j] * cp(i, j);
            }
        }
    } else {
        for (auto &row : out.covariance) {
            row.fill(std::numeric_limits<double>::infinity());
        }
    }

    if (!standard_error.empty()) {
        double chi2 = 0.0;
        for (std::size_t k = 0; k < pb.y.size(); ++k) {
            double resid = r[static_cast<Eigen::Index>(k)] * pb.scale / pb.weight[k];
            if (standard_error[k] > 0.0) {
                chi2 += (resid / standard_error[k]) * (resid / standard_error[k]);
            }
        }
        out.residual_chi2 = chi2 / dof;
    } else {
        out.residual_chi2 = rss / dof;
    }
    return out;
}

}  // namespace

LorentzianFit fit(const PowerSpectrum &spectrum, const FitOptions &options) {
    if (spectrum.kind != SpectrumKind::subtracted && spectrum.kind != SpectrumKind::analytic) {
        throw std::invalid_argument("fit expects a SUBTRACTED or ANALYTIC spectrum");
    }
    if (spectrum.frequencies.size() != spectrum.values.size()) {
        throw std::invalid_argument("spectrum frequency and value arrays differ in length");
    }
    const double bw = spectrum.bin_width();
    const double f_lo = options.freq_min.value_or(2.0 * bw);
    const double f_hi = options.freq_max.value_or(spectrum.frequencies.empty() ? 0.0 : spectrum.frequencies.back());
    const bool has_se = spectrum.standard_error.size() == spectrum.values.size();
    const bool weighted = options.inverse_variance_weights && has_se;

    Problem pb;
    pb.baseline = options.fit_baseline.value_or(spectrum.kind == SpectrumKind::subtracted);
    std::vector<double> freqs;
    std::vector<double> se;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        double f = spectrum.frequencies[k];
        if (f < f_lo || f > f_hi) {
            continue;
        }
        if (weighted && !(spectrum.standard_error[k] > 0.0)) {
            continue;
        }
        freqs.push_back(f);
        pb.omega.push_back(2.0 * std::numbers::pi * f);
        pb.y.push_back(spectrum.values[k]);
        pb.weight.push_back(weighted ? 1.0 / spectrum.standard_error[k] : 1.0);
        if (has_se) {
            se.push_back(spectrum.standard_error[k]);
        }
    }
    if (pb.y.size() < 8) {
        throw std::invalid_argument("fewer than 8 bins in the fit range");
    }
    if (std::all_of(pb.y.begin(), pb.y.end(), [](double v) { return v <= 0.0; })) {
        throw NoSignalError("spectrum has no positive bin in the fit range");
    }

    // Initial guess.
    const std::vector<double> smooth = moving_average(pb.y, 2);
    double base0 = 0.0;
    if (pb.baseline) {
        std::vector<double> upper(smooth.begin() + static_cast<std::ptrdiff_t>(smooth.size() / 2), smooth.end());
        std::nth_element(upper.begin(), upper.begin() + static_cast<std::ptrdiff_t>(upper.size() / 2), upper.end());
        base0 = upper[upper.size() / 2];
    }
    auto peak_it = std::max_element(smooth.begin(), smooth.end());
    const std::size_t k_peak = static_cast<std::size_t>(peak_it - smooth.begin());
    const double peak = *peak_it - base0;
    if (!(peak > 0.0)) {
        throw NoSignalError("no peak above the baseline");
    }
    double f_half = 0.5 * freqs.back();
    for (std::size_t k = k_peak + 1; k < smooth.size(); ++k) {
        if (smooth[k] - base0 <= 0.5 * peak) {
            double y0 = smooth[k - 1] - base0;
            double y1 = smooth[k] - base0;
            double t = y0 == y1 ? 0.0 : (y0 - 0.5 * peak) / (y0 - y1);
            f_half = freqs[k - 1] + t * (freqs[k] - freqs[k - 1]);
            break;
        }
    }
    const double gamma0 = 2.0 * std::numbers::pi * std::max(f_half, 0.5 * bw);
    const double amp0 = peak * gamma0;

    double ymax = 0.0;
    for (double v : pb.y) {
        ymax = std::max(ymax, std::abs(v));
    }
    // Weighted residuals are already dimensionless.
    pb.weighted = weighted;
    pb.scale = weighted ? 1.0 : ymax;

    const int np = pb.n_params();
    Vec theta(np);
    theta[0] = std::log(amp0);
    theta[1] = std::log(gamma0);
    if (pb.baseline) {
        theta[2] = base0 / pb.scale;
    }

    Vec r;
    Mat jac;
    evaluate(pb, theta, r, &jac);
    double cost = 0.5 * r.squaredNorm();
    double lambda = 1e-3;
    bool last_step_small = false;
    bool no_progress = false;
    const double omega_max = pb.omega.back();

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        if (cost == 0.0 || (last_step_small && stationary(relative_gradient(jac, r), no_progress, options))) {
            return package(pb, theta, jac, r, se, iter - 1, true);
        }
        Mat jtj = jac.transpose() * jac;
        Vec grad = jac.transpose() * r;
        bool accepted = false;
        while (!accepted) {
            Mat damped = jtj;
            for (int j = 0; j < np; ++j) {
                damped(j, j) += lambda * std::max(jtj(j, j), 1e-300);
            }
            Vec step = damped.ldlt().solve(-grad);
            Vec trial = theta + step;
            Vec r_trial;
            evaluate(pb, trial, r_trial, nullptr);
            double trial_cost = 0.5 * r_trial.squaredNorm();
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                last_step_small = step.norm() <= options.step_tolerance * (theta.norm() + options.step_tolerance);
                no_progress = trial_cost == cost;
                theta = trial;
                evaluate(pb, theta, r, &jac);
                cost = 0.5 * r.squaredNorm();
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
            } else {
                lambda *= 10.0;
                if (lambda > 1e16) {
                    // No descent direction left: at a minimum to working precision.
                    bool ok = relative_gradient(jac, r) < std::sqrt(options.gradient_tolerance);
                    LorentzianFit last = package(pb, theta, jac, r, se, iter, ok);
                    if (ok) {
                        return last;
                    }
                    throw FitError("Lorentzian fit stalled", last);
                }
            }
        }
        const double a = std::exp(theta[0]);
        const double g = std::exp(theta[1]);
        if (!(a / g > 1e-12 * ymax)) {
            throw NoSignalError("fitted Lorentzian amplitude vanished");
        }
        if (g > 1e3 * omega_max) {
            throw FitError("Lorentzian width diverged beyond the fit range",
                           package(pb, theta, jac, r, se, iter, false));
        }
    }
    throw FitError("Lorentzian fit did not converge in " + std::to_string(options.max_iterations) + " iterations",
                   package(pb, theta, jac, r, se, options.max_iterations, false));
}

double population_from_amplitude(double amplitude, double delta_v) {
    if (!(delta_v > 0.0)) {
        throw std::invalid_argument("delta_v must be positive");
    }
    if (!(amplitude >= 0.0)) {
        throw std::invalid_argument("amplitude must be non-negative");
    }
    const double x = amplitude / (delta_v * delta_v);
    const double disc = 1.0 - 4.0 * x;
    if (disc < 0.0) {
        throw AmplitudeExceedsMaximumError("amplitude exceeds Delta V^2 / 4; check the sensitivity calibration");
    }
    // Cancellation-free form of (1 - sqrt(disc)) / 2.
    return 2.0 * x / (1.0 + std::sqrt(disc));
}

double inverted_population_from_amplitude(double amplitude, double delta_v) {
    return 1.0 - population_from_amplitude(amplitude, delta_v);
}

double population_sensitivity(double amplitude, double delta_v) {
    const double dv2 = delta_v * delta_v;
    const double disc = 1.0 - 4.0 * amplitude / dv2;
    if (disc <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 1.0 / (dv2 * std::sqrt(disc));
}

double gamma_from_width(double gamma1, double n_th) {
    if (!(gamma1 > 0.0) || !(n_th >= 0.0)) {
        throw std::invalid_argument("gamma_from_width needs gamma1 > 0 and n_th >= 0");
    }
    return gamma1 / (1.0 + 2.0 * n_th);
}

nlohmann::json fit_report(const LorentzianFit &fit, double rho_ee, double gamma_intrinsic) {
    nlohmann::json cov = nlohmann::json::array();
    for (const auto &row : fit.covariance) {
        cov.push_back(nlohmann::json(row));
    }
    return {
        {"A", fit.amplitude},
        {"gamma1_rad_s", fit.gamma1},
        {"gamma1_over_2pi_Hz", fit.gamma1 / (2.0 * std::numbers::pi)},
        {"rho_ee", rho_ee},
        {"gamma_intrinsic", gamma_intrinsic},
        {"t1_ns", 1e9 / fit.gamma1},
        {"chi2", fit.residual_chi2},
        {"converged", fit.converged},
        {"n_iterations", fit.n_iterations},
        {"covariance", cov},
        {"baseline_V2_per_Hz", fit.baseline},
    };
}

}  // namespace tlsnoise
