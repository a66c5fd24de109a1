// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls into the library under test.
#ifndef TLSNOISE_TESTS_ORACLES_H
#define TLSNOISE_TESTS_ORACLES_H

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

namespace oracle {

inline constexpr double kHOverK = 6.62607015e-34 / 1.380649e-23;

inline double occupation(double f, double T) {
    if (T == 0.0) return 0.0;
    long double x = static_cast<long double>(kHOverK) * f / T;
    return static_cast<double>(1.0L / (std::exp(x) - 1.0L));
}

// One-sided spectrum of a symmetric telegraph signal: the two-sided transform of
// Var * exp(-G|tau|) is 2 Var G / (G^2 + w^2); the one-sided density doubles it.
inline double telegraph_psd(double gamma, double n_th, double f) {
    double g1 = gamma * (1.0 + 2.0 * n_th);
    double rho = n_th / (1.0 + 2.0 * n_th);
    double var = 4.0 * rho * (1.0 - rho);
    double w = 2.0 * std::numbers::pi * f;
    return 4.0 * var * g1 / (g1 * g1 + w * w);
}

// Integral of fn over [0, inf) with GSL's adaptive semi-infinite rule. `scale` is the
// width of the integrand; the rule is applied to fn(scale * u) so it sees an O(1) feature.
inline double integrate_semi_infinite(const std::function<double(double)> &fn, double scale = 1.0,
                                      double rel_tol = 1e-10) {
    const std::function<double(double)> scaled = [&](double u) { return scale * fn(scale * u); };
    gsl_set_error_handler_off();
    gsl_integration_workspace *ws = gsl_integration_workspace_alloc(2000);
    gsl_function g;
    g.function = [](double x, void *p) { return (*static_cast<const std::function<double(double)> *>(p))(x); };
    g.params = const_cast<std::function<double(double)> *>(&scaled);
    double result = 0.0, err = 0.0;
    int status = gsl_integration_qagiu(&g, 0.0, 0.0, rel_tol, 2000, ws, &result, &err);
    gsl_integration_workspace_free(ws);
    if (status != GSL_SUCCESS) throw std::runtime_error("qagiu failed");
    return result;
}

// Direct O(N^2) DFT periodogram, one-sided, mean removed.
inline std::vector<double> naive_periodogram(const std::vector<double> &x, double fs) {
    std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<long double> acc = 0.0L;
        for (std::size_t j = 0; j < n; ++j) {
            long double ph = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(k * j % n) / n;
            acc += (static_cast<long double>(x[j]) - mean) * std::complex<long double>(std::cos(ph), std::sin(ph));
        }
        double p = static_cast<double>(std::norm(acc)) / (fs * static_cast<double>(n));
        out[k] = (k == 0 || 2 * k == n) ? p : 2.0 * p;
    }
    return out;
}

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
};

inline Line least_squares_line(const std::vector<double> &x, const std::vector<double> &y) {
    double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return {sxy / sxx, my - sxy / sxx * mx};
}

// One-sample Kolmogorov-Smirnov statistic against Exponential(rate).
inline double ks_statistic_exponential(std::vector<double> samples, double rate) {
    std::sort(samples.begin(), samples.end());
    double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double cdf = -std::expm1(-rate * samples[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    return d;
}

// Asymptotic Kolmogorov tail probability with the usual finite-n correction.
inline double ks_p_value(double d, std::size_t n) {
    double sn = std::sqrt(static_cast<double>(n));
    double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

inline double mean(const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double> &v) {
    double m = mean(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace oracle

#endif
