#include "tlsnoise/calibration.h"

#include <algorithm>
#include <cmath>
#include <span>

#include "tlsnoise/rng.h"

namespace tlsnoise {

namespace {

struct Moments {
    double variance = 0.0;
    double variance_of_variance = 0.0;  // sampling variance of the variance estimate
};

// Two-pass centered moments with compensated sums.
Moments centered_moments(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double sum = 0.0, comp = 0.0;
    for (double v : x) {
        double y = v - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    const double mean = sum / n;
    double m2 = 0.0, c2 = 0.0, m4 = 0.0, c4 = 0.0;
    for (double v : x) {
        double d = v - mean;
        double d2 = d * d;
        double y = d2 - c2;
        double t = m2 + y;
        c2 = (t - m2) - y;
        m2 = t;
        y = d2 * d2 - c4;
        t = m4 + y;
        c4 = (t - m4) - y;
        m4 = t;
    }
    Moments m;
    m.variance = m2 / n;
    m.variance_of_variance = std::max(m4 / n - m.variance * m.variance, 0.0) / n;
    return m;
}

}  // namespace

QuadratureRecord simulate_saturated_records(const DetectorParams &det, std::size_t n_samples, std::uint64_t seed) {
    SampledSignal z;
    z.sample_rate = 1.0;
    z.values.resize(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
        z.values[k] = k < n_samples / 2 ? 1.0 : -1.0;
    }
    Rng rng(derive_seed(seed, {0}));
    // Fisher-Yates with a 53-bit uniform index draw.
    for (std::size_t k = n_samples; k > 1; --k) {
        auto j = static_cast<std::size_t>(rng.uniform_open() * static_cast<double>(k));
        std::swap(z.values[k - 1], z.values[std::min(j, k - 1)]);
    }
    return synthesize(z, det, derive_seed(seed, {1}));
}

CalibrationResult estimate_delta_v(const QuadratureRecord &saturated, const QuadratureRecord &off) {
    saturated.validate();
    off.validate();
    if (saturated.size() < 2 || off.size() < 2) {
        throw std::invalid_argument("calibration records need at least two samples");
    }
    Moments si = centered_moments(saturated.i_values);
    Moments sq = centered_moments(saturated.q_values);
    Moments oi = centered_moments(off.i_values);
    Moments oq = centered_moments(off.q_values);

    CalibrationResult res;
    res.n_samples = saturated.size();
    const double diff = (si.variance + sq.variance) - (oi.variance + oq.variance);
    const double sigma = std::sqrt(si.variance_of_variance + sq.variance_of_variance + oi.variance_of_variance +
                                   oq.variance_of_variance);
    res.variance_difference = diff;
    if (diff < 0.0) {
        if (diff < -3.0 * sigma) {
            throw CalibrationError("saturated variance is below the OFF noise variance; noise laws differ");
        }
        res.delta_v_half = 0.0;
        res.statistical_uncertainty = 0.5 * std::sqrt(std::max(diff + sigma, 0.0));
        return res;
    }
    res.delta_v_half = std::sqrt(diff);
    // Half-width of the one-sigma interval mapped through the square root; reduces to
    // sigma / (2 sqrt(diff)) when diff >> sigma.
    res.statistical_uncertainty = 0.5 * (std::sqrt(diff + sigma) - std::sqrt(std::max(diff - sigma, 0.0)));
    return res;
}

nlohmann::json calibration_report(const CalibrationResult &result) {
    return {{"delta_v_half_V", result.delta_v_half},
            {"statistical_uncertainty_V", result.statistical_uncertainty},
            {"n_samples", result.n_samples},
            {"variance_difference_V2", result.variance_difference}};
}

}  // namespace tlsnoise
