#ifndef TLSNOISE_CALIBRATION_H
#define TLSNOISE_CALIBRATION_H

#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include <json.hpp>

#include "tlsnoise/measurement_chain.h"

namespace tlsnoise {

struct CalibrationResult {
    double delta_v_half = 0.0;             // V, estimate of Delta V / 2
    double statistical_uncertainty = 0.0;  // V, one standard deviation
    std::size_t n_samples = 0;
    double variance_difference = 0.0;  // V^2, the raw (Delta V / 2)^2 estimate before clipping at zero
};

class CalibrationError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Record of a saturated qubit: rho_ee = 1/2 and a correlation time far below the
/// sample spacing. z takes each of -1 and +1 on exactly half of the samples (one extra
/// -1 for odd counts) in a uniformly random order, then goes through synthesize().
QuadratureRecord simulate_saturated_records(const DetectorParams &det, std::size_t n_samples, std::uint64_t seed);

/// (Delta V / 2)^2 = [Var(I_sat) + Var(Q_sat)] - [Var(I_off) + Var(Q_off)], each
/// variance centered on its own record mean. A difference below zero returns 0 unless
/// it is more than 3 standard deviations negative, which throws CalibrationError.
CalibrationResult estimate_delta_v(const QuadratureRecord &saturated, const QuadratureRecord &off);

nlohmann::json calibration_report(const CalibrationResult &result);

}  // namespace tlsnoise

#endif
