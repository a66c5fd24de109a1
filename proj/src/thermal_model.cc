#include "tlsnoise/thermal_model.h"

#include <cmath>
#include <limits>
#include <string>

namespace tlsnoise {

void ThermalEnvironment::validate() const {
    if (!(qubit_frequency > 0.0)) {
        throw std::invalid_argument("qubit_frequency must be positive");
    }
    if (!(base_temperature >= 0.0)) {
        throw std::invalid_argument("base_temperature must be non-negative");
    }
    for (const auto &stage : radiation_stages) {
        if (!(stage.source_temperature >= 0.0)) {
            throw std::invalid_argument("radiation stage temperature must be non-negative");
        }
        if (!(stage.attenuation_db >= 0.0)) {
            throw std::invalid_argument("radiation stage attenuation must be non-negative");
        }
    }
}

void QubitRates::validate() const {
    if (!(gamma_intrinsic > 0.0)) {
        throw std::invalid_argument("gamma_intrinsic must be positive");
    }
    if (!(n_th >= 0.0)) {
        throw std::invalid_argument("n_th must be non-negative");
    }
}

double bose_einstein_occupation(double frequency, double temperature) {
    if (temperature == 0.0) {
        return 0.0;
    }
    double x = kPlanck * frequency / (kBoltzmann * temperature);
    // expm1 keeps full precision in the classical limit x << 1.
    return 1.0 / std::expm1(x);
}

double effective_photon_number(const ThermalEnvironment &env) {
    double n = bose_einstein_occupation(env.qubit_frequency, env.base_temperature);
    for (const auto &stage : env.radiation_stages) {
        double attenuation = std::pow(10.0, stage.attenuation_db / 10.0);
        n += bose_einstein_occupation(env.qubit_frequency, stage.source_temperature) / attenuation;
    }
    return n;
}

SteadyState steady_state(const QubitRates &rates) {
    if (std::isinf(rates.n_th)) {
        return {0.5, 0.0};
    }
    SteadyState s;
    s.rho_ee = rates.n_th / (1.0 + 2.0 * rates.n_th);
    s.z_mean = -1.0 / (1.0 + 2.0 * rates.n_th);
    return s;
}

double occupation_from_population(double rho_ee) {
    if (rho_ee >= 0.5) {
        throw PopulationInversionError("population " + std::to_string(rho_ee) +
                                       " >= 1/2 has no thermal occupation");
    }
    return rho_ee / (1.0 - 2.0 * rho_ee);
}

double effective_temperature(double rho_ee, double frequency) {
    if (!(rho_ee >= 0.0)) {
        throw std::invalid_argument("population must be non-negative");
    }
    if (!(frequency > 0.0)) {
        throw std::invalid_argument("frequency must be positive");
    }
    if (rho_ee >= 0.5) {
        throw PopulationInversionError("population " + std::to_string(rho_ee) +
                                       " >= 1/2 admits no thermal temperature");
    }
    if (rho_ee == 0.0) {
        return 0.0;
    }
    // exp(x) = 1 + 1/n = (1 - rho) / rho.
    double x = std::log1p((1.0 - 2.0 * rho_ee) / rho_ee);
    return kPlanck * frequency / (kBoltzmann * x);
}

}  // namespace tlsnoise
