#ifndef TLSNOISE_THERMAL_MODEL_H
#define TLSNOISE_THERMAL_MODEL_H

#include <stdexcept>
#include <vector>

namespace tlsnoise {

/// Exact SI values; only the ratio h/k_B enters the occupation formula.
inline constexpr double kPlanck = 6.62607015e-34;
inline constexpr double kBoltzmann = 1.380649e-23;

/// A warmer stage whose thermal radiation reaches the sample through an attenuator.
struct RadiationStage {
    double source_temperature = 0.0;  // K
    double attenuation_db = 0.0;      // power attenuation between the stage and the sample
};

struct ThermalEnvironment {
    double qubit_frequency = 5.304e9;  // Hz, transition frequency of the two-level system
    double base_temperature = 0.0;     // K, coldest cryostat stage
    std::vector<RadiationStage> radiation_stages;

    /// Throws std::invalid_argument on a non-positive frequency, negative temperature
    /// or negative attenuation.
    void validate() const;
};

/// Relaxation rate and bath occupation of the two-level system.
///
/// Excitation and relaxation follow the detailed-balance rates of a bosonic bath:
/// Gamma_up = Gamma * n_th, Gamma_down = Gamma * (1 + n_th). The telegraph process
/// then decorrelates at Gamma_up + Gamma_down = Gamma * (1 + 2 n_th).
struct QubitRates {
    double gamma_intrinsic = 0.0;  // 1/s, zero-temperature energy relaxation rate
    double n_th = 0.0;             // mean bath occupation

    double up_rate() const { return gamma_intrinsic * n_th; }
    double down_rate() const { return gamma_intrinsic * (1.0 + n_th); }
    double fluctuation_rate() const { return gamma_intrinsic * (1.0 + 2.0 * n_th); }

    void validate() const;
};

struct SteadyState {
    double rho_ee = 0.0;   // excited-state probability
    double z_mean = -1.0;  // 2 rho_ee - 1
};

class PopulationInversionError : public std::domain_error {
   public:
    using std::domain_error::domain_error;
};

/// Bose-Einstein occupation 1 / (exp(h f / k_B T) - 1). Exactly zero at T = 0.
double bose_einstein_occupation(double frequency, double temperature);

/// Base-stage occupation plus each radiation stage's occupation divided by its
/// linear attenuation 10^(dB/10). All occupations are evaluated at the qubit frequency.
double effective_photon_number(const ThermalEnvironment &env);

SteadyState steady_state(const QubitRates &rates);

/// Temperature whose equilibrium population equals rho_ee. Returns 0 for rho_ee == 0.
/// Throws PopulationInversionError for rho_ee >= 1/2 and std::invalid_argument for
/// rho_ee < 0.
double effective_temperature(double rho_ee, double frequency);

/// Inverse of steady_state: n_th = rho / (1 - 2 rho).
double occupation_from_population(double rho_ee);

}  // namespace tlsnoise

#endif
