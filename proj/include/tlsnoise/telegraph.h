#ifndef TLSNOISE_TELEGRAPH_H
#define TLSNOISE_TELEGRAPH_H

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tlsnoise/thermal_model.h"

namespace tlsnoise {

enum class QubitState { ground, excited };

inline QubitState toggled(QubitState s) {
    return s == QubitState::ground ? QubitState::excited : QubitState::ground;
}
inline double spin_value(QubitState s) { return s == QubitState::excited ? 1.0 : -1.0; }

/// Initial-state policy. An empty `fixed` draws the initial state from the
/// steady-state Bernoulli(rho_ee) law so that finite records are stationary.
struct InitialState {
    std::optional<QubitState> fixed;

    static InitialState steady_state_draw() { return {}; }
    static InitialState at(QubitState s) { return {s}; }
};

/// Event-time representation of z(t). Each entry of switch_times toggles the state.
class TelegraphTrajectory {
   public:
    TelegraphTrajectory(QubitState initial_state, std::vector<double> switch_times, double duration,
                        QubitRates rates, std::uint64_t seed);

    QubitState initial_state() const { return initial_state_; }
    const std::vector<double> &switch_times() const { return switch_times_; }
    double duration() const { return duration_; }
    const QubitRates &rates() const { return rates_; }
    std::uint64_t seed() const { return seed_; }

    /// Left-continuous: at an exact switch instant the pre-switch state is reported.
    QubitState state_at(double t) const;

    /// Total time spent in the excited state over [0, duration).
    double excited_time() const;

   private:
    QubitState initial_state_;
    std::vector<double> switch_times_;
    double duration_;
    QubitRates rates_;
    std::uint64_t seed_;
};

struct SampledSignal {
    std::vector<double> values;  // z samples, each -1 or +1
    double sample_rate = 0.0;
    double start_time = 0.0;
};

/// Exact event-driven simulation: dwell times are inverse-CDF exponential draws at
/// the exit rate of the current state (Gamma_down when excited, Gamma_up when ground).
/// A zero exit rate ends the switching.
TelegraphTrajectory simulate_trajectory(const QubitRates &rates, double duration, std::uint64_t seed,
                                        InitialState init = InitialState::steady_state_draw());

/// Number of grid points floor(duration * sample_rate), tolerant to representation error
/// of products such as 1.25e-3 * 1e8.
std::size_t sample_count(double duration, double sample_rate);

/// Samples the trajectory at start_time + k / sample_rate for k < n_samples.
SampledSignal sample(const TelegraphTrajectory &traj, double sample_rate, double start_time,
                     std::size_t n_samples);

/// Samples the whole trajectory on [0, duration).
SampledSignal sample(const TelegraphTrajectory &traj, double sample_rate);

/// Biased estimator (normalized by N) of the connected correlator
/// <dz(t + k) dz(t)> for k = 0..max_lag, with dz = z - sample mean.
std::vector<double> empirical_autocorrelation(const SampledSignal &signal, std::size_t max_lag);

/// Completed dwell durations in `state`. A dwell that starts at t = 0 counts (the
/// residual of an exponential dwell is exponential); the dwell truncated by the end
/// of the record does not.
std::vector<double> dwell_times(const TelegraphTrajectory &traj, QubitState state);

/// Debug dump: '#'-prefixed header with rates, seed, duration and initial state,
/// then one switch time per line at 17 significant digits.
void write_trajectory_csv(const std::filesystem::path &path, const TelegraphTrajectory &traj);
TelegraphTrajectory read_trajectory_csv(const std::filesystem::path &path);

}  // namespace tlsnoise

#endif
