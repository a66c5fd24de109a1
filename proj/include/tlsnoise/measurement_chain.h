#ifndef TLSNOISE_MEASUREMENT_CHAIN_H
#define TLSNOISE_MEASUREMENT_CHAIN_H

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tlsnoise/telegraph.h"

namespace tlsnoise {

/// Per-bin multiplicative gains of the I and Q channels over the one-sided grid of a
/// segment (segment_length / 2 + 1 entries each). Empty vectors mean unit gain.
struct GainProfile {
    std::vector<double> i_gain;
    std::vector<double> q_gain;

    bool is_identity() const { return i_gain.empty() && q_gain.empty(); }
};

struct DetectorParams {
    double mean_i = 0.0;   // V, quadrature level for an unpolarized qubit
    double mean_q = 0.0;   // V
    double delta_i = 0.0;  // V, full swing of I between the qubit states
    double delta_q = 0.0;  // V
    double noise_std_per_sample = 0.0;  // V, per quadrature, white over the sampled band
    GainProfile gain_profile;

    /// (Delta V / 2)^2 = (Delta I / 2)^2 + (Delta Q / 2)^2.
    double sensitivity() const { return 0.25 * (delta_i * delta_i + delta_q * delta_q); }
    /// Delta V = sqrt(Delta I^2 + Delta Q^2).
    double delta_v() const;

    void validate() const;
};

enum class ChopState { on, off };

struct ChopSegment {
    std::size_t first_sample = 0;
    std::size_t n_samples = 0;
    ChopState state = ChopState::on;
};

struct ChopSchedule {
    double period = 2.5e-3;  // s
    double duty = 0.5;       // ON fraction of each period, in (0, 1]
};

/// Sampled homodyne quadratures. chop_mask covers [0, size()) with contiguous,
/// non-overlapping segments in increasing order.
struct QuadratureRecord {
    std::vector<double> i_values;
    std::vector<double> q_values;
    double sample_rate = 0.0;
    std::vector<ChopSegment> chop_mask;
    double chop_period = 0.0;  // 0 when the record is not chopped

    std::size_t size() const { return i_values.size(); }
    /// Throws std::invalid_argument if lengths differ or the mask does not tile the record.
    void validate() const;
};

/// I_k = mean_I + (Delta I / 2) z_k + xi_I,k and likewise for Q, with independent
/// white Gaussian xi of standard deviation noise_std_per_sample. The result is one ON
/// segment.
QuadratureRecord synthesize(const SampledSignal &z, const DetectorParams &det, std::uint64_t seed);

/// Readout tone off: zero-mean amplifier noise only, same noise law as synthesize().
QuadratureRecord synthesize_off(std::size_t n_samples, double sample_rate, const DetectorParams &det,
                                std::uint64_t seed);

/// Interleaves ON and OFF windows over the whole trajectory. The trajectory is sampled
/// only inside ON windows; the qubit keeps evolving through OFF windows because the
/// trajectory is simulated independently of the schedule. Window boundaries are placed
/// on the sample grid: round(period * sample_rate) samples per period, of which
/// round(duty * period * sample_rate) are ON. duty == 1 gives a single ON segment.
QuadratureRecord chop(const TelegraphTrajectory &traj, const DetectorParams &det, double sample_rate,
                      const ChopSchedule &schedule, std::uint64_t seed);

/// Applies a per-bin channel gain by circular filtering of each whole segment_length
/// block within every chop segment (blocks aligned to the segment start, as the
/// spectral estimator reads them). Trailing partial blocks are left untouched.
void apply_gain_profile(QuadratureRecord &record, const GainProfile &gain, std::size_t segment_length);

/// Interleaved native float64 (I, Q) pairs at `<stem>.bin` plus JSON metadata at
/// `<stem>.json` (sample rate, chop schedule, detector parameters).
void write_record(const std::filesystem::path &stem, const QuadratureRecord &record, const DetectorParams &det);
QuadratureRecord read_record(const std::filesystem::path &stem);

}  // namespace tlsnoise

#endif
