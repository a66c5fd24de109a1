#ifndef TLSNOISE_SPECTRAL_ESTIMATOR_H
#define TLSNOISE_SPECTRAL_ESTIMATOR_H

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tlsnoise/fft.h"
#include "tlsnoise/measurement_chain.h"
#include "tlsnoise/thermal_model.h"

namespace tlsnoise {

// Spectral convention used throughout: one-sided power spectral densities in V^2/Hz
// on the grid f_k = k * sample_rate / segment_length, k = 0..segment_length/2, with
// integral over f in [0, inf) equal to the signal variance. For the telegraph signal
// this gives
//
//   S_z(f) = 4 Var(z) Gamma1 / (Gamma1^2 + (2 pi f)^2),   Var(z) = 4 rho (1 - rho),
//
// so in the Lorentzian model A Gamma1 / (Gamma1^2 + omega^2) the amplitude of the
// detector spectrum (Delta V / 2)^2 S_z is A = kAmplitudeConvention * Delta V^2 rho (1 - rho).
inline constexpr double kAmplitudeConvention = 4.0;

enum class SpectrumKind { on, off, subtracted, analytic };

const char *to_string(SpectrumKind kind);
SpectrumKind spectrum_kind_from_string(const std::string &s);

struct PowerSpectrum {
    std::vector<double> frequencies;     // Hz
    std::vector<double> values;          // V^2/Hz
    std::vector<double> standard_error;  // per-bin standard error of the mean; empty if unknown
    std::size_t n_averages = 0;
    SpectrumKind kind = SpectrumKind::on;
    double sample_rate = 0.0;
    std::size_t segment_length = 0;

    std::size_t size() const { return values.size(); }
    double bin_width() const;
};

/// One-sided rectangular-window periodogram of a single segment, I and Q summed.
/// Each channel has its segment mean removed, is scaled by 1 / (sample_rate * N) with
/// non-DC, non-Nyquist bins doubled, and is divided per bin by its gain squared.
/// The result has N / 2 + 1 bins; bin 0 is exactly zero.
std::vector<double> segment_periodogram(RealFft &fft, std::span<const double> i_segment,
                                        std::span<const double> q_segment, double sample_rate,
                                        const GainProfile &gain = {});

/// Per-bin running mean with Neumaier-compensated sums of values and squares.
/// Merging is done in caller-specified order, so the result of a fixed reduction
/// order is bit-reproducible regardless of how the partial sums were scheduled.
class SpectrumAccumulator {
   public:
    SpectrumAccumulator() = default;
    SpectrumAccumulator(double sample_rate, std::size_t segment_length);

    void add(std::span<const double> periodogram);
    void merge(const SpectrumAccumulator &other);

    std::size_t count() const { return count_; }
    double sample_rate() const { return sample_rate_; }
    std::size_t segment_length() const { return segment_length_; }

    PowerSpectrum mean(SpectrumKind kind) const;

   private:
    double sample_rate_ = 0.0;
    std::size_t segment_length_ = 0;
    std::size_t count_ = 0;
    std::vector<double> sum_, sum_c_, sumsq_, sumsq_c_;
};

struct SegmentAverages {
    SpectrumAccumulator on;
    SpectrumAccumulator off;
};

/// Accumulates every complete, non-overlapping segment that lies inside a single chop
/// segment (segments start at the beginning of each chop segment; partial tails are
/// dropped, never mixed across an ON/OFF boundary). At most max_on / max_off segments
/// of each state are taken, in record order.
SegmentAverages accumulate_periodograms(const QuadratureRecord &record, std::size_t segment_length,
                                        const GainProfile &gain = {},
                                        std::size_t max_on = static_cast<std::size_t>(-1),
                                        std::size_t max_off = static_cast<std::size_t>(-1));

struct OnOffSpectra {
    PowerSpectrum on;
    PowerSpectrum off;
};

/// Averaged ON and OFF spectra of a record. segment_length must be a power of two.
/// Throws std::invalid_argument when the record holds no complete segment.
OnOffSpectra periodogram_accumulate(const QuadratureRecord &record, std::size_t segment_length = 1024,
                                    const GainProfile &gain = {});

class GridMismatchError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Bin-wise S_on - S_off. n_averages is the smaller of the two inputs.
PowerSpectrum background_subtract(const PowerSpectrum &on, const PowerSpectrum &off);

/// One-sided telegraph spectrum S_z(f) of the spin variable (dimensionless per Hz).
double spin_spectral_density(const QubitRates &rates, double frequency);

/// Lorentzian amplitude A of the detector spectrum for the given rates and detector.
double lorentzian_amplitude(const QubitRates &rates, const DetectorParams &det);

/// (Delta V / 2)^2 S_z(f) on the given frequencies.
PowerSpectrum analytic_spectrum(const QubitRates &rates, const DetectorParams &det,
                                std::span<const double> frequencies);

/// The frequency grid of a segment_length-point periodogram.
std::vector<double> periodogram_frequencies(double sample_rate, std::size_t segment_length);

using SpectrumHeader = std::vector<std::pair<std::string, double>>;

/// CSV with '#'-prefixed header lines (kind, n_averages, sample_rate, segment_length,
/// then `params`) followed by `frequency_Hz,psd_V2_per_Hz` rows at 17 significant digits.
void write_spectrum_csv(const std::filesystem::path &path, const PowerSpectrum &spectrum,
                        const SpectrumHeader &params = {});

struct SpectrumFile {
    PowerSpectrum spectrum;
    SpectrumHeader params;
};
SpectrumFile read_spectrum_csv(const std::filesystem::path &path);

}  // namespace tlsnoise

#endif
