#include "tlsnoise/spectral_estimator.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tlsnoise {

namespace {

void neumaier_add(double &sum, double &comp, double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
        comp += (sum - t) + x;
    } else {
        comp += (x - t) + sum;
    }
    sum = t;
}

double parse_double(const std::string &text) {
    char *end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str()) {
        throw std::runtime_error("not a number: '" + text + "'");
    }
    return v;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Adds the one-sided periodogram of one mean-removed channel into out.
void add_channel(RealFft &fft, std::span<const double> x, double sample_rate, const std::vector<double> &gain,
                 std::vector<double> &scratch, std::vector<double> &out) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    scratch.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        scratch[k] = x[k] - mean;
    }
    auto spectrum = fft.forward(scratch);
    const double scale = 1.0 / (sample_rate * static_cast<double>(n));
    const std::size_t bins = fft.bins();
    for (std::size_t b = 1; b < bins; ++b) {
        double p = std::norm(spectrum[b]) * scale;
        if (b != n / 2) {
            p *= 2.0;
        }
        if (!gain.empty()) {
            p /= gain[b] * gain[b];
        }
        out[b] += p;
    }
}

}  // namespace

const char *to_string(SpectrumKind kind) {
    switch (kind) {
        case SpectrumKind::on:
            return "ON";
        case SpectrumKind::off:
            return "OFF";
        case SpectrumKind::subtracted:
            return "SUBTRACTED";
        case SpectrumKind::analytic:
            return "ANALYTIC";
    }
    return "?";
}

SpectrumKind spectrum_kind_from_string(const std::string &s) {
    if (s == "ON") return SpectrumKind::on;
    if (s == "OFF") return SpectrumKind::off;
    if (s == "SUBTRACTED") return SpectrumKind::subtracted;
    if (s == "ANALYTIC") return SpectrumKind::analytic;
    throw std::invalid_argument("unknown spectrum kind '" + s + "'");
}

double PowerSpectrum::bin_width() const {
    if (segment_length > 0 && sample_rate > 0.0) {
        return sample_rate / static_cast<double>(segment_length);
    }
    if (frequencies.size() >= 2) {
        return frequencies[1] - frequencies[0];
    }
    return 0.0;
}

std::vector<double> periodogram_frequencies(double sample_rate, std::size_t segment_length) {
    std::vector<double> f(segment_length / 2 + 1);
    for (std::size_t k = 0; k < f.size(); ++k) {
        f[k] = static_cast<double>(k) * sample_rate / static_cast<double>(segment_length);
    }
    return f;
}

std::vector<double> segment_periodogram(RealFft &fft, std::span<const double> i_segment,
                                        std::span<const double> q_segment, double sample_rate,
                                        const GainProfile &gain) {
    if (i_segment.size() != fft.length() || q_segment.size() != fft.length()) {
        throw std::invalid_argument("segment length does not match the FFT length");
    }
    if ((!gain.i_gain.empty() && gain.i_gain.size() != fft.bins()) ||
        (!gain.q_gain.empty() && gain.q_gain.size() != fft.bins())) {
        throw std::invalid_argument("gain profile length must equal segment_length / 2 + 1");
    }
    std::vector<double> out(fft.bins(), 0.0);
    std::vector<double> scratch;
    add_channel(fft, i_segment, sample_rate, gain.i_gain, scratch, out);
    add_channel(fft, q_segment, sample_rate, gain.q_gain, scratch, out);
    return out;
}

SpectrumAccumulator::SpectrumAccumulator(double sample_rate, std::size_t segment_length)
    : sample_rate_(sample_rate),
      segment_length_(segment_length),
      sum_(segment_length / 2 + 1, 0.0),
      sum_c_(segment_length / 2 + 1, 0.0),
      sumsq_(segment_length / 2 + 1, 0.0),
      sumsq_c_(segment_length / 2 + 1, 0.0) {}

void SpectrumAccumulator::add(std::span<const double> periodogram) {
    if (periodogram.size() != sum_.size()) {
        throw std::invalid_argument("periodogram length does not match the accumulator");
    }
    for (std::size_t b = 0; b < sum_.size(); ++b) {
        neumaier_add(sum_[b], sum_c_[b], periodogram[b]);
        neumaier_add(sumsq_[b], sumsq_c_[b], periodogram[b] * periodogram[b]);
    }
    ++count_;
}

void SpectrumAccumulator::merge(const SpectrumAccumulator &other) {
    if (other.sum_.empty()) {
        return;
    }
    if (sum_.empty()) {
        *this = other;
        return;
    }
    if (other.sum_.size() != sum_.size() || other.sample_rate_ != sample_rate_) {
        throw std::invalid_argument("cannot merge accumulators on different grids");
    }
    if (other.count_ == 0) {
        return;
    }
    for (std::size_t b = 0; b < sum_.size(); ++b) {
        neumaier_add(sum_[b], sum_c_[b], other.sum_[b]);
        neumaier_add(sum_[b], sum_c_[b], other.sum_c_[b]);
        neumaier_add(sumsq_[b], sumsq_c_[b], other.sumsq_[b]);
        neumaier_add(sumsq_[b], sumsq_c_[b], other.sumsq_c_[b]);
    }
    count_ += other.count_;
}

PowerSpectrum SpectrumAccumulator::mean(SpectrumKind kind) const {
    PowerSpectrum s;
    s.kind = kind;
    s.sample_rate = sample_rate_;
    s.segment_length = segment_length_;
    s.n_averages = count_;
    s.frequencies = periodogram_frequencies(sample_rate_, segment_length_);
    s.values.assign(s.frequencies.size(), 0.0);
    s.standard_error.assign(s.frequencies.size(), 0.0);
    if (count_ == 0) {
        return s;
    }
    const double n = static_cast<double>(count_);
    for (std::size_t b = 0; b < s.values.size(); ++b) {
        double m = (sum_[b] + sum_c_[b]) / n;
        s.values[b] = m;
        if (count_ > 1) {
            double var = ((sumsq_[b] + sumsq_c_[b]) / n - m * m) * n / (n - 1.0);
            s.standard_error[b] = std::sqrt(std::max(var, 0.0) / n);
        }
    }
    return s;
}

SegmentAverages accumulate_periodograms(const QuadratureRecord &record, std::size_t segment_length,
                                        const GainProfile &gain, std::size_t max_on, std::size_t max_off) {
    record.validate();
    if (segment_length < 2 || !std::has_single_bit(segment_length)) {
        throw std::invalid_argument("segment_length must be a power of two");
    }
    SegmentAverages acc{SpectrumAccumulator(record.sample_rate, segment_length),
                        SpectrumAccumulator(record.sample_rate, segment_length)};
    RealFft fft(segment_length);
    const std::span<const double> i_all(record.i_values);
    const std::span<const double> q_all(record.q_values);
    for (const auto &seg : record.chop_mask) {
        auto &target = seg.state == ChopState::on ? acc.on : acc.off;
        const std::size_t limit = seg.state == ChopState::on ? max_on : max_off;
        for (std::size_t off = 0; off + segment_length <= seg.n_samples && target.count() < limit;
             off += segment_length) {
            std::size_t first = seg.first_sample + off;
            target.add(segment_periodogram(fft, i_all.subspan(first, segment_length),
                                           q_all.subspan(first, segment_length), record.sample_rate, gain));
        }
    }
    return acc;
}

OnOffSpectra periodogram_accumulate(const QuadratureRecord &record, std::size_t segment_length,
                                    const GainProfile &gain) {
    SegmentAverages acc = accumulate_periodograms(record, segment_length, gain);
    if (acc.on.count() + acc.off.count() == 0) {
        throw std::invalid_argument("record contains no complete segment");
    }
    return {acc.on.mean(SpectrumKind::on), acc.off.mean(SpectrumKind::off)};
}

PowerSpectrum background_subtract(const PowerSpectrum &on, const PowerSpectrum &off) {
    if (on.frequencies != off.frequencies) {
        throw GridMismatchError("ON and OFF spectra are on different frequency grids");
    }
    PowerSpectrum s;
    s.kind = SpectrumKind::subtracted;
    s.frequencies = on.frequencies;
    s.sample_rate = on.sample_rate;
    s.segment_length = on.segment_length;
    s.n_averages = std::min(on.n_averages, off.n_averages);
    s.values.resize(on.size());
    for (std::size_t b = 0; b < on.size(); ++b) {
        s.values[b] = on.values[b] - off.values[b];
    }
    if (on.standard_error.size() == on.size() && off.standard_error.size() == off.size()) {
        s.standard_error.resize(on.size());
        for (std::size_t b = 0; b < on.size(); ++b) {
            s.standard_error[b] = std::hypot(on.standard_error[b], off.standard_error[b]);
        }
    }
    return s;
}

double spin_spectral_density(const QubitRates &rates, double frequency) {
    const double rho = steady_state(rates).rho_ee;
    const double var_z = 4.0 * rho * (1.0 - rho);
    const double g1 = rates.fluctuation_rate();
    const double omega = 2.0 * std::numbers::pi * frequency;
    return 4.0 * var_z * g1 / (g1 * g1 + omega * omega);
}

double lorentzian_amplitude(const QubitRates &rates, const DetectorParams &det) {
    const double rho = steady_state(rates).rho_ee;
    const double dv = det.delta_v();
    return kAmplitudeConvention * dv * dv * rho * (1.0 - rho);
}

PowerSpectrum analytic_spectrum(const QubitRates &rates, const DetectorParams &det,
                                std::span<const double> frequencies) {
    rates.validate();
    PowerSpectrum s;
    s.kind = SpectrumKind::analytic;
    s.frequencies.assign(frequencies.begin(), frequencies.end());
    s.values.resize(frequencies.size());
    const double sens = det.sensitivity();
    for (std::size_t b = 0; b < frequencies.size(); ++b) {
        s.values[b] = sens * spin_spectral_density(rates, frequencies[b]);
    }
    if (frequencies.size() >= 2) {
        double width = frequencies[1] - frequencies[0];
        if (width > 0.0 && frequencies[0] == 0.0) {
            s.segment_length = 2 * (frequencies.size() - 1);
            s.sample_rate = width * static_cast<double>(s.segment_length);
        }
    }
    return s;
}

void write_spectrum_csv(const std::filesystem::path &path, const PowerSpectrum &spectrum,
                        const SpectrumHeader &params) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "# kind=" << to_string(spectrum.kind) << '\n';
    out << "# n_averages=" << spectrum.n_averages << '\n';
    out << "# sample_rate=" << format_double(spectrum.sample_rate) << '\n';
    out << "# segment_length=" << spectrum.segment_length << '\n';
    for (const auto &[key, value] : params) {
        out << "# " << key << '=' << format_double(value) << '\n';
    }
    out << "frequency_Hz,psd_V2_per_Hz\n";
    for (std::size_t b = 0; b < spectrum.size(); ++b) {
        out << format_double(spectrum.frequencies[b]) << ',' << format_double(spectrum.values[b]) << '\n';
    }
}

SpectrumFile read_spectrum_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    SpectrumFile file;
    auto &s = file.spectrum;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line.rfind("# ", 0) == 0) {
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                continue;
            }
            std::string key = line.substr(2, eq - 2);
            std::string value = line.substr(eq + 1);
            if (key == "kind") {
                s.kind = spectrum_kind_from_string(value);
            } else if (key == "n_averages") {
                s.n_averages = std::stoull(value);
            } else if (key == "sample_rate") {
                s.sample_rate = parse_double(value);
            } else if (key == "segment_length") {
                s.segment_length = std::stoull(value);
            } else {
                file.params.emplace_back(key, parse_double(value));
            }
            continue;
        }
        if (!header_seen) {
            if (line != "frequency_Hz,psd_V2_per_Hz") {
                throw std::runtime_error("unexpected spectrum CSV header '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error("malformed spectrum row '" + line + "'");
        }
        s.frequencies.push_back(parse_double(line.substr(0, comma)));
        s.values.push_back(parse_double(line.substr(comma + 1)));
    }
    return file;
}

}  // namespace tlsnoise
