#include "tlsnoise/measurement_chain.h"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "tlsnoise/fft.h"
#include "tlsnoise/rng.h"

namespace tlsnoise {

double DetectorParams::delta_v() const { return std::hypot(delta_i, delta_q); }

void DetectorParams::validate() const {
    if (!(noise_std_per_sample >= 0.0)) {
        throw std::invalid_argument("noise_std_per_sample must be non-negative");
    }
    const auto &g = gain_profile;
    if (!g.i_gain.empty() && !g.q_gain.empty() && g.i_gain.size() != g.q_gain.size()) {
        throw std::invalid_argument("gain profile channels must have equal length");
    }
}

void QuadratureRecord::validate() const {
    if (i_values.size() != q_values.size()) {
        throw std::invalid_argument("I and Q records differ in length");
    }
    std::size_t next = 0;
    for (const auto &seg : chop_mask) {
        if (seg.first_sample != next) {
            throw std::invalid_argument("chop mask is not contiguous");
        }
        next += seg.n_samples;
    }
    if (next != i_values.size()) {
        throw std::invalid_argument("chop mask does not cover the record");
    }
}

namespace {

void fill_on(const SampledSignal &z, const DetectorParams &det, std::uint64_t seed, double *i_out,
             double *q_out) {
    const double half_i = 0.5 * det.delta_i;
    const double half_q = 0.5 * det.delta_q;
    const double sigma = det.noise_std_per_sample;
    if (sigma == 0.0) {
        for (std::size_t k = 0; k < z.values.size(); ++k) {
            i_out[k] = det.mean_i + half_i * z.values[k];
            q_out[k] = det.mean_q + half_q * z.values[k];
        }
        return;
    }
    Rng rng(seed);
    for (std::size_t k = 0; k < z.values.size(); ++k) {
        i_out[k] = det.mean_i + half_i * z.values[k] + sigma * rng.normal();
        q_out[k] = det.mean_q + half_q * z.values[k] + sigma * rng.normal();
    }
}

void fill_off(std::size_t n, const DetectorParams &det, std::uint64_t seed, double *i_out, double *q_out) {
    const double sigma = det.noise_std_per_sample;
    if (sigma == 0.0) {
        std::fill(i_out, i_out + n, 0.0);
        std::fill(q_out, q_out + n, 0.0);
        return;
    }
    Rng rng(seed);
    for (std::size_t k = 0; k < n; ++k) {
        i_out[k] = sigma * rng.normal();
        q_out[k] = sigma * rng.normal();
    }
}

}  // namespace

QuadratureRecord synthesize(const SampledSignal &z, const DetectorParams &det, std::uint64_t seed) {
    det.validate();
    QuadratureRecord rec;
    rec.sample_rate = z.sample_rate;
    rec.i_values.resize(z.values.size());
    rec.q_values.resize(z.values.size());
    fill_on(z, det, seed, rec.i_values.data(), rec.q_values.data());
    rec.chop_mask.push_back({0, z.values.size(), ChopState::on});
    return rec;
}

QuadratureRecord synthesize_off(std::size_t n_samples, double sample_rate, const DetectorParams &det,
                                std::uint64_t seed) {
    det.validate();
    QuadratureRecord rec;
    rec.sample_rate = sample_rate;
    rec.i_values.resize(n_samples);
    rec.q_values.resize(n_samples);
    fill_off(n_samples, det, seed, rec.i_values.data(), rec.q_values.data());
    rec.chop_mask.push_back({0, n_samples, ChopState::off});
    return rec;
}

QuadratureRecord chop(const TelegraphTrajectory &traj, const DetectorParams &det, double sample_rate,
                      const ChopSchedule &schedule, std::uint64_t seed) {
    det.validate();
    if (!(schedule.period > 0.0)) {
        throw std::invalid_argument("chop period must be positive");
    }
    if (!(schedule.duty > 0.0 && schedule.duty <= 1.0)) {
        throw std::invalid_argument("chop duty must lie in (0, 1]");
    }
    const std::size_t total = sample_count(traj.duration(), sample_rate);
    const auto period = static_cast<std::size_t>(std::llround(schedule.period * sample_rate));
    const auto on_len = static_cast<std::size_t>(std::llround(schedule.duty * schedule.period * sample_rate));
    if (period == 0 || on_len == 0) {
        throw std::invalid_argument("chop windows shorter than one sample");
    }

    QuadratureRecord rec;
    rec.sample_rate = sample_rate;
    rec.chop_period = schedule.period;
    rec.i_values.resize(total);
    rec.q_values.resize(total);

    auto push_segment = [&rec](std::size_t first, std::size_t n, ChopState state) {
        if (n == 0) {
            return;
        }
        if (!rec.chop_mask.empty() && rec.chop_mask.back().state == state) {
            rec.chop_mask.back().n_samples += n;
        } else {
            rec.chop_mask.push_back({first, n, state});
        }
    };

    std::uint64_t window = 0;
    for (std::size_t start = 0; start < total; start += period, ++window) {
        std::size_t n_on = std::min(on_len, total - start);
        SampledSignal z = sample(traj, sample_rate, static_cast<double>(start) / sample_rate, n_on);
        fill_on(z, det, derive_seed(seed, {window, 0}), rec.i_values.data() + start, rec.q_values.data() + start);
        push_segment(start, n_on, ChopState::on);

        std::size_t off_start = start + n_on;
        std::size_t n_off = std::min(period - std::min(period, on_len), total - off_start);
        fill_off(n_off, det, derive_seed(seed, {window, 1}), rec.i_values.data() + off_start,
                 rec.q_values.data() + off_start);
        push_segment(off_start, n_off, ChopState::off);
    }
    return rec;
}

void apply_gain_profile(QuadratureRecord &record, const GainProfile &gain, std::size_t segment_length) {
    if (gain.is_identity()) {
        return;
    }
    RealFft fft(segment_length);
    const std::size_t bins = fft.bins();
    std::vector<std::complex<double>> buffer(bins);
    auto filter = [&](std::vector<double> &channel, const std::vector<double> &g) {
        if (g.empty()) {
            return;
        }
        if (g.size() != bins) {
            throw std::invalid_argument("gain profile length must equal segment_length / 2 + 1");
        }
        for (const auto &seg : record.chop_mask) {
            for (std::size_t off = 0; off + segment_length <= seg.n_samples; off += segment_length) {
                double *block = channel.data() + seg.first_sample + off;
                auto spectrum = fft.forward({block, segment_length});
                for (std::size_t b = 0; b < bins; ++b) {
                    buffer[b] = spectrum[b] * g[b];
                }
                auto filtered = fft.inverse(buffer);
                for (std::size_t k = 0; k < segment_length; ++k) {
                    block[k] = filtered[k] / static_cast<double>(segment_length);
                }
            }
        }
    };
    filter(record.i_values, gain.i_gain);
    filter(record.q_values, gain.q_gain);
}

void write_record(const std::filesystem::path &stem, const QuadratureRecord &record, const DetectorParams &det) {
    record.validate();
    auto bin_path = stem;
    bin_path += ".bin";
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) {
        throw std::runtime_error("cannot open " + bin_path.string() + " for writing");
    }
    for (std::size_t k = 0; k < record.size(); ++k) {
        double pair[2] = {record.i_values[k], record.q_values[k]};
        bin.write(reinterpret_cast<const char *>(pair), sizeof pair);
    }

    nlohmann::json meta;
    meta["format"] = "interleaved_float64_iq";
    meta["n_samples"] = record.size();
    meta["sample_rate_hz"] = record.sample_rate;
    meta["chop_period_s"] = record.chop_period;
    auto &mask = meta["chop_mask"] = nlohmann::json::array();
    for (const auto &seg : record.chop_mask) {
        mask.push_back({{"first_sample", seg.first_sample},
                        {"n_samples", seg.n_samples},
                        {"state", seg.state == ChopState::on ? "on" : "off"}});
    }
    meta["detector"] = {{"mean_i_v", det.mean_i},
                        {"mean_q_v", det.mean_q},
                        {"delta_i_v", det.delta_i},
                        {"delta_q_v", det.delta_q},
                        {"noise_std_per_sample_v", det.noise_std_per_sample}};
    auto json_path = stem;
    json_path += ".json";
    std::ofstream js(json_path);
    if (!js) {
        throw std::runtime_error("cannot open " + json_path.string() + " for writing");
    }
    js << meta.dump(2) << '\n';
}

QuadratureRecord read_record(const std::filesystem::path &stem) {
    auto json_path = stem;
    json_path += ".json";
    std::ifstream js(json_path);
    if (!js) {
        throw std::runtime_error("cannot open " + json_path.string());
    }
    nlohmann::json meta = nlohmann::json::parse(js);
    QuadratureRecord rec;
    const auto n = meta.at("n_samples").get<std::size_t>();
    rec.sample_rate = meta.at("sample_rate_hz").get<double>();
    rec.chop_period = meta.at("chop_period_s").get<double>();
    for (const auto &seg : meta.at("chop_mask")) {
        rec.chop_mask.push_back({seg.at("first_sample").get<std::size_t>(), seg.at("n_samples").get<std::size_t>(),
                                 seg.at("state").get<std::string>() == "on" ? ChopState::on : ChopState::off});
    }

    auto bin_path = stem;
    bin_path += ".bin";
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) {
        throw std::runtime_error("cannot open " + bin_path.string());
    }
    rec.i_values.resize(n);
    rec.q_values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double pair[2];
        if (!bin.read(reinterpret_cast<char *>(pair), sizeof pair)) {
            throw std::runtime_error("truncated record " + bin_path.string());
        }
        rec.i_values[k] = pair[0];
        rec.q_values[k] = pair[1];
    }
    rec.validate();
    return rec;
}

}  // namespace tlsnoise
