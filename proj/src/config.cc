#include "tlsnoise/config.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <stdexcept>

namespace tlsnoise {

using nlohmann::json;

ThermalEnvironment ExperimentConfig::default_environment() {
    ThermalEnvironment env;
    env.qubit_frequency = 5.304e9;
    env.base_temperature = 0.020;
    // 30 dB attenuator on the still plate, 22 dB between it and the sample.
    env.radiation_stages.push_back({0.600, 22.0});
    return env;
}

DetectorParams ExperimentConfig::default_detector() {
    DetectorParams det;
    det.mean_i = 12e-3;
    det.mean_q = 4e-3;
    // Delta V / 2 = 2.76 mV split evenly between the quadratures.
    det.delta_i = 2.0 * 2.76e-3 / std::sqrt(2.0);
    det.delta_q = det.delta_i;
    det.noise_std_per_sample = 2.76e-3;
    return det;
}

std::vector<double> ExperimentConfig::default_temperatures() {
    std::vector<double> t;
    for (int k = 1; k <= 10; ++k) {
        t.push_back(0.020 * k);
    }
    return t;
}

std::map<std::string, double> ExperimentConfig::default_metadata() {
    return {
        {"cavity_frequency_hz", 5.796e9},
        {"coupling_g_over_2pi_hz", 45e6},
        {"dispersive_shift_chi_over_2pi_hz", 1.75e6},
        {"resonator_bandwidth_hz", 30.3e6},
        {"mean_intracavity_photons", 2.5},
        {"critical_photon_number", 30.0},
        {"amplifier_gain_db", 37.0},
        {"amplifier_noise_temperature_k", 2.6},
    };
}

void ExperimentConfig::validate() const {
    environment.validate();
    detector.validate();
    QubitRates{gamma_intrinsic, 0.0}.validate();
    if (!(acquisition.sample_rate > 0.0)) {
        throw std::invalid_argument("sample_rate must be positive");
    }
    if (acquisition.segment_length < 16 || !std::has_single_bit(acquisition.segment_length)) {
        throw std::invalid_argument("segment_length must be a power of two >= 16");
    }
    if (!(acquisition.chop.period > 0.0) || !(acquisition.chop.duty > 0.0 && acquisition.chop.duty < 1.0)) {
        throw std::invalid_argument("chop period must be positive and duty in (0, 1)");
    }
    const double on_samples = acquisition.chop.period * acquisition.chop.duty * acquisition.sample_rate;
    const double off_samples = acquisition.chop.period * (1.0 - acquisition.chop.duty) * acquisition.sample_rate;
    if (on_samples < static_cast<double>(acquisition.segment_length) ||
        off_samples < static_cast<double>(acquisition.segment_length)) {
        throw std::invalid_argument("ON and OFF windows must each hold at least one segment");
    }
    if (acquisition.n_averages == 0) {
        throw std::invalid_argument("n_averages must be positive");
    }
    for (double t : temperatures) {
        if (!(t >= 0.0)) {
            throw std::invalid_argument("temperatures must be non-negative");
        }
    }
    if (calibration.delta_v_half_override && !(*calibration.delta_v_half_override > 0.0)) {
        throw std::invalid_argument("delta_v_half_override must be positive");
    }
}

namespace {

void check_keys(const json &obj, const char *where, std::initializer_list<const char *> allowed) {
    if (!obj.is_object()) {
        throw std::invalid_argument(std::string(where) + " must be an object");
    }
    for (const auto &[key, value] : obj.items()) {
        bool ok = false;
        for (const char *a : allowed) {
            ok = ok || key == a;
        }
        if (!ok) {
            throw std::invalid_argument("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read(const json &obj, const char *key, T &out) {
    if (auto it = obj.find(key); it != obj.end() && !it->is_null()) {
        out = it->get<T>();
    }
}

template <typename T>
void read_optional(const json &obj, const char *key, std::optional<T> &out) {
    if (auto it = obj.find(key); it != obj.end()) {
        if (it->is_null()) {
            out.reset();
        } else {
            out = it->get<T>();
        }
    }
}

template <typename T>
json optional_json(const std::optional<T> &v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

ExperimentConfig config_from_json(const json &j) {
    ExperimentConfig c;
    check_keys(j, "config",
               {"environment", "gamma_intrinsic_per_s", "detector", "acquisition", "fit", "calibration",
                "temperatures_k", "master_seed", "metadata"});
    if (auto it = j.find("environment"); it != j.end()) {
        const json &e = *it;
        check_keys(e, "environment", {"qubit_frequency_hz", "base_temperature_k", "radiation_stages"});
        read(e, "qubit_frequency_hz", c.environment.qubit_frequency);
        read(e, "base_temperature_k", c.environment.base_temperature);
        if (auto st = e.find("radiation_stages"); st != e.end()) {
            c.environment.radiation_stages.clear();
            for (const auto &s : *st) {
                check_keys(s, "radiation_stages[]", {"source_temperature_k", "attenuation_db"});
                c.environment.radiation_stages.push_back(
                    {s.at("source_temperature_k").get<double>(), s.at("attenuation_db").get<double>()});
            }
        }
    }
    read(j, "gamma_intrinsic_per_s", c.gamma_intrinsic);
    if (auto it = j.find("detector"); it != j.end()) {
        const json &d = *it;
        check_keys(d, "detector",
                   {"mean_i_v", "mean_q_v", "delta_i_v", "delta_q_v", "noise_std_per_sample_v", "gain_profile"});
        read(d, "mean_i_v", c.detector.mean_i);
        read(d, "mean_q_v", c.detector.mean_q);
        read(d, "delta_i_v", c.detector.delta_i);
        read(d, "delta_q_v", c.detector.delta_q);
        read(d, "noise_std_per_sample_v", c.detector.noise_std_per_sample);
        if (auto g = d.find("gain_profile"); g != d.end() && !g->is_null()) {
            check_keys(*g, "gain_profile", {"i", "q"});
            read(*g, "i", c.detector.gain_profile.i_gain);
            read(*g, "q", c.detector.gain_profile.q_gain);
        }
    }
    if (auto it = j.find("acquisition"); it != j.end()) {
        const json &a = *it;
        check_keys(a, "acquisition", {"sample_rate_hz", "segment_length", "chop_period_s", "duty", "n_averages"});
        read(a, "sample_rate_hz", c.acquisition.sample_rate);
        read(a, "segment_length", c.acquisition.segment_length);
        read(a, "chop_period_s", c.acquisition.chop.period);
        read(a, "duty", c.acquisition.chop.duty);
        read(a, "n_averages", c.acquisition.n_averages);
    }
    if (auto it = j.find("fit"); it != j.end()) {
        const json &f = *it;
        check_keys(f, "fit", {"freq_min_hz", "freq_max_hz", "fit_baseline", "inverse_variance_weights"});
        read_optional(f, "freq_min_hz", c.fit.freq_min);
        read_optional(f, "freq_max_hz", c.fit.freq_max);
        read(f, "fit_baseline", c.fit.fit_baseline);
        read(f, "inverse_variance_weights", c.fit.inverse_variance_weights);
    }
    if (auto it = j.find("calibration"); it != j.end()) {
        const json &cal = *it;
        check_keys(cal, "calibration", {"n_samples", "delta_v_half_override_v"});
        read(cal, "n_samples", c.calibration.n_samples);
        read_optional(cal, "delta_v_half_override_v", c.calibration.delta_v_half_override);
    }
    read(j, "temperatures_k", c.temperatures);
    read(j, "master_seed", c.master_seed);
    if (auto it = j.find("metadata"); it != j.end()) {
        c.metadata = it->get<std::map<std::string, double>>();
    }
    c.validate();
    return c;
}

json config_to_json(const ExperimentConfig &c) {
    json stages = json::array();
    for (const auto &s : c.environment.radiation_stages) {
        stages.push_back({{"source_temperature_k", s.source_temperature}, {"attenuation_db", s.attenuation_db}});
    }
    json j;
    j["environment"] = {{"qubit_frequency_hz", c.environment.qubit_frequency},
                        {"base_temperature_k", c.environment.base_temperature},
                        {"radiation_stages", stages}};
    j["gamma_intrinsic_per_s"] = c.gamma_intrinsic;
    j["detector"] = {{"mean_i_v", c.detector.mean_i},
                     {"mean_q_v", c.detector.mean_q},
                     {"delta_i_v", c.detector.delta_i},
                     {"delta_q_v", c.detector.delta_q},
                     {"noise_std_per_sample_v", c.detector.noise_std_per_sample}};
    if (!c.detector.gain_profile.is_identity()) {
        j["detector"]["gain_profile"] = {{"i", c.detector.gain_profile.i_gain}, {"q", c.detector.gain_profile.q_gain}};
    }
    j["acquisition"] = {{"sample_rate_hz", c.acquisition.sample_rate},
                        {"segment_length", c.acquisition.segment_length},
                        {"chop_period_s", c.acquisition.chop.period},
                        {"duty", c.acquisition.chop.duty},
                        {"n_averages", c.acquisition.n_averages}};
    j["fit"] = {{"freq_min_hz", optional_json(c.fit.freq_min)},
                {"freq_max_hz", optional_json(c.fit.freq_max)},
                {"fit_baseline", c.fit.fit_baseline},
                {"inverse_variance_weights", c.fit.inverse_variance_weights}};
    j["calibration"] = {{"n_samples", c.calibration.n_samples},
                        {"delta_v_half_override_v", optional_json(c.calibration.delta_v_half_override)}};
    j["temperatures_k"] = c.temperatures;
    j["master_seed"] = c.master_seed;
    j["metadata"] = c.metadata;
    return j;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config " + path.string());
    }
    return config_from_json(json::parse(in, nullptr, true, /*ignore_comments=*/true));
}

}  // namespace tlsnoise
