#ifndef TLSNOISE_CONFIG_H
#define TLSNOISE_CONFIG_H

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlsnoise/measurement_chain.h"
#include "tlsnoise/thermal_model.h"

namespace tlsnoise {

struct AcquisitionParams {
    double sample_rate = 100e6;  // Hz
    std::size_t segment_length = 1024;
    ChopSchedule chop;          // 2.5 ms period, duty 0.5
    std::size_t n_averages = 20000;  // segments per spectrum, for each of ON and OFF
};

struct FitSettings {
    std::optional<double> freq_min;
    std::optional<double> freq_max;
    bool fit_baseline = true;
    bool inverse_variance_weights = false;
};

struct CalibrationSettings {
    std::size_t n_samples = 10'000'000;
    /// Replaces the configured detector swing in population extraction.
    std::optional<double> delta_v_half_override;
};

/// Everything that determines a run. Outputs are a pure function of this and the seed.
struct ExperimentConfig {
    ThermalEnvironment environment = default_environment();
    double gamma_intrinsic = 1.0 / 226e-9;  // 1/s
    DetectorParams detector = default_detector();
    AcquisitionParams acquisition;
    FitSettings fit;
    CalibrationSettings calibration;
    std::vector<double> temperatures = default_temperatures();
    std::uint64_t master_seed = 20091112;
    /// Recorded setup constants; never read by the computation.
    std::map<std::string, double> metadata = default_metadata();

    void validate() const;

    static ThermalEnvironment default_environment();
    static DetectorParams default_detector();
    static std::vector<double> default_temperatures();
    static std::map<std::string, double> default_metadata();
};

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json &j);
nlohmann::json config_to_json(const ExperimentConfig &config);
ExperimentConfig load_config(const std::filesystem::path &path);

}  // namespace tlsnoise

#endif
