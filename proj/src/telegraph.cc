#include "tlsnoise/telegraph.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tlsnoise/rng.h"

namespace tlsnoise {

TelegraphTrajectory::TelegraphTrajectory(QubitState initial_state, std::vector<double> switch_times,
                                         double duration, QubitRates rates, std::uint64_t seed)
    : initial_state_(initial_state),
      switch_times_(std::move(switch_times)),
      duration_(duration),
      rates_(rates),
      seed_(seed) {
    if (!(duration_ > 0.0)) {
        throw std::invalid_argument("trajectory duration must be positive");
    }
    for (std::size_t k = 0; k < switch_times_.size(); ++k) {
        double t = switch_times_[k];
        if (!(t >= 0.0 && t < duration_) || (k > 0 && !(t > switch_times_[k - 1]))) {
            throw std::invalid_argument("switch times must be strictly increasing in [0, duration)");
        }
    }
}

QubitState TelegraphTrajectory::state_at(double t) const {
    auto n_before = std::lower_bound(switch_times_.begin(), switch_times_.end(), t) - switch_times_.begin();
    return (n_before % 2 == 0) ? initial_state_ : toggled(initial_state_);
}

double TelegraphTrajectory::excited_time() const {
    double total = 0.0;
    double start = 0.0;
    QubitState s = initial_state_;
    for (double t : switch_times_) {
        if (s == QubitState::excited) {
            total += t - start;
        }
        start = t;
        s = toggled(s);
    }
    if (s == QubitState::excited) {
        total += duration_ - start;
    }
    return total;
}

TelegraphTrajectory simulate_trajectory(const QubitRates &rates, double duration, std::uint64_t seed,
                                        InitialState init) {
    rates.validate();
    if (!(duration > 0.0)) {
        throw std::invalid_argument("duration must be positive");
    }
    Rng rng(seed);
    QubitState initial = init.fixed ? *init.fixed
                                    : (rng.bernoulli(steady_state(rates).rho_ee) ? QubitState::excited
                                                                                 : QubitState::ground);
    std::vector<double> switches;
    QubitState s = initial;
    double t = 0.0;
    while (true) {
        double rate = s == QubitState::excited ? rates.down_rate() : rates.up_rate();
        if (rate <= 0.0) {
            break;
        }
        double next = t + rng.exponential(rate);
        if (next >= duration) {
            break;
        }
        if (!switches.empty() && next <= switches.back()) {
            // Dwell below one ulp of t.
            next = std::nextafter(switches.back(), std::numeric_limits<double>::infinity());
            if (next >= duration) {
                break;
            }
        }
        switches.push_back(next);
        t = next;
        s = toggled(s);
    }
    return TelegraphTrajectory(initial, std::move(switches), duration, rates, seed);
}

std::size_t sample_count(double duration, double sample_rate) {
    if (!(sample_rate > 0.0)) {
        throw std::invalid_argument("sample_rate must be positive");
    }
    return static_cast<std::size_t>(std::floor(duration * sample_rate * (1.0 + 1e-12)));
}

SampledSignal sample(const TelegraphTrajectory &traj, double sample_rate, double start_time,
                     std::size_t n_samples) {
    if (!(sample_rate > 0.0)) {
        throw std::invalid_argument("sample_rate must be positive");
    }
    SampledSignal out;
    out.sample_rate = sample_rate;
    out.start_time = start_time;
    out.values.resize(n_samples);

    const auto &sw = traj.switch_times();
    auto it = std::lower_bound(sw.begin(), sw.end(), start_time);
    std::size_t n_before = static_cast<std::size_t>(it - sw.begin());
    QubitState s = (n_before % 2 == 0) ? traj.initial_state() : toggled(traj.initial_state());
    const double dt = 1.0 / sample_rate;
    for (std::size_t k = 0; k < n_samples; ++k) {
        double t = start_time + static_cast<double>(k) * dt;
        while (it != sw.end() && *it < t) {
            s = toggled(s);
            ++it;
        }
        out.values[k] = spin_value(s);
    }
    return out;
}

SampledSignal sample(const TelegraphTrajectory &traj, double sample_rate) {
    return sample(traj, sample_rate, 0.0, sample_count(traj.duration(), sample_rate));
}

std::vector<double> empirical_autocorrelation(const SampledSignal &signal, std::size_t max_lag) {
    const auto &z = signal.values;
    const std::size_t n = z.size();
    if (max_lag >= n) {
        throw std::invalid_argument("max_lag must be smaller than the signal length");
    }
    double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(n);
    std::vector<double> dz(n);
    std::transform(z.begin(), z.end(), dz.begin(), [mean](double v) { return v - mean; });
    std::vector<double> c(max_lag + 1, 0.0);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) {
            acc += dz[t] * dz[t + lag];
        }
        c[lag] = acc / static_cast<double>(n);
    }
    return c;
}

std::vector<double> dwell_times(const TelegraphTrajectory &traj, QubitState state) {
    std::vector<double> out;
    double start = 0.0;
    QubitState s = traj.initial_state();
    for (double t : traj.switch_times()) {
        if (s == state) {
            out.push_back(t - start);
        }
        start = t;
        s = toggled(s);
    }
    return out;
}

namespace {

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

}  // namespace

void write_trajectory_csv(const std::filesystem::path &path, const TelegraphTrajectory &traj) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "# gamma_intrinsic=" << format_double(traj.rates().gamma_intrinsic) << '\n';
    out << "# n_th=" << format_double(traj.rates().n_th) << '\n';
    out << "# seed=" << traj.seed() << '\n';
    out << "# duration=" << format_double(traj.duration()) << '\n';
    out << "# initial_state=" << (traj.initial_state() == QubitState::excited ? "excited" : "ground") << '\n';
    out << "switch_time_s\n";
    for (double t : traj.switch_times()) {
        out << format_double(t) << '\n';
    }
}

TelegraphTrajectory read_trajectory_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    QubitRates rates;
    std::uint64_t seed = 0;
    double duration = 0.0;
    QubitState initial = QubitState::ground;
    std::vector<double> switches;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                continue;
            }
            std::string key = line.substr(2, eq - 2);
            std::string value = line.substr(eq + 1);
            if (key == "gamma_intrinsic") {
                rates.gamma_intrinsic = parse_double(value);
            } else if (key == "n_th") {
                rates.n_th = parse_double(value);
            } else if (key == "seed") {
                seed = std::stoull(value);
            } else if (key == "duration") {
                duration = parse_double(value);
            } else if (key == "initial_state") {
                initial = value == "excited" ? QubitState::excited : QubitState::ground;
            }
        } else if (line != "switch_time_s") {
            switches.push_back(parse_double(line));
        }
    }
    return TelegraphTrajectory(initial, std::move(switches), duration, rates, seed);
}

}  // namespace tlsnoise
