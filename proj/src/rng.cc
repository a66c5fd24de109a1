#include "tlsnoise/rng.h"

#include <cmath>
#include <numbers>

namespace tlsnoise {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t component : path) {
        h = splitmix64(h ^ splitmix64(component + 0x632be59bd9b4e019ULL));
    }
    return h;
}

double Rng::exponential(double rate) {
    return -std::log(uniform_open()) / rate;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    double r = std::sqrt(-2.0 * std::log(uniform_open()));
    double theta = 2.0 * std::numbers::pi * uniform_open();
    cached_normal_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

}  // namespace tlsnoise
