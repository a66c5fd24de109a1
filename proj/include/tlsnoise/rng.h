#ifndef TLSNOISE_RNG_H
#define TLSNOISE_RNG_H

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tlsnoise {

/// Derives a stream seed from a master seed and a path of indices
/// (point, segment, purpose, ...). Each component is folded in with a
/// SplitMix64 finalizer, so distinct paths give statistically independent seeds
/// and the mapping does not depend on thread count or scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// mt19937_64 with explicitly specified variate transforms. The standard library's
/// distributions are implementation-defined, so uniforms, exponentials and normals
/// are generated here to keep streams reproducible across toolchains.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Inverse-CDF exponential draw; rate must be positive.
    double exponential(double rate);

    /// Standard normal via the Box-Muller transform (second variate cached).
    double normal();

    bool bernoulli(double p) { return uniform_open() < p; }

    std::uint64_t next_u64() { return engine_(); }

   private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace tlsnoise

#endif
