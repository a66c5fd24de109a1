#ifndef TLSNOISE_FFT_H
#define TLSNOISE_FFT_H

#include <complex>
#include <cstddef>
#include <span>

namespace tlsnoise {

/// Owning wrapper around an FFTW real-to-complex / complex-to-real plan pair of one
/// length. Plans are created with FFTW_ESTIMATE so that results are bit-reproducible
/// between runs. Not thread-safe: use one instance per worker. Construction and
/// destruction are serialized internally because FFTW's planner is not reentrant.
class RealFft {
   public:
    explicit RealFft(std::size_t length);
    ~RealFft();
    RealFft(const RealFft &) = delete;
    RealFft &operator=(const RealFft &) = delete;

    std::size_t length() const { return length_; }
    std::size_t bins() const { return length_ / 2 + 1; }

    /// Unnormalized forward transform of input.size() == length() samples.
    /// Returns a view of the internal bins() spectrum buffer, valid until the next call.
    std::span<const std::complex<double>> forward(std::span<const double> input);

    /// Unnormalized inverse of a half-spectrum (the forward/inverse round trip scales by length()).
    std::span<const double> inverse(std::span<const std::complex<double>> half_spectrum);

   private:
    std::size_t length_;
    double *real_ = nullptr;
    void *complex_ = nullptr;
    void *forward_plan_ = nullptr;
    void *inverse_plan_ = nullptr;
};

}  // namespace tlsnoise

#endif
