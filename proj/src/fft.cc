#include "tlsnoise/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace tlsnoise {

namespace {

std::mutex &planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

RealFft::RealFft(std::size_t length) : length_(length) {
    if (length < 2) {
        throw std::invalid_argument("FFT length must be at least 2");
    }
    std::lock_guard lock(planner_mutex());
    real_ = fftw_alloc_real(length_);
    auto *cplx = fftw_alloc_complex(bins());
    complex_ = cplx;
    if (real_ == nullptr || cplx == nullptr) {
        fftw_free(real_);
        fftw_free(cplx);
        throw std::bad_alloc();
    }
    int n = static_cast<int>(length_);
    forward_plan_ = fftw_plan_dft_r2c_1d(n, real_, cplx, FFTW_ESTIMATE);
    inverse_plan_ = fftw_plan_dft_c2r_1d(n, cplx, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
    fftw_free(real_);
    fftw_free(complex_);
}

std::span<const std::complex<double>> RealFft::forward(std::span<const double> input) {
    if (input.size() != length_) {
        throw std::invalid_argument("FFT input length mismatch");
    }
    std::copy(input.begin(), input.end(), real_);
    fftw_execute(static_cast<fftw_plan>(forward_plan_));
    return {reinterpret_cast<const std::complex<double> *>(complex_), bins()};
}

std::span<const double> RealFft::inverse(std::span<const std::complex<double>> half_spectrum) {
    if (half_spectrum.size() != bins()) {
        throw std::invalid_argument("inverse FFT input length mismatch");
    }
    auto *dst = reinterpret_cast<std::complex<double> *>(complex_);
    std::copy(half_spectrum.begin(), half_spectrum.end(), dst);
    // c2r destroys its input; the copy above keeps the caller's buffer intact.
    fftw_execute(static_cast<fftw_plan>(inverse_plan_));
    return {real_, length_};
}

}  // namespace tlsnoise
