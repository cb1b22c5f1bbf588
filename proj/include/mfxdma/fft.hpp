#pragma once

// Thin RAII wrappers over FFTW plans for exact-length transforms.

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include <fftw3.h>

#include "mfxdma/error.hpp"

namespace mfxdma::fft {

namespace detail {
// FFTW's planner is not reentrant; plan execution is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Real-to-half-complex forward and inverse transform of a fixed length.
/// The inverse is unnormalized (FFTW convention).
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n < 1) throw ValidationError("RealFft: length must be >= 1");
    real_ = fftw_alloc_real(n);
    spec_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(detail::planner_mutex());
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_r2c_1d(len, real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(len, spec_, real_, FFTW_ESTIMATE);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    {
      std::lock_guard lock(detail::planner_mutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(inverse_);
    }
    fftw_free(real_);
    fftw_free(spec_);
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }

  std::span<double> real() noexcept { return {real_, n_}; }
  std::span<std::complex<double>> spectrum() noexcept {
    return {reinterpret_cast<std::complex<double>*>(spec_), n_ / 2 + 1};
  }

  /// real() -> spectrum(). FFTW may clobber the input.
  void forward() { fftw_execute(forward_); }
  /// spectrum() -> real(), scaled by n. Clobbers spectrum().
  void inverse() { fftw_execute(inverse_); }

 private:
  std::size_t n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

/// In-place complex forward transform of a fixed length.
class ComplexFft {
 public:
  explicit ComplexFft(std::size_t n) : n_(n) {
    if (n < 1) throw ValidationError("ComplexFft: length must be >= 1");
    data_ = fftw_alloc_complex(n);
    std::lock_guard lock(detail::planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ComplexFft(const ComplexFft&) = delete;
  ComplexFft& operator=(const ComplexFft&) = delete;
  ~ComplexFft() {
    {
      std::lock_guard lock(detail::planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(data_);
  }

  std::span<std::complex<double>> data() noexcept {
    return {reinterpret_cast<std::complex<double>*>(data_), n_};
  }
  void forward() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  fftw_complex* data_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace mfxdma::fft
