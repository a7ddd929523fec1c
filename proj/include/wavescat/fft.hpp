#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace wavescat {

/// In-place complex FFT of fixed length on an FFTW-aligned buffer.
///
/// Plans use FFTW_ESTIMATE so that the same length always yields the same plan and
/// therefore bit-identical results. Planning is serialized; execution is not.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    data_ = fftw_alloc_complex(n_);
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_1d(static_cast<int>(n_), data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(static_cast<int>(n_), data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&& other) noexcept
      : n_(std::exchange(other.n_, 0)),
        data_(std::exchange(other.data_, nullptr)),
        forward_(std::exchange(other.forward_, nullptr)),
        backward_(std::exchange(other.backward_, nullptr)) {}
  Fft& operator=(Fft&& other) noexcept {
    if (this != &other) {
      release();
      n_ = std::exchange(other.n_, 0);
      data_ = std::exchange(other.data_, nullptr);
      forward_ = std::exchange(other.forward_, nullptr);
      backward_ = std::exchange(other.backward_, nullptr);
    }
    return *this;
  }
  ~Fft() { release(); }

  std::size_t size() const { return n_; }

  std::span<std::complex<double>> data() {
    return {reinterpret_cast<std::complex<double>*>(data_), n_};
  }
  std::span<const std::complex<double>> data() const {
    return {reinterpret_cast<const std::complex<double>*>(data_), n_};
  }

  /// Unnormalized: X_m = sum_j x_j exp(-2 pi i j m / n).
  void forward() { fftw_execute(forward_); }
  /// Unnormalized inverse; forward() then backward() scales by n.
  void backward() { fftw_execute(backward_); }

  /// Angular wavenumbers of the FFT bins for a periodic domain of the given length,
  /// in FFTW order (non-negative first, then negative).
  static std::vector<double> wavenumbers(std::size_t n, double length) {
    std::vector<double> k(n);
    const double dk = 2.0 * std::numbers::pi / length;
    const auto half = static_cast<std::ptrdiff_t>(n / 2);
    for (std::size_t j = 0; j < n; ++j) {
      auto m = static_cast<std::ptrdiff_t>(j);
      if (m >= half) m -= static_cast<std::ptrdiff_t>(n);
      k[j] = dk * static_cast<double>(m);
    }
    return k;
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  void release() {
    if (data_ == nullptr) return;
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(backward_);
    }
    fftw_free(data_);
    data_ = nullptr;
  }

  std::size_t n_ = 0;
  fftw_complex* data_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace wavescat
