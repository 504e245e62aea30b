#include "micutil/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace micutil {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(size_t n) : n_(n) {
  if (n < 2) throw std::invalid_argument("RealFft: size must be >= 2");
  real_buf_ = fftw_alloc_real(n_);
  cplx_buf_ = fftw_alloc_complex(n_ / 2 + 1);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fwd_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_buf_,
                                   static_cast<fftw_complex*>(cplx_buf_),
                                   FFTW_ESTIMATE);
  inv_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_),
                                   static_cast<fftw_complex*>(cplx_buf_),
                                   real_buf_, FFTW_ESTIMATE);
  if (!fwd_plan_ || !inv_plan_) throw std::runtime_error("RealFft: planning failed");
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_plan_));
  fftw_free(real_buf_);
  fftw_free(cplx_buf_);
}

void RealFft::forward(const double* in, std::complex<double>* out) {
  std::memcpy(real_buf_, in, n_ * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(fwd_plan_));
  std::memcpy(out, cplx_buf_, bins() * sizeof(std::complex<double>));
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
  std::memcpy(cplx_buf_, in, bins() * sizeof(std::complex<double>));
  fftw_execute(static_cast<fftw_plan>(inv_plan_));
  const double scale = 1.0 / static_cast<double>(n_);
  for (size_t i = 0; i < n_; ++i) out[i] = real_buf_[i] * scale;
}

std::vector<double> hann_window(size_t n) {
  std::vector<double> w(n);
  const double step = 2.0 * M_PI / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(step * static_cast<double>(i)));
  }
  return w;
}

}  // namespace micutil
