#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace micutil {

// Real-input FFT of a fixed size, backed by FFTW double precision.
// One instance owns its plans and scratch buffers and is not thread
// safe; use one instance per thread. Plan creation is serialized
// internally (the FFTW planner is a process-wide resource).
class RealFft {
 public:
  explicit RealFft(size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  size_t size() const { return n_; }
  size_t bins() const { return n_ / 2 + 1; }

  // out must hold bins() values.
  void forward(const double* in, std::complex<double>* out);
  // Inverse of forward including the 1/n normalization; out holds n values.
  void inverse(const std::complex<double>* in, double* out);

 private:
  size_t n_;
  void* fwd_plan_;
  void* inv_plan_;
  double* real_buf_;
  void* cplx_buf_;
};

// Periodic Hann window of length n.
std::vector<double> hann_window(size_t n);

}  // namespace micutil
