#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace micutil {

// Ground-truth channel quality: magnitude-squared coherence between
// the dry source signal and each microphone signal, averaged over
// frequency. Spectral densities are tracked recursively per block,
//   S[l] = beta * S[l-1] + (1 - beta) * X_a conj(X_b),
// on Hann-windowed DFTs, so the estimate follows a moving scene.
struct PsdConfig {
  double beta = 0.9;       // recursive smoothing factor in [0, 1)
  size_t block_len = 1024;
};

class PsdState {
 public:
  PsdState(size_t n_channels, const PsdConfig& cfg = {});
  ~PsdState();
  PsdState(PsdState&&) noexcept;
  PsdState& operator=(PsdState&&) noexcept;
  PsdState(const PsdState&) = delete;
  PsdState& operator=(const PsdState&) = delete;

  // One block per channel plus the matching source block, all of
  // length block_len. Throws std::invalid_argument on size mismatch.
  void update(std::span<const double> source_block,
              std::span<const std::span<const double>> mic_blocks);

  // Per-channel coherence in [0, 1]: mean over the L/2+1 non-redundant
  // bins of |S_sx|^2 / (S_ss S_xx), each bin clamped to [0, 1]. Bins
  // where a denominator factor is below 1e-12 contribute 0. Requires
  // at least one update.
  std::vector<double> msc() const;

  size_t n_channels() const { return n_; }
  size_t updates() const { return updates_; }

 private:
  size_t n_;
  PsdConfig cfg_;
  size_t updates_ = 0;
  std::vector<double> window_;
  std::vector<double> auto_src_;                             // S_ss per bin
  std::vector<std::vector<double>> auto_mic_;                // S_xx per bin
  std::vector<std::vector<std::complex<double>>> cross_;     // S_sx per bin
  struct Impl;
  Impl* impl_;  // FFT plan + scratch
};

}  // namespace micutil
