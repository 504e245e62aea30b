#include "micutil/msc_oracle.hpp"

#include <algorithm>
#include <stdexcept>

#include "micutil/fft.hpp"

namespace micutil {

struct PsdState::Impl {
  explicit Impl(size_t n)
      : fft(n), windowed(n), src_spec(n / 2 + 1), mic_spec(n / 2 + 1) {}
  RealFft fft;
  std::vector<double> windowed;
  std::vector<std::complex<double>> src_spec;
  std::vector<std::complex<double>> mic_spec;
};

PsdState::PsdState(size_t n_channels, const PsdConfig& cfg)
    : n_(n_channels), cfg_(cfg) {
  if (n_channels == 0) throw std::invalid_argument("PsdState: need >= 1 channel");
  if (cfg.block_len < 2) throw std::invalid_argument("PsdState: block_len must be >= 2");
  if (!(cfg.beta >= 0.0 && cfg.beta < 1.0)) {
    throw std::invalid_argument("PsdState: beta must be in [0, 1)");
  }
  const size_t bins = cfg.block_len / 2 + 1;
  window_ = hann_window(cfg.block_len);
  auto_src_.assign(bins, 0.0);
  auto_mic_.assign(n_, std::vector<double>(bins, 0.0));
  cross_.assign(n_, std::vector<std::complex<double>>(bins, {0.0, 0.0}));
  impl_ = new Impl(cfg.block_len);
}

PsdState::~PsdState() { delete impl_; }

PsdState::PsdState(PsdState&& other) noexcept
    : n_(other.n_),
      cfg_(other.cfg_),
      updates_(other.updates_),
      window_(std::move(other.window_)),
      auto_src_(std::move(other.auto_src_)),
      auto_mic_(std::move(other.auto_mic_)),
      cross_(std::move(other.cross_)),
      impl_(other.impl_) {
  other.impl_ = nullptr;
}

PsdState& PsdState::operator=(PsdState&& other) noexcept {
  if (this != &other) {
    delete impl_;
    n_ = other.n_;
    cfg_ = other.cfg_;
    updates_ = other.updates_;
    window_ = std::move(other.window_);
    auto_src_ = std::move(other.auto_src_);
    auto_mic_ = std::move(other.auto_mic_);
    cross_ = std::move(other.cross_);
    impl_ = other.impl_;
    other.impl_ = nullptr;
  }
  return *this;
}

void PsdState::update(std::span<const double> source_block,
                      std::span<const std::span<const double>> mic_blocks) {
  const size_t L = cfg_.block_len;
  if (source_block.size() != L) {
    throw std::invalid_argument("PsdState::update: source block length mismatch");
  }
  if (mic_blocks.size() != n_) {
    throw std::invalid_argument("PsdState::update: channel count mismatch");
  }
  const size_t bins = L / 2 + 1;
  const double b = cfg_.beta;
  const double nb = 1.0 - b;

  for (size_t i = 0; i < L; ++i) impl_->windowed[i] = source_block[i] * window_[i];
  impl_->fft.forward(impl_->windowed.data(), impl_->src_spec.data());
  for (size_t k = 0; k < bins; ++k) {
    auto_src_[k] = b * auto_src_[k] + nb * std::norm(impl_->src_spec[k]);
  }

  for (size_t p = 0; p < n_; ++p) {
    if (mic_blocks[p].size() != L) {
      throw std::invalid_argument("PsdState::update: mic block length mismatch");
    }
    for (size_t i = 0; i < L; ++i) impl_->windowed[i] = mic_blocks[p][i] * window_[i];
    impl_->fft.forward(impl_->windowed.data(), impl_->mic_spec.data());
    auto& am = auto_mic_[p];
    auto& cx = cross_[p];
    for (size_t k = 0; k < bins; ++k) {
      am[k] = b * am[k] + nb * std::norm(impl_->mic_spec[k]);
      cx[k] = b * cx[k] + nb * impl_->src_spec[k] * std::conj(impl_->mic_spec[k]);
    }
  }
  ++updates_;
}

std::vector<double> PsdState::msc() const {
  if (updates_ == 0) throw std::logic_error("PsdState::msc: no updates yet");
  constexpr double kDenFloor = 1e-12;
  const size_t bins = cfg_.block_len / 2 + 1;
  std::vector<double> gamma(n_, 0.0);
  for (size_t p = 0; p < n_; ++p) {
    double acc = 0.0;
    for (size_t k = 0; k < bins; ++k) {
      const double den_s = auto_src_[k];
      const double den_m = auto_mic_[p][k];
      if (den_s < kDenFloor || den_m < kDenFloor) continue;
      const double c = std::norm(cross_[p][k]) / (den_s * den_m);
      acc += std::clamp(c, 0.0, 1.0);
    }
    gamma[p] = acc / static_cast<double>(bins);
  }
  return gamma;
}

}  // namespace micutil
