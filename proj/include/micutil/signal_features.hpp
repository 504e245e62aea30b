#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace micutil {

// Per-block signal descriptors computed independently on each channel.
// Time-domain moments are taken over the block's normalized energy
// distribution q[n] = x[n]^2 / sum(x^2); spectral descriptors over the
// Hann-windowed magnitude spectrum a[k], k = 0..L/2, and its
// normalized form p[k] = a[k] / sum(a).
enum class FeatureId : int {
  td_envelope = 0,  // RMS of the block
  td_zcr,           // zero-crossing fraction over adjacent pairs
  td_centroid,      // first moment of q, normalized by L-1
  td_spread,        // sqrt second central moment of q, normalized by L-1
  td_skewness,      // standardized third central moment of q
  td_kurtosis,      // standardized fourth central moment of q
  sd_slope,         // least-squares slope of a[k] against k
  sd_flatness,      // geometric/arithmetic mean ratio of a^2
  sd_ampflatness,   // geometric/arithmetic mean ratio of a
  sd_rolloff,       // smallest k with 85% cumulative energy, / (L/2)
  sd_flux,          // l2 distance between consecutive magnitude spectra
  sd_variation,     // 1 - cosine similarity of consecutive spectra
  sd_centroid,      // first moment of p, normalized by L/2
  sd_spread,        // sqrt second central moment of p, normalized by L/2
  sd_skewness,      // standardized third central moment of p
  sd_kurtosis,      // standardized fourth central moment of p
  sd_fluxnorm,      // l2 distance between unit-normalized spectra
  entropy,          // negated differential entropy, held between updates
};

inline constexpr int kNumFeatures = 18;

const char* feature_name(FeatureId id);
std::optional<FeatureId> feature_from_name(std::string_view name);

// Active-set mask over the full feature vector.
struct FeatureMask {
  std::array<bool, kNumFeatures> on{};

  static FeatureMask all();
  static FeatureMask of(std::initializer_list<FeatureId> ids);
  bool test(FeatureId id) const { return on[static_cast<size_t>(id)]; }
  void set(FeatureId id, bool v = true) { on[static_cast<size_t>(id)] = v; }
  size_t count() const;
  // Active feature ids in enum order.
  std::vector<FeatureId> ids() const;
};

// Features used for utility estimation when no explicit set is given.
FeatureMask default_active_features();

// One analysis block of one channel. samples aliases caller storage.
struct SignalBlock {
  std::span<const double> samples;
  int channel_index = 0;
  long frame_index = 0;
  double sample_rate = 0.0;
};

// Splits a channel into blocks of block_len samples every shift samples.
// Only full blocks are produced; a trailing partial block is dropped.
// Requires block_len >= 2, 1 <= shift <= block_len, and at least one
// full block of input (throws std::invalid_argument otherwise).
std::vector<SignalBlock> frame_signal(std::span<const double> signal,
                                      size_t block_len, size_t shift,
                                      int channel_index = 0,
                                      double sample_rate = 16000.0);

// Feature vector for one block. values is indexed by FeatureId;
// entries outside the active set are 0. energy is the plain block
// energy sum(x^2) and entropy_neg the held negated differential
// entropy of the surrounding long-term block (0 until the first such
// block completes).
struct FeatureFrame {
  std::array<double, kNumFeatures> values{};
  double energy = 0.0;
  double entropy_neg = 0.0;
};

// Stateful per-channel extractor. Keeps the previous magnitude
// spectrum for the flux-type descriptors, which are 0 on the first
// block after construction or reset(). Not thread safe; use one
// instance per channel.
class FeatureExtractor {
 public:
  FeatureExtractor(size_t block_len, FeatureMask active);

  FeatureFrame process(const SignalBlock& block);
  void reset();

  size_t block_len() const { return block_len_; }
  const FeatureMask& active() const { return active_; }
  // Magnitude spectrum of the most recent block, for diagnostics.
  const std::vector<double>& last_spectrum() const { return mag_; }

 private:
  size_t block_len_;
  FeatureMask active_;
  std::vector<double> window_;
  std::vector<double> windowed_;
  std::vector<double> mag_;       // current |DFT|, L/2+1 bins
  std::vector<double> prev_mag_;  // previous block's |DFT|
  bool have_prev_ = false;
  struct FftHolder;
  std::shared_ptr<FftHolder> fft_;
};

// Histogram estimate of differential entropy in nats: 64 equal-width
// bins spanning [min, max], H = -sum p_b ln p_b + ln(bin width).
// A constant input (zero range) returns the floor value -20.
// Requires at least 2 samples.
double differential_entropy(std::span<const double> samples);
inline constexpr double kEntropyFloor = -20.0;

// Block energy sum(x^2).
double frame_energy(std::span<const double> samples);

// Negated differential entropy per frame, held from the most recently
// completed entropy block of entropy_block_len samples (value 0 before
// the first block completes). Each block is normalized to unit standard
// deviation before the histogram, so the value measures signal structure
// and is invariant to static channel gain. Frame l covers samples
// [l*shift, l*shift + block_len); a block is available once the frame
// end reaches past it.
std::vector<double> held_entropy_per_frame(std::span<const double> signal,
                                           size_t entropy_block_len,
                                           size_t n_frames, size_t block_len,
                                           size_t shift);

}  // namespace micutil
