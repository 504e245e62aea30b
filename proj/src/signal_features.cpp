#include "micutil/signal_features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "micutil/fft.hpp"

namespace micutil {

namespace {

constexpr const char* kFeatureNames[kNumFeatures] = {
    "td_envelope", "td_zcr",       "td_centroid", "td_spread",
    "td_skewness", "td_kurtosis",  "sd_slope",    "sd_flatness",
    "sd_ampflatness", "sd_rolloff", "sd_flux",    "sd_variation",
    "sd_centroid", "sd_spread",    "sd_skewness", "sd_kurtosis",
    "sd_fluxnorm", "entropy",
};

constexpr double kTiny = 1e-30;

// Standardized central moments of a discrete distribution w over
// support 0..n-1 (w sums to 1). Degenerate spread yields 0 skew/kurt.
struct Moments {
  double mean = 0.0, sdev = 0.0, skew = 0.0, kurt = 0.0;
};

Moments distribution_moments(std::span<const double> w) {
  Moments m;
  const size_t n = w.size();
  for (size_t i = 0; i < n; ++i) m.mean += static_cast<double>(i) * w[i];
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - m.mean;
    const double d2 = d * d;
    m2 += d2 * w[i];
    m3 += d2 * d * w[i];
    m4 += d2 * d2 * w[i];
  }
  if (m2 <= kTiny) return m;  // point mass: spread/skew/kurt all 0
  m.sdev = std::sqrt(m2);
  m.skew = m3 / (m2 * m.sdev);
  m.kurt = m4 / (m2 * m2);
  return m;
}

}  // namespace

const char* feature_name(FeatureId id) {
  return kFeatureNames[static_cast<int>(id)];
}

std::optional<FeatureId> feature_from_name(std::string_view name) {
  for (int i = 0; i < kNumFeatures; ++i) {
    if (name == kFeatureNames[i]) return static_cast<FeatureId>(i);
  }
  return std::nullopt;
}

FeatureMask FeatureMask::all() {
  FeatureMask m;
  m.on.fill(true);
  return m;
}

FeatureMask FeatureMask::of(std::initializer_list<FeatureId> ids) {
  FeatureMask m;
  for (FeatureId id : ids) m.set(id);
  return m;
}

size_t FeatureMask::count() const {
  size_t c = 0;
  for (bool b : on) c += b ? 1 : 0;
  return c;
}

std::vector<FeatureId> FeatureMask::ids() const {
  std::vector<FeatureId> out;
  for (int i = 0; i < kNumFeatures; ++i) {
    if (on[static_cast<size_t>(i)]) out.push_back(static_cast<FeatureId>(i));
  }
  return out;
}

FeatureMask default_active_features() {
  return FeatureMask::of({FeatureId::td_skewness, FeatureId::sd_slope,
                          FeatureId::sd_kurtosis, FeatureId::sd_fluxnorm});
}

std::vector<SignalBlock> frame_signal(std::span<const double> signal,
                                      size_t block_len, size_t shift,
                                      int channel_index, double sample_rate) {
  if (block_len < 2) throw std::invalid_argument("frame_signal: block_len must be >= 2");
  if (shift < 1 || shift > block_len) {
    throw std::invalid_argument("frame_signal: shift must be in [1, block_len]");
  }
  if (signal.size() < block_len) {
    throw std::invalid_argument("frame_signal: signal shorter than one block");
  }
  std::vector<SignalBlock> out;
  const size_t n_frames = (signal.size() - block_len) / shift + 1;
  out.reserve(n_frames);
  for (size_t l = 0; l < n_frames; ++l) {
    out.push_back(SignalBlock{signal.subspan(l * shift, block_len),
                              channel_index, static_cast<long>(l), sample_rate});
  }
  return out;
}

struct FeatureExtractor::FftHolder {
  explicit FftHolder(size_t n) : fft(n), spec(n / 2 + 1) {}
  RealFft fft;
  std::vector<std::complex<double>> spec;
};

FeatureExtractor::FeatureExtractor(size_t block_len, FeatureMask active)
    : block_len_(block_len),
      active_(active),
      window_(hann_window(block_len)),
      windowed_(block_len),
      mag_(block_len / 2 + 1),
      prev_mag_(block_len / 2 + 1, 0.0),
      fft_(std::make_shared<FftHolder>(block_len)) {
  if (block_len < 2) throw std::invalid_argument("FeatureExtractor: block_len must be >= 2");
}

void FeatureExtractor::reset() {
  std::fill(prev_mag_.begin(), prev_mag_.end(), 0.0);
  have_prev_ = false;
}

FeatureFrame FeatureExtractor::process(const SignalBlock& block) {
  const auto x = block.samples;
  if (x.size() != block_len_) {
    throw std::invalid_argument("FeatureExtractor: block length mismatch");
  }
  FeatureFrame out;

  // Block energy is always produced; the tracker uses it to weight
  // observation noise regardless of the active feature set.
  double energy = 0.0;
  for (double v : x) energy += v * v;
  out.energy = energy;

  const size_t n = x.size();
  const size_t n_bins = n / 2 + 1;
  auto want = [&](FeatureId id) { return active_.test(id); };

  // --- time domain ---
  if (want(FeatureId::td_envelope)) {
    out.values[static_cast<int>(FeatureId::td_envelope)] =
        std::sqrt(energy / static_cast<double>(n));
  }
  if (want(FeatureId::td_zcr)) {
    size_t crossings = 0;
    for (size_t i = 0; i + 1 < n; ++i) {
      if (x[i] * x[i + 1] < 0.0) ++crossings;
    }
    out.values[static_cast<int>(FeatureId::td_zcr)] =
        static_cast<double>(crossings) / static_cast<double>(n - 1);
  }
  const bool want_td_moments =
      want(FeatureId::td_centroid) || want(FeatureId::td_spread) ||
      want(FeatureId::td_skewness) || want(FeatureId::td_kurtosis);
  if (want_td_moments && energy > kTiny) {
    std::vector<double> q(n);
    for (size_t i = 0; i < n; ++i) q[i] = x[i] * x[i] / energy;
    const Moments m = distribution_moments(q);
    const double norm = static_cast<double>(n - 1);
    if (want(FeatureId::td_centroid)) {
      out.values[static_cast<int>(FeatureId::td_centroid)] = m.mean / norm;
    }
    if (want(FeatureId::td_spread)) {
      out.values[static_cast<int>(FeatureId::td_spread)] = m.sdev / norm;
    }
    if (want(FeatureId::td_skewness)) {
      out.values[static_cast<int>(FeatureId::td_skewness)] = m.skew;
    }
    if (want(FeatureId::td_kurtosis)) {
      out.values[static_cast<int>(FeatureId::td_kurtosis)] = m.kurt;
    }
  }

  // --- spectrum ---
  for (size_t i = 0; i < n; ++i) windowed_[i] = x[i] * window_[i];
  fft_->fft.forward(windowed_.data(), fft_->spec.data());
  double mag_sum = 0.0, pow_sum = 0.0;
  for (size_t k = 0; k < n_bins; ++k) {
    mag_[k] = std::abs(fft_->spec[k]);
    mag_sum += mag_[k];
    pow_sum += mag_[k] * mag_[k];
  }
  const bool degenerate = mag_sum <= kTiny;
  const double half = static_cast<double>(n / 2);

  const bool want_sd_moments =
      want(FeatureId::sd_centroid) || want(FeatureId::sd_spread) ||
      want(FeatureId::sd_skewness) || want(FeatureId::sd_kurtosis);
  if (want_sd_moments && !degenerate) {
    std::vector<double> p(n_bins);
    for (size_t k = 0; k < n_bins; ++k) p[k] = mag_[k] / mag_sum;
    const Moments m = distribution_moments(p);
    if (want(FeatureId::sd_centroid)) {
      out.values[static_cast<int>(FeatureId::sd_centroid)] = m.mean / half;
    }
    if (want(FeatureId::sd_spread)) {
      out.values[static_cast<int>(FeatureId::sd_spread)] = m.sdev / half;
    }
    if (want(FeatureId::sd_skewness)) {
      out.values[static_cast<int>(FeatureId::sd_skewness)] = m.skew;
    }
    if (want(FeatureId::sd_kurtosis)) {
      out.values[static_cast<int>(FeatureId::sd_kurtosis)] = m.kurt;
    }
  }

  if (want(FeatureId::sd_slope) && !degenerate) {
    // Least-squares slope of a[k] against k; k has mean (n_bins-1)/2.
    const double kb = static_cast<double>(n_bins - 1) / 2.0;
    const double ab = mag_sum / static_cast<double>(n_bins);
    double num = 0.0, den = 0.0;
    for (size_t k = 0; k < n_bins; ++k) {
      const double dk = static_cast<double>(k) - kb;
      num += dk * (mag_[k] - ab);
      den += dk * dk;
    }
    out.values[static_cast<int>(FeatureId::sd_slope)] = num / den;
  }

  if (want(FeatureId::sd_flatness)) {
    double v = 1.0;  // all-zero block: flat by definition
    if (!degenerate) {
      // Geometric mean in log space; any zero bin drives it to 0.
      bool zero_bin = false;
      double log_sum = 0.0;
      for (size_t k = 0; k < n_bins; ++k) {
        const double p2 = mag_[k] * mag_[k];
        if (p2 <= 0.0) { zero_bin = true; break; }
        log_sum += std::log(p2);
      }
      const double am = pow_sum / static_cast<double>(n_bins);
      v = zero_bin ? 0.0 : std::exp(log_sum / static_cast<double>(n_bins)) / am;
    }
    out.values[static_cast<int>(FeatureId::sd_flatness)] = v;
  }
  if (want(FeatureId::sd_ampflatness)) {
    double v = 1.0;
    if (!degenerate) {
      bool zero_bin = false;
      double log_sum = 0.0;
      for (size_t k = 0; k < n_bins; ++k) {
        if (mag_[k] <= 0.0) { zero_bin = true; break; }
        log_sum += std::log(mag_[k]);
      }
      const double am = mag_sum / static_cast<double>(n_bins);
      v = zero_bin ? 0.0 : std::exp(log_sum / static_cast<double>(n_bins)) / am;
    }
    out.values[static_cast<int>(FeatureId::sd_ampflatness)] = v;
  }

  if (want(FeatureId::sd_rolloff) && !degenerate) {
    const double target = 0.85 * pow_sum;
    double acc = 0.0;
    size_t kr = n_bins - 1;
    for (size_t k = 0; k < n_bins; ++k) {
      acc += mag_[k] * mag_[k];
      if (acc >= target) { kr = k; break; }
    }
    out.values[static_cast<int>(FeatureId::sd_rolloff)] =
        static_cast<double>(kr) / half;
  }

  if (have_prev_) {
    double prev_sum2 = 0.0, dot = 0.0, diff2 = 0.0;
    for (size_t k = 0; k < n_bins; ++k) {
      prev_sum2 += prev_mag_[k] * prev_mag_[k];
      dot += mag_[k] * prev_mag_[k];
      const double d = mag_[k] - prev_mag_[k];
      diff2 += d * d;
    }
    if (want(FeatureId::sd_flux)) {
      out.values[static_cast<int>(FeatureId::sd_flux)] = std::sqrt(diff2);
    }
    const double cur_norm = std::sqrt(pow_sum);
    const double prev_norm = std::sqrt(prev_sum2);
    if (cur_norm > kTiny && prev_norm > kTiny) {
      if (want(FeatureId::sd_fluxnorm)) {
        double d2 = 0.0;
        for (size_t k = 0; k < n_bins; ++k) {
          const double d = mag_[k] / cur_norm - prev_mag_[k] / prev_norm;
          d2 += d * d;
        }
        out.values[static_cast<int>(FeatureId::sd_fluxnorm)] = std::sqrt(d2);
      }
      if (want(FeatureId::sd_variation)) {
        out.values[static_cast<int>(FeatureId::sd_variation)] =
            1.0 - dot / (cur_norm * prev_norm);
      }
    }
  }

  prev_mag_ = mag_;
  have_prev_ = true;
  return out;
}

double differential_entropy(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw std::invalid_argument("differential_entropy: need at least 2 samples");
  }
  double lo = samples[0], hi = samples[0];
  for (double v : samples) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;
  if (!(range > 0.0)) return kEntropyFloor;

  constexpr int kBins = 64;
  std::array<size_t, kBins> counts{};
  const double scale = static_cast<double>(kBins) / range;
  for (double v : samples) {
    int b = static_cast<int>((v - lo) * scale);
    b = std::clamp(b, 0, kBins - 1);  // v == hi lands in the last bin
    ++counts[static_cast<size_t>(b)];
  }
  const double n = static_cast<double>(samples.size());
  double h = 0.0;
  for (size_t b = 0; b < kBins; ++b) {
    if (counts[b] == 0) continue;
    const double p = static_cast<double>(counts[b]) / n;
    h -= p * std::log(p);
  }
  h += std::log(range / static_cast<double>(kBins));
  return std::max(h, kEntropyFloor);
}

double frame_energy(std::span<const double> samples) {
  double e = 0.0;
  for (double v : samples) e += v * v;
  return e;
}

std::vector<double> held_entropy_per_frame(std::span<const double> signal,
                                           size_t entropy_block_len,
                                           size_t n_frames, size_t block_len,
                                           size_t shift) {
  if (entropy_block_len < 2) {
    throw std::invalid_argument("held_entropy_per_frame: entropy_block_len must be >= 2");
  }
  std::vector<double> held(n_frames, 0.0);
  std::vector<double> block_values;  // -H per completed entropy block
  const size_t n_blocks = signal.size() / entropy_block_len;
  block_values.reserve(n_blocks);
  std::vector<double> norm(entropy_block_len);
  for (size_t k = 0; k < n_blocks; ++k) {
    const auto block = signal.subspan(k * entropy_block_len, entropy_block_len);
    double mean = 0.0;
    for (double v : block) mean += v;
    mean /= static_cast<double>(entropy_block_len);
    double var = 0.0;
    for (double v : block) var += (v - mean) * (v - mean);
    var /= static_cast<double>(entropy_block_len);
    const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (size_t i = 0; i < entropy_block_len; ++i) norm[i] = block[i] * inv;
    block_values.push_back(-differential_entropy(norm));
  }
  for (size_t l = 0; l < n_frames; ++l) {
    const size_t frame_end = l * shift + block_len;
    if (frame_end < entropy_block_len) continue;  // nothing completed yet
    size_t completed = frame_end / entropy_block_len;  // blocks fully observed
    if (completed == 0) continue;
    const size_t k = std::min(completed - 1, n_blocks ? n_blocks - 1 : 0);
    if (k < block_values.size()) held[l] = block_values[k];
  }
  return held;
}

}  // namespace micutil
