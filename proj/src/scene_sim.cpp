#include "micutil/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "micutil/fft.hpp"
#include "micutil/rng.hpp"

namespace micutil {

namespace {

constexpr double kInv4Pi = 1.0 / (4.0 * M_PI);

// Image coordinates along one axis: offset from the microphone, wall
// hit count, and the accumulated reflection coefficient.
struct AxisImage {
  double a;      // image coordinate minus mic coordinate
  double bpow;   // beta^count
  int count;
};

std::vector<AxisImage> axis_images(double src, double mic, double room_len,
                                   double beta, int n_range, double reach,
                                   int max_count) {
  std::vector<AxisImage> out;
  out.reserve(static_cast<size_t>(2 * n_range + 1) * 2);
  // beta^k lookup up to the largest possible count.
  std::vector<double> bp(static_cast<size_t>(2 * n_range + 3), 1.0);
  for (size_t k = 1; k < bp.size(); ++k) bp[k] = bp[k - 1] * beta;
  for (int n = -n_range; n <= n_range; ++n) {
    for (int parity = 0; parity <= 1; ++parity) {
      const int count = std::abs(2 * n - parity);
      if (count > max_count) continue;
      const double coord = (1 - 2 * parity) * src + 2.0 * n * room_len;
      const double a = coord - mic;
      if (std::fabs(a) > reach) continue;
      out.push_back(AxisImage{a, bp[static_cast<size_t>(count)], count});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const AxisImage& l, const AxisImage& r) { return l.a < r.a; });
  return out;
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::array<double, 3> lerp3(const std::array<double, 3>& a,
                            const std::array<double, 3>& b, double f) {
  return {a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]),
          a[2] + f * (b[2] - a[2])};
}

}  // namespace

RoomSpec room_preset(const std::string& name) {
  if (name == "A") return RoomSpec{{5.0, 5.2, 3.0}, 0.5};
  if (name == "B") return RoomSpec{{6.2, 5.0, 2.5}, 0.7};
  if (name == "C") return RoomSpec{{4.8, 4.2, 2.3}, 0.35};
  throw std::invalid_argument("room_preset: unknown room '" + name + "'");
}

double reflection_from_t60(const RoomSpec& room) {
  const double lx = room.dims[0], ly = room.dims[1], lz = room.dims[2];
  if (!(lx > 0.0 && ly > 0.0 && lz > 0.0)) {
    throw std::invalid_argument("reflection_from_t60: room dimensions must be positive");
  }
  if (!(room.t60 > 0.0)) {
    throw std::invalid_argument("reflection_from_t60: t60 must be positive");
  }
  const double volume = lx * ly * lz;
  const double surface = 2.0 * (lx * ly + lx * lz + ly * lz);
  const double alpha = 1.0 - std::exp(-0.161 * volume / (surface * room.t60));
  if (alpha >= 1.0) {
    throw std::invalid_argument("reflection_from_t60: absorption saturates for this t60");
  }
  return std::sqrt(1.0 - alpha);
}

std::vector<double> rir_image_source(const RoomSpec& room,
                                     const std::array<double, 3>& source,
                                     const MicSpec& mic, double sample_rate,
                                     double speed_of_sound,
                                     const RirOptions& opts) {
  if (!(sample_rate > 0.0) || !(speed_of_sound > 0.0)) {
    throw std::invalid_argument("rir_image_source: bad sample rate or sound speed");
  }
  const double beta = opts.beta ? *opts.beta : reflection_from_t60(room);
  if (beta < 0.0 || beta >= 1.0) {
    throw std::invalid_argument("rir_image_source: beta must be in [0, 1)");
  }

  // Unit look direction.
  std::array<double, 3> o = mic.orientation;
  const double on = std::sqrt(o[0] * o[0] + o[1] * o[1] + o[2] * o[2]);
  if (!(on > 0.0)) throw std::invalid_argument("rir_image_source: zero orientation");
  for (double& v : o) v /= on;

  const double fs_over_c = sample_rate / speed_of_sound;
  size_t len;
  double reach;  // image distances beyond this are inaudible in the RIR
  int max_count;
  if (opts.max_order) {
    if (*opts.max_order < 0) throw std::invalid_argument("rir_image_source: negative order");
    max_count = *opts.max_order;
    const double span = std::max({room.dims[0], room.dims[1], room.dims[2]});
    reach = (static_cast<double>(max_count) + 2.0) * 2.0 * span;
    len = static_cast<size_t>(std::lround(reach * std::sqrt(3.0) * fs_over_c)) + 2;
  } else {
    len = static_cast<size_t>(std::lround(room.t60 * sample_rate)) + 2;
    reach = (static_cast<double>(len) - 0.5) / fs_over_c;
    max_count = std::numeric_limits<int>::max();
  }
  if (opts.min_length) len = std::max(len, *opts.min_length);

  std::vector<double> h(len, 0.0);
  const double r2max = reach * reach;

  std::array<std::vector<AxisImage>, 3> ax;
  for (int d = 0; d < 3; ++d) {
    const int n_range =
        opts.max_order ? (*opts.max_order / 2 + 1)
                       : static_cast<int>(reach / (2.0 * room.dims[static_cast<size_t>(d)])) + 2;
    ax[static_cast<size_t>(d)] = axis_images(
        source[static_cast<size_t>(d)], mic.position[static_cast<size_t>(d)],
        room.dims[static_cast<size_t>(d)], beta, n_range, reach, max_count);
  }
  const auto& xs = ax[0];
  const auto& ys = ax[1];
  const auto& zs = ax[2];  // sorted by coordinate for range pruning

  const bool capped = opts.max_order.has_value();
  const auto last_idx = static_cast<long>(len) - 1;
  for (const AxisImage& ex : xs) {
    const double ax2 = ex.a * ex.a;
    if (ax2 > r2max) continue;
    const double dox = o[0] * ex.a;
    for (const AxisImage& ey : ys) {
      const double sxy = ax2 + ey.a * ey.a;
      if (sxy > r2max) continue;
      if (capped && ex.count + ey.count > max_count) continue;
      const double bxy = ex.bpow * ey.bpow;
      const double dxy = dox + o[1] * ey.a;
      const int cxy = ex.count + ey.count;
      // Only z offsets with |a_z| <= sqrt(r2max - sxy) can contribute.
      const double zr = std::sqrt(r2max - sxy);
      auto lo = std::lower_bound(zs.begin(), zs.end(), -zr,
                                 [](const AxisImage& e, double v) { return e.a < v; });
      for (auto it = lo; it != zs.end() && it->a <= zr; ++it) {
        if (capped && cxy + it->count > max_count) continue;
        const double d2 = sxy + it->a * it->a;
        const double d = std::sqrt(d2);
        if (d < 1e-6) continue;  // source on top of the microphone
        const long idx = std::lround(d * fs_over_c);
        if (idx > last_idx) continue;
        const double dot = dxy + o[2] * it->a;
        // cardioid gain 0.5 (1 + dot/d), amplitude bpow / (4 pi d)
        h[static_cast<size_t>(idx)] +=
            bxy * it->bpow * 0.5 * (d + dot) * kInv4Pi / d2;
      }
    }
  }
  return h;
}

std::array<double, 3> Trajectory::position_at(double t) const {
  if (points.empty()) throw std::logic_error("Trajectory: empty");
  if (t <= points.front().time) return points.front().pos;
  if (t >= points.back().time) return points.back().pos;
  // Find the last waypoint at or before t.
  size_t i = 0;
  size_t lo = 0, hi = points.size() - 1;
  while (lo + 1 < hi) {
    const size_t mid = (lo + hi) / 2;
    if (points[mid].time <= t) lo = mid; else hi = mid;
  }
  i = lo;
  const Waypoint& a = points[i];
  const Waypoint& b = points[i + 1];
  if (!a.lerp_to_next || b.time <= a.time) return a.pos;
  const double f = (t - a.time) / (b.time - a.time);
  return lerp3(a.pos, b.pos, f);
}

Trajectory synth_trajectory(const RoomSpec& room, uint64_t seed,
                            double duration_s,
                            std::span<const std::pair<double, double>> move_windows) {
  if (!(duration_s > 0.0)) throw std::invalid_argument("synth_trajectory: bad duration");
  double prev_end = 0.0;
  for (const auto& w : move_windows) {
    if (!(w.first >= prev_end && w.second > w.first && w.second <= duration_s)) {
      throw std::invalid_argument("synth_trajectory: move windows must be disjoint, "
                                  "increasing, inside [0, duration]");
    }
    prev_end = w.second;
  }

  constexpr double kMargin = 1.0;       // region of interest inset
  constexpr double kJitterSigma = 0.02;
  constexpr double kJitterPeriod = 0.5;

  std::array<double, 3> lo{}, hi{};
  for (size_t d = 0; d < 3; ++d) {
    double m = kMargin;
    if (room.dims[d] <= 2.0 * m) m = room.dims[d] / 4.0;  // tiny room fallback
    lo[d] = m;
    hi[d] = room.dims[d] - m;
  }

  Rng rng(mix_seed(seed, 7));
  auto random_point = [&]() {
    return std::array<double, 3>{rng.uniform(lo[0], hi[0]),
                                 rng.uniform(lo[1], hi[1]),
                                 rng.uniform(lo[2], hi[2])};
  };
  auto jittered = [&](const std::array<double, 3>& p) {
    std::array<double, 3> q;
    for (size_t d = 0; d < 3; ++d) {
      q[d] = std::clamp(p[d] + kJitterSigma * rng.gaussian(), lo[d], hi[d]);
    }
    return q;
  };

  const size_t n_rests = move_windows.size() + 1;
  std::vector<std::array<double, 3>> rests(n_rests);
  for (auto& r : rests) r = random_point();

  Trajectory traj;
  for (size_t r = 0; r < n_rests; ++r) {
    const double start = r == 0 ? 0.0 : move_windows[r - 1].second;
    const double end = r == n_rests - 1 ? duration_s : move_windows[r].first;
    // Jittered holds on a 0.5 s grid across the rest period.
    for (double t = start; t < end - 1e-9; t += kJitterPeriod) {
      traj.points.push_back({t, jittered(rests[r]), false});
    }
    if (traj.points.empty() || traj.points.back().time < end - 1e-9) {
      traj.points.push_back({end, jittered(rests[r]), false});
    }
    // Transit toward the next resting position.
    if (r + 1 < n_rests) traj.points.back().lerp_to_next = true;
  }
  return traj;
}

SignalKind signal_kind_from_name(const std::string& name) {
  if (name == "speechlike") return SignalKind::speechlike;
  if (name == "white") return SignalKind::white;
  if (name == "tone") return SignalKind::tone;
  throw std::invalid_argument("signal_kind_from_name: unknown kind '" + name + "'");
}

namespace {

// Pink noise by spectral shaping: power falls as 1/f above a 50 Hz corner
// and rolls off at 12 dB/oct below it, so the signal carries no infrasonic
// energy (matching the band where speech actually lives).
std::vector<double> pink_noise(size_t n, double sample_rate, Rng& rng) {
  const size_t nfft = next_pow2(n);
  RealFft fft(nfft);
  std::vector<double> white(nfft);
  for (auto& v : white) v = rng.gaussian();
  std::vector<std::complex<double>> spec(nfft / 2 + 1);
  fft.forward(white.data(), spec.data());
  spec[0] = 0.0;
  const double k_lo = std::max(1.0, 50.0 * static_cast<double>(nfft) / sample_rate);
  for (size_t k = 1; k < spec.size(); ++k) {
    const double kd = static_cast<double>(k);
    double amp = 1.0 / std::sqrt(std::max(kd, k_lo));
    if (kd < k_lo) amp *= (kd / k_lo) * (kd / k_lo);
    spec[k] *= amp;
  }
  std::vector<double> out(nfft);
  fft.inverse(spec.data(), out.data());
  out.resize(n);
  return out;
}

void scale_to_unit_peak(std::vector<double>& x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0) {
    const double g = 1.0 / peak;
    for (double& v : x) v *= g;
  }
}

}  // namespace

std::vector<double> test_signal(SignalKind kind, double duration_s,
                                double sample_rate, uint64_t seed) {
  if (!(duration_s > 0.0) || !(sample_rate > 0.0)) {
    throw std::invalid_argument("test_signal: bad duration or sample rate");
  }
  const size_t n = static_cast<size_t>(std::lround(duration_s * sample_rate));
  std::vector<double> x(n);
  Rng rng(mix_seed(seed, 11));

  switch (kind) {
    case SignalKind::white: {
      for (auto& v : x) v = rng.gaussian();
      scale_to_unit_peak(x);
      break;
    }
    case SignalKind::tone: {
      const double f = 440.0;
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      for (size_t i = 0; i < n; ++i) {
        x[i] = std::sin(2.0 * M_PI * f * static_cast<double>(i) / sample_rate + phase);
      }
      break;
    }
    case SignalKind::speechlike: {
      x = pink_noise(n, sample_rate, rng);
      // Amplitude modulation: a handful of 2-8 Hz components with random
      // phases, mapped to about 30 dB of level swing.
      constexpr int kComponents = 5;
      std::array<double, kComponents> freq{}, phase{};
      for (int j = 0; j < kComponents; ++j) {
        freq[j] = rng.uniform(2.0, 8.0);
        phase[j] = rng.uniform(0.0, 2.0 * M_PI);
      }
      constexpr double kDepthDb = 30.0;
      for (size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        double mrm = 0.0;
        for (int j = 0; j < kComponents; ++j) {
          mrm += std::cos(2.0 * M_PI * freq[j] * t + phase[j]);
        }
        mrm /= kComponents;  // roughly [-1, 1]
        x[i] *= std::pow(10.0, kDepthDb / 40.0 * (mrm - 1.0));
      }
      // Pauses of 0.2-0.5 s between bursts of 0.8-2.0 s, with 10 ms
      // cosine edges to avoid clicks.
      const size_t ramp = static_cast<size_t>(0.010 * sample_rate);
      size_t pos = 0;
      bool in_burst = true;
      while (pos < n) {
        const double seg_s = in_burst ? rng.uniform(0.8, 2.0) : rng.uniform(0.2, 0.5);
        const size_t seg = std::min(n - pos, static_cast<size_t>(seg_s * sample_rate));
        if (!in_burst) {
          for (size_t i = 0; i < seg; ++i) {
            double g = 0.0;
            if (i < ramp) {
              g = 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(i) / ramp));
            } else if (seg - i <= ramp) {
              g = 0.5 * (1.0 - std::cos(M_PI * static_cast<double>(ramp - (seg - i)) / ramp));
            }
            x[pos + i] *= g;
          }
        }
        pos += seg;
        in_burst = !in_burst;
      }
      scale_to_unit_peak(x);
      break;
    }
  }
  return x;
}

std::vector<MicSpec> place_random_mics(const RoomSpec& room, size_t n_mics,
                                       uint64_t seed) {
  if (n_mics == 0) throw std::invalid_argument("place_random_mics: need >= 1 mic");
  constexpr double kMargin = 0.25;
  Rng rng(mix_seed(seed, 23));
  std::vector<MicSpec> mics(n_mics);
  for (auto& m : mics) {
    for (size_t d = 0; d < 3; ++d) {
      double margin = kMargin;
      if (room.dims[d] <= 2.0 * margin) margin = room.dims[d] / 4.0;
      m.position[d] = rng.uniform(margin, room.dims[d] - margin);
    }
    const double az = rng.uniform(0.0, 2.0 * M_PI);
    m.orientation = {std::cos(az), std::sin(az), 0.0};
  }
  return mics;
}

RenderResult render_scene(const Scene& scene, size_t hop) {
  const size_t n = scene.source.size();
  if (n == 0) throw std::invalid_argument("render_scene: empty source");
  if (scene.mics.empty()) throw std::invalid_argument("render_scene: no microphones");
  if (hop == 0) throw std::invalid_argument("render_scene: hop must be >= 1");
  const double fs = scene.sample_rate;

  const size_t rir_len =
      static_cast<size_t>(std::lround(scene.room.t60 * fs)) + 2;
  const size_t nfft = next_pow2(hop + rir_len - 1);
  const size_t bins = nfft / 2 + 1;
  RealFft fft(nfft);

  const size_t n_mics = scene.mics.size();
  const size_t n_hops = (n + hop - 1) / hop;
  RenderResult out;
  out.mics.assign(n_mics, std::vector<double>(n + nfft, 0.0));

  std::vector<std::array<double, 3>> cached_pos(n_mics,
                                                {-1e30, -1e30, -1e30});
  RirOptions rir_opts;
  rir_opts.min_length = rir_len;
  std::vector<std::vector<std::complex<double>>> rir_spec(
      n_mics, std::vector<std::complex<double>>(bins));
  std::vector<double> padded(nfft, 0.0);
  std::vector<std::complex<double>> part_spec(bins);
  std::vector<std::complex<double>> prod(bins);
  std::vector<double> seg(nfft);

  for (size_t h = 0; h < n_hops; ++h) {
    const size_t start = h * hop;
    const size_t m = std::min(hop, n - start);
    bool silent = true;
    for (size_t i = 0; i < m; ++i) {
      if (scene.source[start + i] != 0.0) { silent = false; break; }
    }
    if (silent) continue;

    const std::array<double, 3> pos =
        scene.trajectory.position_at(static_cast<double>(start) / fs);

    std::fill(padded.begin(), padded.end(), 0.0);
    std::copy_n(scene.source.begin() + static_cast<long>(start), m, padded.begin());
    fft.forward(padded.data(), part_spec.data());

    for (size_t mic = 0; mic < n_mics; ++mic) {
      if (pos != cached_pos[mic]) {
        const auto rir = rir_image_source(scene.room, pos, scene.mics[mic], fs,
                                          scene.speed_of_sound, rir_opts);
        std::fill(padded.begin(), padded.end(), 0.0);
        std::copy_n(rir.begin(), std::min(rir.size(), nfft), padded.begin());
        fft.forward(padded.data(), rir_spec[mic].data());
        cached_pos[mic] = pos;
      }
      for (size_t k = 0; k < bins; ++k) prod[k] = part_spec[k] * rir_spec[mic][k];
      fft.inverse(prod.data(), seg.data());
      double* dst = out.mics[mic].data() + start;
      for (size_t i = 0; i < nfft; ++i) dst[i] += seg[i];
    }
  }

  // Level convention: scale so the strongest clean channel sits at a
  // recording-like RMS, then add equal-level noise for the target SNR.
  double max_rms = 0.0;
  for (auto& ch : out.mics) {
    double e = 0.0;
    for (size_t i = 0; i < n; ++i) e += ch[i] * ch[i];
    max_rms = std::max(max_rms, std::sqrt(e / static_cast<double>(n)));
  }
  if (!(max_rms > 0.0)) {
    throw std::invalid_argument("render_scene: silent scene (all-zero source images)");
  }
  out.scale = kTargetRms / max_rms;
  out.noise_std = kTargetRms * std::pow(10.0, -scene.snr_db / 20.0);

  out.source.resize(n);
  for (size_t i = 0; i < n; ++i) out.source[i] = scene.source[i] * out.scale;
  for (size_t mic = 0; mic < n_mics; ++mic) {
    auto& ch = out.mics[mic];
    ch.resize(n);
    Rng noise(mix_seed(scene.seed, 1000 + mic));
    for (size_t i = 0; i < n; ++i) {
      ch[i] = ch[i] * out.scale + out.noise_std * noise.gaussian();
    }
  }
  return out;
}

double schroeder_t60(std::span<const double> rir, double sample_rate) {
  const size_t n = rir.size();
  if (n < 8 || !(sample_rate > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  // The image-source train is all-positive, so dense late arrivals
  // accumulate a coherent low-frequency component that no band-limited
  // measurement would register. Decay is therefore fitted on a
  // high-passed copy (2nd order Butterworth, 200 Hz), like physical
  // T60 measurements.
  std::vector<double> h(n);
  {
    const double w0 = 2.0 * M_PI * 200.0 / sample_rate;
    const double cw = std::cos(w0), sw = std::sin(w0);
    const double alpha = sw / std::sqrt(2.0);
    const double a0 = 1.0 + alpha;
    const double b0 = (1.0 + cw) / 2.0 / a0, b1 = -(1.0 + cw) / a0,
                 b2 = (1.0 + cw) / 2.0 / a0;
    const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha) / a0;
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double y = b0 * rir[i] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = rir[i];
      y2 = y1;
      y1 = y;
      h[i] = y;
    }
  }

  std::vector<double> edc(n);
  double acc = 0.0;
  for (size_t i = n; i-- > 0;) {
    acc += h[i] * h[i];
    edc[i] = acc;
  }
  if (!(edc[0] > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  // Fit the early decay (-2 dB to -12 dB): past the direct-sound step,
  // and ahead of the sub-exponential geometric tail that axial image
  // families give every shoebox image field.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  size_t cnt = 0;
  for (size_t i = 0; i < n; ++i) {
    if (edc[i] <= 0.0) break;
    const double db = 10.0 * std::log10(edc[i] / edc[0]);
    if (db > -2.0) continue;
    if (db < -12.0) break;
    const double t = static_cast<double>(i) / sample_rate;
    sx += t;
    sy += db;
    sxx += t * t;
    sxy += t * db;
    ++cnt;
  }
  if (cnt < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = static_cast<double>(cnt) * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double slope = (static_cast<double>(cnt) * sxy - sx * sy) / denom;
  if (!(slope < 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return -60.0 / slope;
}

}  // namespace micutil
