#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "micutil/msc_oracle.hpp"
#include "micutil/rng.hpp"
#include "micutil/scene_sim.hpp"
#include "micutil/signal_features.hpp"

using namespace micutil;

namespace {

double dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double rms(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return std::sqrt(e / static_cast<double>(x.size()));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) { ma += a[i]; mb += b[i]; }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("room presets carry the protocol dimensions") {
  const RoomSpec a = room_preset("A");
  CHECK(a.dims == std::array<double, 3>{5.0, 5.2, 3.0});
  CHECK(a.t60 == 0.5);
  const RoomSpec b = room_preset("B");
  CHECK(b.dims == std::array<double, 3>{6.2, 5.0, 2.5});
  CHECK(b.t60 == 0.7);
  const RoomSpec c = room_preset("C");
  CHECK(c.dims == std::array<double, 3>{4.8, 4.2, 2.3});
  CHECK(c.t60 == 0.35);
  CHECK_THROWS_AS(room_preset("D"), std::invalid_argument);
}

TEST_CASE("wall reflection reproduces the decay-time formula") {
  for (const char* name : {"A", "B", "C"}) {
    const RoomSpec room = room_preset(name);
    const double beta = reflection_from_t60(room);
    CHECK(beta > 0.0);
    CHECK(beta < 1.0);

    // Independent evaluation of the same absorption model.
    const double v = room.dims[0] * room.dims[1] * room.dims[2];
    const double s = 2.0 * (room.dims[0] * room.dims[1] +
                            room.dims[0] * room.dims[2] +
                            room.dims[1] * room.dims[2]);
    const double alpha = 1.0 - std::exp(-0.161 * v / (s * room.t60));
    CHECK(beta == doctest::Approx(std::sqrt(1.0 - alpha)).epsilon(1e-12));
  }

  RoomSpec longer = room_preset("A");
  longer.t60 = 1.0;
  CHECK(reflection_from_t60(longer) > reflection_from_t60(room_preset("A")));
  longer.t60 = 100.0;
  CHECK(reflection_from_t60(longer) > 0.99);

  RoomSpec bad = room_preset("A");
  bad.t60 = 0.0;
  CHECK_THROWS_AS(reflection_from_t60(bad), std::invalid_argument);
  bad.t60 = 1e-6;  // absorption saturates
  CHECK_THROWS_AS(reflection_from_t60(bad), std::invalid_argument);
}

TEST_CASE("anechoic response is a single scaled pulse") {
  const RoomSpec room = room_preset("A");
  const std::array<double, 3> src{1.0, 2.0, 1.5};
  MicSpec mic;
  mic.position = {3.5, 3.0, 1.5};
  mic.orientation = {1.0, 0.0, 0.0};
  const double fs = 16000.0, c = 343.0;

  RirOptions opts;
  opts.beta = 0.0;  // no reflections survive
  const auto rir = rir_image_source(room, src, mic, fs, c, opts);

  const double d = dist(src, mic.position);
  const size_t n0 = static_cast<size_t>(std::llround(fs * d / c));
  // Arrival from -x relative to the look direction: cos = (1 - 3.5)/d.
  const double cosang = (src[0] - mic.position[0]) / d;
  const double expect = 0.5 * (1.0 + cosang) / (4.0 * M_PI * d);

  REQUIRE(rir.size() > n0);
  CHECK(rir[n0] == doctest::Approx(expect).epsilon(1e-12));
  for (size_t i = 0; i < rir.size(); ++i) {
    if (i != n0) CHECK(rir[i] == 0.0);
  }
}

TEST_CASE("cardioid null rejects arrivals from behind") {
  // Axis-aligned geometry: source exactly behind the look direction
  // gives cos = -1, so the direct pulse is exactly zero.
  const RoomSpec room = room_preset("A");
  MicSpec mic;
  mic.position = {2.0, 2.6, 1.5};
  mic.orientation = {1.0, 0.0, 0.0};
  const std::array<double, 3> behind{1.0, 2.6, 1.5};
  const std::array<double, 3> front{3.0, 2.6, 1.5};

  RirOptions opts;
  opts.beta = 0.0;
  const auto rear = rir_image_source(room, behind, mic, 16000.0, 343.0, opts);
  const auto fore = rir_image_source(room, front, mic, 16000.0, 343.0, opts);

  const double rear_peak = *std::max_element(rear.begin(), rear.end());
  const double fore_peak = *std::max_element(fore.begin(), fore.end());
  CHECK(rear_peak == 0.0);
  CHECK(fore_peak > 0.0);
  // Null depth as a ratio: at least 40 dB down (here: exactly zero).
  CHECK(20.0 * std::log10(fore_peak / std::max(rear_peak, 1e-30)) >= 40.0);
}

TEST_CASE("first-order images land at the mirrored positions") {
  // Hand-enumerated order-1 images of a shoebox: one reflection per
  // wall, amplitude beta / (4 pi d), omnidirectional-equivalent check
  // via a cardioid pointed to make every arrival fall on the front lobe
  // is brittle; instead each image is verified through its own delay
  // bin and the cardioid gain computed from the known image position.
  const RoomSpec room{{4.1, 4.7, 5.3}, 0.5};
  const std::array<double, 3> src{0.8, 1.3, 2.9};
  MicSpec mic;
  mic.position = {2.9, 2.1, 1.2};
  mic.orientation = {0.0, 1.0, 0.0};
  const double fs = 48000.0, c = 343.0;
  const double beta = 0.5;

  RirOptions opts;
  opts.beta = beta;
  opts.max_order = 1;
  const auto rir = rir_image_source(room, src, mic, fs, c, opts);

  struct Image {
    std::array<double, 3> pos;
    int order;
  };
  const std::vector<Image> images = {
      {{0.8, 1.3, 2.9}, 0},    // direct
      {{-0.8, 1.3, 2.9}, 1},   // x = 0 wall
      {{7.4, 1.3, 2.9}, 1},    // x = 4.1 wall
      {{0.8, -1.3, 2.9}, 1},   // y = 0 wall
      {{0.8, 8.1, 2.9}, 1},    // y = 4.7 wall
      {{0.8, 1.3, -2.9}, 1},   // z = 0 wall
      {{0.8, 1.3, 7.7}, 1},    // z = 5.3 wall
  };

  std::vector<double> expect(rir.size(), 0.0);
  for (const auto& im : images) {
    const double d = dist(im.pos, mic.position);
    const size_t n0 = static_cast<size_t>(std::llround(fs * d / c));
    REQUIRE(n0 < expect.size());
    double cosang = 0.0;
    for (int k = 0; k < 3; ++k) {
      cosang += (im.pos[k] - mic.position[k]) * mic.orientation[k];
    }
    cosang /= d;
    expect[n0] += std::pow(beta, im.order) * 0.5 * (1.0 + cosang) /
                  (4.0 * M_PI * d);
  }

  size_t nonzero = 0;
  for (size_t i = 0; i < rir.size(); ++i) {
    CHECK(rir[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    if (expect[i] != 0.0) ++nonzero;
  }
  CHECK(nonzero == 7);
}

TEST_CASE("pulse amplitude follows inverse distance") {
  const RoomSpec room{{20.0, 4.0, 3.0}, 0.5};
  MicSpec near_mic, far_mic;
  near_mic.position = {3.0, 2.0, 1.5};
  far_mic.position = {5.0, 2.0, 1.5};
  near_mic.orientation = far_mic.orientation = {1.0, 0.0, 0.0};
  const std::array<double, 3> src{1.0, 2.0, 1.5};

  RirOptions opts;
  opts.beta = 0.0;
  const auto a = rir_image_source(room, src, near_mic, 16000.0, 343.0, opts);
  const auto b = rir_image_source(room, src, far_mic, 16000.0, 343.0, opts);
  const double pa = *std::min_element(a.begin(), a.end());  // rear lobe: zero
  CHECK(pa == 0.0);
  // Both arrivals come from -x (behind): gain 0. Flip to face the source.
  near_mic.orientation = far_mic.orientation = {-1.0, 0.0, 0.0};
  const auto a2 = rir_image_source(room, src, near_mic, 16000.0, 343.0, opts);
  const auto b2 = rir_image_source(room, src, far_mic, 16000.0, 343.0, opts);
  const double peak_near = *std::max_element(a2.begin(), a2.end());
  const double peak_far = *std::max_element(b2.begin(), b2.end());
  // Distances 2 m and 4 m with full-lobe gain: exact factor 2.
  CHECK(peak_near == doctest::Approx(2.0 * peak_far).epsilon(1e-12));
}

TEST_CASE("rir length covers the decay time") {
  const RoomSpec room = room_preset("B");
  MicSpec mic;
  mic.position = {3.0, 2.0, 1.2};
  const std::array<double, 3> src{1.5, 3.5, 1.8};
  const auto rir = rir_image_source(room, src, mic, 16000.0);
  CHECK(rir.size() >= static_cast<size_t>(0.95 * room.t60 * 16000.0));
}

TEST_CASE("backward-integrated decay recovers preset reverberation times") {
  // Median over a few random source/mic pairs per room; the image model
  // with the Eyring coefficient should land within 20 percent.
  for (const char* name : {"A", "B", "C"}) {
    const RoomSpec room = room_preset(name);
    std::vector<double> estimates;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
      const auto mics = place_random_mics(room, 2, seed);
      const std::array<double, 3> src = mics[1].position;
      const auto rir = rir_image_source(room, src, mics[0], 16000.0);
      const double t = schroeder_t60(rir, 16000.0);
      if (std::isfinite(t)) estimates.push_back(t);
    }
    REQUIRE(estimates.size() >= 3);
    std::sort(estimates.begin(), estimates.end());
    const double median = estimates[estimates.size() / 2];
    CAPTURE(name);
    CHECK(median >= 0.8 * room.t60);
    CHECK(median <= 1.2 * room.t60);
  }
}

TEST_CASE("synthetic exponential decay calibrates the estimator") {
  // rir[n] = pulse train with exp(-6.9 t / t60) envelope has a -60 dB
  // time of exactly t60.
  const double fs = 16000.0, t60 = 0.4;
  const double tau = 6.907755278982137 / t60;  // ln(1e3): 60 dB in amplitude
  std::vector<double> rir(static_cast<size_t>(fs * t60 * 1.5));
  Rng rng(5);
  for (size_t n = 0; n < rir.size(); ++n) {
    const double t = static_cast<double>(n) / fs;
    rir[n] = std::exp(-tau * t) * rng.gaussian();
  }
  const double est = schroeder_t60(rir, fs);
  CHECK(est == doctest::Approx(t60).epsilon(0.10));

  std::vector<double> silence(1000, 0.0);
  CHECK(std::isnan(schroeder_t60(silence, fs)));
}

TEST_CASE("trajectory stays inside the room and rests between moves") {
  const RoomSpec room = room_preset("A");
  const std::pair<double, double> window{8.0, 10.0};
  const std::vector<std::pair<double, double>> windows{window};

  for (uint64_t seed = 1; seed <= 1000; ++seed) {
    const Trajectory traj = synth_trajectory(room, seed, 20.0, windows);
    REQUIRE(!traj.points.empty());
    for (double t : {0.0, 4.0, 7.99, 8.5, 9.5, 10.01, 15.0, 20.0}) {
      const auto p = traj.position_at(t);
      // Rest anchors sit 1 m off the walls; the 2 cm jitter never
      // plausibly eats more than 10 cm of that margin.
      for (int k = 0; k < 3; ++k) {
        CHECK(p[k] >= 0.9);
        CHECK(p[k] <= room.dims[k] - 0.9);
      }
    }
  }
}

TEST_CASE("trajectory is deterministic and hop-continuous") {
  const RoomSpec room = room_preset("B");
  const std::vector<std::pair<double, double>> windows{{8.0, 10.0}};
  const Trajectory t1 = synth_trajectory(room, 42, 20.0, windows);
  const Trajectory t2 = synth_trajectory(room, 42, 20.0, windows);
  REQUIRE(t1.points.size() == t2.points.size());
  for (size_t i = 0; i < t1.points.size(); ++i) {
    CHECK(t1.points[i].time == t2.points[i].time);
    CHECK(t1.points[i].pos == t2.points[i].pos);
  }

  const double hop_s = 512.0 / 16000.0;
  auto prev = t1.position_at(0.0);
  for (double t = hop_s; t <= 20.0; t += hop_s) {
    const auto p = t1.position_at(t);
    CHECK(dist(prev, p) < 0.5);
    prev = p;
  }
}

TEST_CASE("resting source only jitters around its anchor") {
  const RoomSpec room = room_preset("A");
  const std::vector<std::pair<double, double>> windows{{8.0, 10.0}};
  const Trajectory traj = synth_trajectory(room, 7, 20.0, windows);
  const auto anchor = traj.position_at(0.0);
  for (double t = 0.0; t < 7.5; t += 0.25) {
    CHECK(dist(anchor, traj.position_at(t)) < 0.15);
  }
  // The move window actually relocates the source.
  CHECK(dist(traj.position_at(8.0), traj.position_at(10.0)) > 0.3);
}

TEST_CASE("test signals are deterministic unit-peak") {
  for (SignalKind kind : {SignalKind::speechlike, SignalKind::white,
                          SignalKind::tone}) {
    const auto a = test_signal(kind, 2.0, 16000.0, 9);
    const auto b = test_signal(kind, 2.0, 16000.0, 9);
    CHECK(a == b);
    double peak = 0.0;
    for (double v : a) peak = std::max(peak, std::fabs(v));
    // The tone is a raw sampled sine; its grid never lands exactly on the
    // crest, so give it a looser peak tolerance than the normalized kinds.
    const double tol = kind == SignalKind::tone ? 1e-4 : 1e-9;
    CHECK(peak == doctest::Approx(1.0).epsilon(tol));
    CHECK(a.size() == 32000);
  }
}

TEST_CASE("speechlike signal has bursts, pauses, and a sloped spectrum") {
  const double fs = 16000.0;
  const auto x = test_signal(SignalKind::speechlike, 10.0, fs, 3);

  // 50 ms RMS envelope: deep modulation and real pauses.
  const size_t win = 800;
  std::vector<double> env;
  for (size_t s = 0; s + win <= x.size(); s += win) {
    env.push_back(rms(std::span<const double>(x).subspan(s, win)));
  }
  std::vector<double> sorted_env = env;
  std::sort(sorted_env.begin(), sorted_env.end());
  const double p10 = sorted_env[env.size() / 10];
  const double p90 = sorted_env[env.size() * 9 / 10];
  CHECK(20.0 * std::log10(p90 / std::max(p10, 1e-12)) > 6.0);
  size_t quiet = 0;
  for (double e : env) {
    if (e < 0.05 * p90) ++quiet;
  }
  CHECK(quiet >= env.size() / 50);

  // Average magnitude spectrum falls with frequency above the corner.
  FeatureExtractor fx(1024, FeatureMask::all());
  std::vector<double> avg(513, 0.0);
  size_t n_blocks = 0;
  for (const auto& blk : frame_signal(x, 1024, 1024)) {
    fx.process(blk);
    const auto& mag = fx.last_spectrum();
    for (size_t k = 0; k < avg.size(); ++k) avg[k] += mag[k];
    ++n_blocks;
  }
  const auto band_mean = [&](double lo_hz, double hi_hz) {
    const size_t klo = static_cast<size_t>(lo_hz / fs * 1024.0);
    const size_t khi = static_cast<size_t>(hi_hz / fs * 1024.0);
    double acc = 0.0;
    for (size_t k = klo; k < khi; ++k) acc += avg[k];
    return acc / static_cast<double>(khi - klo);
  };
  CHECK(band_mean(100.0, 500.0) > 2.0 * band_mean(2000.0, 6000.0));
  // No infrasonic pile-up: the lowest bins stay below the speech band.
  CHECK(band_mean(0.0, 40.0) < band_mean(100.0, 500.0));
}

TEST_CASE("tone signal concentrates at 440 hz") {
  const auto x = test_signal(SignalKind::tone, 2.0, 16000.0, 1);
  FeatureExtractor fx(1024, FeatureMask::all());
  const auto blocks = frame_signal(x, 1024, 512);
  FeatureFrame f;
  for (const auto& blk : blocks) f = fx.process(blk);
  const double centroid_hz = f.values[static_cast<int>(FeatureId::sd_centroid)] *
                             16000.0 / 2.0;
  CHECK(std::fabs(centroid_hz - 440.0) < 16000.0 / 1024.0);
}

TEST_CASE("microphone placement respects the wall margin") {
  for (const char* name : {"A", "B", "C"}) {
    const RoomSpec room = room_preset(name);
    const auto mics = place_random_mics(room, 10, 77);
    REQUIRE(mics.size() == 10);
    for (const auto& m : mics) {
      for (int k = 0; k < 3; ++k) {
        CHECK(m.position[k] >= 0.25);
        CHECK(m.position[k] <= room.dims[k] - 0.25);
      }
      // Horizontal unit orientation.
      const double nrm = std::sqrt(m.orientation[0] * m.orientation[0] +
                                   m.orientation[1] * m.orientation[1] +
                                   m.orientation[2] * m.orientation[2]);
      CHECK(nrm == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(m.orientation[2] == 0.0);
    }
  }
  const auto a = place_random_mics(room_preset("A"), 4, 5);
  const auto b = place_random_mics(room_preset("A"), 4, 5);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(a[i].position == b[i].position);
    CHECK(a[i].orientation == b[i].orientation);
  }
}

namespace {

Scene small_scene(const std::string& room_name, uint64_t seed,
                  double duration_s, double snr_db) {
  Scene scene;
  scene.room = room_preset(room_name);
  scene.mics = place_random_mics(scene.room, 4, seed);
  scene.trajectory = synth_trajectory(scene.room, seed, duration_s, {});
  scene.source = test_signal(SignalKind::white, duration_s, 16000.0, seed);
  scene.snr_db = snr_db;
  scene.seed = seed;
  return scene;
}

}  // namespace

TEST_CASE("render calibrates level and noise to the requested snr") {
  Scene scene = small_scene("A", 11, 4.0, 10.0);
  const RenderResult noisy = render_scene(scene);

  // A second render at an extreme SNR isolates the clean source images.
  Scene clean_scene = scene;
  clean_scene.snr_db = 200.0;
  const RenderResult clean = render_scene(clean_scene);
  REQUIRE(clean.mics.size() == 4);

  // Same geometry and scaling: the clean channels are the noisy ones
  // minus their noise, so the calibration target shows directly.
  double strongest = 0.0;
  for (const auto& ch : clean.mics) strongest = std::max(strongest, rms(ch));
  CHECK(strongest == doctest::Approx(kTargetRms).epsilon(1e-6));
  CHECK(noisy.scale == doctest::Approx(clean.scale).epsilon(1e-12));

  // Empirical SNR on the strongest channel: subtract the clean part.
  size_t strongest_idx = 0;
  double best = 0.0;
  for (size_t c = 0; c < clean.mics.size(); ++c) {
    if (rms(clean.mics[c]) > best) {
      best = rms(clean.mics[c]);
      strongest_idx = c;
    }
  }
  std::vector<double> noise(noisy.mics[strongest_idx].size());
  for (size_t i = 0; i < noise.size(); ++i) {
    noise[i] = noisy.mics[strongest_idx][i] - clean.mics[strongest_idx][i];
  }
  const double snr_db =
      20.0 * std::log10(rms(clean.mics[strongest_idx]) / rms(noise));
  CHECK(std::fabs(snr_db - 10.0) < 0.5);
  CHECK(noisy.noise_std ==
        doctest::Approx(kTargetRms * std::pow(10.0, -0.5)).epsilon(1e-9));
}

TEST_CASE("noise streams are independent across channels") {
  Scene scene = small_scene("A", 13, 4.0, -40.0);  // noise dominates
  const RenderResult r = render_scene(scene);
  for (size_t a = 0; a < r.mics.size(); ++a) {
    for (size_t b = a + 1; b < r.mics.size(); ++b) {
      CHECK(std::fabs(pearson(r.mics[a], r.mics[b])) < 0.05);
    }
  }
}

TEST_CASE("render is deterministic") {
  Scene scene = small_scene("C", 17, 2.0, 10.0);
  const RenderResult r1 = render_scene(scene);
  const RenderResult r2 = render_scene(scene);
  REQUIRE(r1.mics.size() == r2.mics.size());
  for (size_t c = 0; c < r1.mics.size(); ++c) {
    CHECK(r1.mics[c] == r2.mics[c]);
  }
  CHECK(r1.source == r2.source);
  CHECK(r1.scale == r2.scale);
  CHECK(r1.noise_std == r2.noise_std);
}

TEST_CASE("closer microphone hears more coherent signal") {
  // Low reverberation, one mic near the static source, one far.
  Scene scene;
  scene.room = RoomSpec{{6.0, 5.0, 3.0}, 0.15};
  scene.trajectory.points.push_back({0.0, {1.0, 2.5, 1.5}, false});
  MicSpec near_mic, far_mic;
  near_mic.position = {1.6, 2.5, 1.5};
  near_mic.orientation = {-1.0, 0.0, 0.0};
  far_mic.position = {5.5, 4.5, 2.5};
  far_mic.orientation = {-1.0, 0.0, 0.0};
  scene.mics = {near_mic, far_mic};
  scene.source = test_signal(SignalKind::white, 6.0, 16000.0, 19);
  scene.snr_db = 10.0;
  scene.seed = 19;

  const RenderResult r = render_scene(scene);
  PsdState psd(2, PsdConfig{0.9, 1024});
  const auto src_blocks = frame_signal(r.source, 1024, 512);
  const auto b0 = frame_signal(r.mics[0], 1024, 512);
  const auto b1 = frame_signal(r.mics[1], 1024, 512);
  for (size_t l = 0; l < src_blocks.size(); ++l) {
    std::vector<std::span<const double>> mb{b0[l].samples, b1[l].samples};
    psd.update(src_blocks[l].samples, mb);
  }
  const auto gamma = psd.msc();
  CHECK(gamma[0] > gamma[1]);
  CHECK(gamma[0] > 0.5);
}

TEST_CASE("moving source changes the rendered signal") {
  Scene still = small_scene("A", 23, 4.0, 10.0);
  Scene moving = still;
  moving.trajectory =
      synth_trajectory(moving.room, 23, 4.0,
                       std::vector<std::pair<double, double>>{{1.0, 2.5}});
  const RenderResult r1 = render_scene(still);
  const RenderResult r2 = render_scene(moving);
  // Identical noise seed: any difference comes from the source path.
  double diff = 0.0;
  for (size_t i = 0; i < r1.mics[0].size(); ++i) {
    diff = std::max(diff, std::fabs(r1.mics[0][i] - r2.mics[0][i]));
  }
  CHECK(diff > 1e-6);
  for (const auto& ch : r2.mics) {
    for (double v : ch) CHECK(std::isfinite(v));
  }
}

TEST_CASE("render rejects an all-zero source") {
  Scene scene = small_scene("A", 29, 1.0, 10.0);
  std::fill(scene.source.begin(), scene.source.end(), 0.0);
  CHECK_THROWS_AS(render_scene(scene), std::invalid_argument);
}
