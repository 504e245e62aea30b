#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace micutil {

// Shoebox room acoustics via the image-source method, plus the moving
// source scenes used by the evaluation harness. All randomness is
// seeded; the same scene seed reproduces every sample bit for bit.

struct RoomSpec {
  std::array<double, 3> dims{5.0, 5.2, 3.0};  // meters
  double t60 = 0.5;                           // seconds
};

// Canonical room presets used by the evaluation protocol.
RoomSpec room_preset(const std::string& name);  // "A", "B", "C"

struct MicSpec {
  std::array<double, 3> position{};
  // Cardioid look direction (horizontal in the generated scenes);
  // normalized internally. Gain 0.5 (1 + cos angle-of-arrival).
  std::array<double, 3> orientation{1.0, 0.0, 0.0};
};

// Uniform wall reflection coefficient reproducing the requested decay
// time (Eyring): beta = sqrt(1 - alpha), alpha = 1 - exp(-0.161 V / (S T60)).
// Throws std::invalid_argument when t60 is non-positive or so small
// the absorption saturates at 1.
double reflection_from_t60(const RoomSpec& room);

struct RirOptions {
  // Cap on the total reflection count. When unset, enough images are
  // taken that the covered distance reaches c * t60 (full tail).
  std::optional<int> max_order;
  // Wall coefficient override (e.g. 0 for anechoic); default Eyring.
  std::optional<double> beta;
  // Pad the result to at least this many samples.
  std::optional<size_t> min_length;
};

// Impulse response from a static source to one cardioid microphone.
// Image amplitudes are beta^reflections / (4 pi d) gated by the
// cardioid gain; fractional delays round to the nearest sample.
std::vector<double> rir_image_source(const RoomSpec& room,
                                     const std::array<double, 3>& source,
                                     const MicSpec& mic, double sample_rate,
                                     double speed_of_sound = 343.0,
                                     const RirOptions& opts = {});

// Source path: rest at randomized positions inside the room inset by a
// 1 m margin, with small Gaussian jitter (sigma 2 cm, refreshed every
// 0.5 s and held in between), and a straight-line transit across each
// move window. move_windows must be disjoint, increasing, inside
// [0, duration].
struct Trajectory {
  struct Waypoint {
    double time;
    std::array<double, 3> pos;
    bool lerp_to_next;  // interpolate toward the next waypoint (transit)
  };
  std::vector<Waypoint> points;

  std::array<double, 3> position_at(double t) const;
};

Trajectory synth_trajectory(const RoomSpec& room, uint64_t seed,
                            double duration_s,
                            std::span<const std::pair<double, double>> move_windows);

enum class SignalKind { speechlike, white, tone };
SignalKind signal_kind_from_name(const std::string& name);

// Unit-peak test source. speechlike: pink noise, 2-8 Hz amplitude
// modulation (about 30 dB depth) and 0.2-0.5 s pauses between bursts.
std::vector<double> test_signal(SignalKind kind, double duration_s,
                                double sample_rate, uint64_t seed);

struct Scene {
  RoomSpec room;
  std::vector<MicSpec> mics;
  Trajectory trajectory;
  std::vector<double> source;  // dry source samples
  double sample_rate = 16000.0;
  double snr_db = 10.0;
  uint64_t seed = 1;  // drives the additive noise streams
  double speed_of_sound = 343.0;
};

// Random microphone layout: positions inset 0.25 m from the walls,
// orientations uniform horizontal azimuths.
std::vector<MicSpec> place_random_mics(const RoomSpec& room, size_t n_mics,
                                       uint64_t seed);

struct RenderResult {
  std::vector<std::vector<double>> mics;  // per channel, source images + noise
  std::vector<double> source;             // dry source after level scaling
  double scale = 1.0;      // applied so the strongest clean channel has
                           // RMS kTargetRms (recording-like level)
  double noise_std = 0.0;  // per-channel noise level for the target SNR
};

inline constexpr double kTargetRms = 0.05;

// Renders the moving-source scene: the room impulse response is
// refreshed at every 512-sample hop where the source position changed,
// each dry-signal partition is convolved with the current response,
// and equal-level white noise is added to all channels so the channel
// with the strongest source image sits at scene.snr_db. Throws on an
// all-zero source.
RenderResult render_scene(const Scene& scene, size_t hop = 512);

// Decay time from the backward-integrated energy curve of a 200 Hz
// high-passed copy (the all-positive impulse train otherwise carries a
// nonphysical coherent low-frequency tail), fitted by least squares
// over the early decay, -2 dB to -12 dB. NaN for degenerate input.
double schroeder_t60(std::span<const double> rir, double sample_rate);

}  // namespace micutil
