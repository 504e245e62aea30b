#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "micutil/feature_tracker.hpp"
#include "micutil/lasso.hpp"
#include "micutil/node_framing.hpp"
#include "micutil/scene_sim.hpp"
#include "micutil/signal_features.hpp"

namespace micutil {

// Batch evaluation harness: renders randomized scenes, runs the
// node-side feature extraction and the estimation chain, and scores
// the per-frame utility vector against the coherence ground truth.

struct RoomConfig {
  std::string name;  // label used in reports; presets "A"/"B"/"C"
  RoomSpec spec;
};

struct RunConfig {
  // scene
  std::vector<RoomConfig> rooms;  // trial grid = rooms x seeds
  size_t n_mics = 10;
  double snr_db = 10.0;
  double duration_s = 20.0;
  double sample_rate = 16000.0;
  std::string signal = "speechlike";
  std::vector<std::pair<double, double>> move_windows{{8.0, 10.0}};
  // processing
  size_t block_len = 1024;
  size_t block_shift = 512;
  size_t entropy_block_len = 32000;
  std::vector<std::string> features;  // names; default active set
  KfConfig kf;
  double psd_beta = 0.9;
  // batch
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

RunConfig default_config();

// Strict JSON round trip: unknown or ill-typed keys are rejected with
// their full path in the exception message.
RunConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const RunConfig& cfg);
RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& cfg);

// FNV-1a digest of the canonical config serialization plus the trial
// coordinates; stamped into results for provenance.
std::string config_digest(const RunConfig& cfg, const std::string& room_name,
                          uint64_t seed);

FeatureMask mask_from_names(std::span<const std::string> names);

// Deterministic scene for one trial coordinate; the same scene a full
// trial renders, so staged CLI runs reproduce batch results.
Scene make_scene(const RunConfig& cfg, const RoomConfig& room, uint64_t seed);

// Frame timestamp convention: the block's end time, when its features
// become available.
inline double frame_time_s(size_t frame, size_t block_len, size_t shift,
                           double fs) {
  return (static_cast<double>(frame * shift + block_len)) / fs;
}

// ---- stage 1: node-side extraction ----

struct ExtractionResult {
  // frames[channel][frame]; values of inactive features are 0, the
  // entropy feature slot carries the held negated entropy when active.
  std::vector<std::vector<FeatureFrame>> frames;
  size_t n_frames = 0;
};

ExtractionResult extract_features_multichannel(
    const std::vector<std::vector<double>>& channels, const RunConfig& cfg,
    const FeatureMask& mask);

// Wire adapters. Flattened frame-major (all nodes of frame 0, then
// frame 1, ...); features travel in FeatureId order of the mask.
std::vector<FeatureWireFrame> to_wire(const ExtractionResult& ex,
                                      const FeatureMask& mask);
// Regroups and re-expands; values pass through binary32. Frames missing
// any node (e.g. dropped by corruption) are skipped entirely.
ExtractionResult from_wire(std::span<const FeatureWireFrame> wire,
                           const FeatureMask& mask, size_t n_channels);

// ---- stage 2: estimation ----

struct GraphDiagnostics {
  double max_laplacian_row_sum = 0.0;  // max |row sum of L| over frames
  double max_w_asymmetry = 0.0;        // max |W - W^T| entry over frames
  double min_degree = 0.0;             // min graph degree over frames
  bool u_is_pm_fiedler = true;         // u == +-fiedler on every frame
};

struct EstimateResult {
  std::vector<std::vector<double>> utility;  // [frame][channel]
  std::vector<double> flip_corr;             // per frame
  GraphDiagnostics diag;
  size_t rejected_frames = 0;
};

EstimateResult estimate_utilities(const ExtractionResult& ex,
                                  const RunConfig& cfg);

// ---- full trials ----

struct TrialOptions {
  bool quantize_features = false;       // route features through binary32
  LassoProblem* lasso_accum = nullptr;  // collect importance-study rows
};

struct TrialResult {
  std::vector<double> rho;                   // per frame; NaN = undefined
  std::vector<std::vector<double>> utility;  // [frame][channel]
  std::vector<std::vector<double>> msc;      // [frame][channel]
  GraphDiagnostics diag;
  size_t rejected_frames = 0;
  std::string digest;
  std::string room_name;
  uint64_t seed = 0;
};

TrialResult run_trial(const RunConfig& cfg, const RoomConfig& room,
                      uint64_t seed, const TrialOptions& opts = {});

// All rooms x seeds. jobs == 0 picks the hardware concurrency. Results
// are ordered (room-major) regardless of scheduling.
std::vector<TrialResult> run_batch(const RunConfig& cfg, size_t jobs = 0,
                                   const TrialOptions& opts = {});

// Per-frame quartiles of rho across trials (NaN frames skipped).
struct BatchSummary {
  std::vector<double> time_s;
  std::vector<double> q25, q50, q75;
  size_t n_trials = 0;
};
BatchSummary summarize(const std::vector<TrialResult>& trials,
                       const RunConfig& cfg);

// ---- feature importance study ----

inline constexpr double kDefaultLambdas[] = {0.002, 0.001, 0.0005, 0.0002,
                                             0.0001};

struct LassoSweepEntry {
  int feature;  // FeatureId value
  double lambda;
  double weight;
};

// Accumulates regression rows over a whole batch (all 18 features
// tracked) and solves the weighted l1 path.
std::vector<LassoSweepEntry> lasso_sweep(const LassoProblem& prob,
                                         std::span<const double> lambdas);
LassoProblem collect_lasso_problem(const RunConfig& cfg, size_t jobs = 0);

// ---- CSV ----

// Columns: frame,time_s,rho,u_1..u_N,gamma_1..gamma_N with "." for
// undefined entries. Numbers are printed with enough digits to round
// trip their binary32 value exactly.
void write_trial_csv(const std::string& path, const TrialResult& t,
                     const RunConfig& cfg);
void write_summary_csv(const std::string& path, const BatchSummary& s);
void write_lasso_csv(const std::string& path,
                     std::span<const LassoSweepEntry> entries);

}  // namespace micutil
