// Command line front end for the microphone utility pipeline. The
// subcommands mirror the processing stages so any slice of the chain
// can be run and inspected on its own:
//
//   simulate   render one randomized scene to a multichannel WAV
//   extract    WAV -> per-node feature stream (.csff)
//   estimate   feature stream -> per-frame utility CSV
//   evaluate   full trial batch with ground-truth scoring
//   lasso      feature importance sweep over a batch
//   rir-check  room impulse response sanity report

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "micutil/pipeline.hpp"
#include "micutil/stats.hpp"
#include "micutil/wav.hpp"

namespace {

using namespace micutil;

RunConfig load_or_default(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

const RoomConfig& pick_room(const RunConfig& cfg, const std::string& name) {
  if (cfg.rooms.empty()) throw std::runtime_error("config has no rooms");
  if (name.empty()) return cfg.rooms.front();
  for (const auto& r : cfg.rooms) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("room '" + name + "' is not in the config");
}

int cmd_simulate(const std::string& config_path, const std::string& room_name,
                 uint64_t seed, const std::string& out_path,
                 const std::string& dry_path) {
  const RunConfig cfg = load_or_default(config_path);
  const RoomConfig& room = pick_room(cfg, room_name);
  const Scene scene = make_scene(cfg, room, seed);
  const RenderResult rendered = render_scene(scene, cfg.block_shift);

  WavData wav;
  wav.sample_rate = cfg.sample_rate;
  wav.channels = rendered.mics;
  write_wav(out_path, wav);
  if (!dry_path.empty()) {
    WavData dry;
    dry.sample_rate = cfg.sample_rate;
    dry.channels = {rendered.source};
    write_wav(dry_path, dry);
  }
  std::printf("room %s seed %llu: %zu mics, %.1f s at %.0f Hz -> %s\n",
              room.name.c_str(), static_cast<unsigned long long>(seed),
              rendered.mics.size(),
              static_cast<double>(rendered.mics.front().size()) / cfg.sample_rate,
              cfg.sample_rate, out_path.c_str());
  std::printf("level scale %.6g, noise std %.6g (snr %.1f dB)\n", rendered.scale,
              rendered.noise_std, cfg.snr_db);
  return 0;
}

int cmd_extract(const std::string& config_path, const std::string& in_path,
                const std::string& out_path, bool all_features) {
  RunConfig cfg = load_or_default(config_path);
  const WavData wav = read_wav(in_path);
  if (wav.channels.empty()) throw std::runtime_error("input WAV has no channels");
  cfg.sample_rate = wav.sample_rate;

  const FeatureMask mask =
      all_features ? FeatureMask::all() : mask_from_names(cfg.features);
  const ExtractionResult ex = extract_features_multichannel(wav.channels, cfg, mask);
  const auto wire = to_wire(ex, mask);
  write_frames(out_path, wire);

  const size_t frame_bytes = kWireOverhead + 4 * mask.count();
  std::printf("%zu nodes x %zu frames, %zu features/frame (%zu B each) -> %s\n",
              ex.frames.size(), ex.n_frames, mask.count(), frame_bytes,
              out_path.c_str());
  return 0;
}

int cmd_estimate(const std::string& config_path, const std::string& in_path,
                 size_t n_nodes, const std::string& out_path, bool all_features) {
  const RunConfig base = load_or_default(config_path);
  RunConfig cfg = base;
  if (all_features) {
    cfg.features.clear();
    for (int i = 0; i < kNumFeatures; ++i) {
      cfg.features.push_back(feature_name(static_cast<FeatureId>(i)));
    }
  }
  const StreamDecodeResult stream = read_frames(in_path);
  if (stream.skipped_bytes > 0) {
    std::fprintf(stderr, "warning: skipped %zu corrupt bytes while decoding %s\n",
                 stream.skipped_bytes, in_path.c_str());
  }
  if (stream.frames.empty()) throw std::runtime_error("no frames decoded");
  if (n_nodes == 0) {
    uint16_t max_id = 0;
    for (const auto& f : stream.frames) max_id = std::max(max_id, f.node_id);
    n_nodes = static_cast<size_t>(max_id) + 1;
  }
  const FeatureMask mask = mask_from_names(cfg.features);
  const ExtractionResult ex = from_wire(stream.frames, mask, n_nodes);
  if (ex.n_frames == 0) {
    throw std::runtime_error("no complete frame groups for " +
                             std::to_string(n_nodes) + " nodes");
  }
  const EstimateResult est = estimate_utilities(ex, cfg);

  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot open " + out_path);
  f << "frame,time_s";
  for (size_t c = 1; c <= n_nodes; ++c) f << ",u_" << c;
  f << ",flip_corr\n";
  char buf[40];
  for (size_t l = 0; l < est.utility.size(); ++l) {
    std::snprintf(buf, sizeof(buf), "%.9g",
                  frame_time_s(l, cfg.block_len, cfg.block_shift, cfg.sample_rate));
    f << l << "," << buf;
    for (double u : est.utility[l]) {
      std::snprintf(buf, sizeof(buf), "%.9g", u);
      f << "," << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.9g", est.flip_corr[l]);
    f << "," << buf << "\n";
  }
  std::printf("%zu frames x %zu nodes -> %s (rejected %zu)\n", est.utility.size(),
              n_nodes, out_path.c_str(), est.rejected_frames);
  return 0;
}

int cmd_evaluate(const std::string& config_path, size_t jobs,
                 const std::string& out_path, const std::string& trial_dir,
                 bool quantize) {
  const RunConfig cfg = load_or_default(config_path);
  TrialOptions opts;
  opts.quantize_features = quantize;
  const auto trials = run_batch(cfg, jobs, opts);
  const BatchSummary summary = summarize(trials, cfg);
  if (!out_path.empty()) write_summary_csv(out_path, summary);

  if (!trial_dir.empty()) {
    std::filesystem::create_directories(trial_dir);
    for (const auto& t : trials) {
      const std::string name = trial_dir + "/trial_" + t.room_name + "_s" +
                               std::to_string(t.seed) + ".csv";
      write_trial_csv(name, t, cfg);
    }
  }

  // Steady-state score: median utility/ground-truth correlation over
  // the final 5 seconds of each trial.
  std::vector<double> tail_medians;
  for (const auto& t : trials) {
    std::vector<double> tail;
    for (size_t l = 0; l < t.rho.size(); ++l) {
      const double ts = frame_time_s(l, cfg.block_len, cfg.block_shift, cfg.sample_rate);
      if (ts >= cfg.duration_s - 5.0 && std::isfinite(t.rho[l])) {
        tail.push_back(t.rho[l]);
      }
    }
    const double med = percentile(tail, 0.5);
    tail_medians.push_back(med);
    std::printf("trial room=%s seed=%llu tail_median_rho=%.4f rejected=%zu digest=%s\n",
                t.room_name.c_str(), static_cast<unsigned long long>(t.seed), med,
                t.rejected_frames, t.digest.c_str());
  }
  std::vector<double> finite;
  for (double v : tail_medians) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  std::printf("batch: %zu trials, tail median rho: q25=%.4f median=%.4f q75=%.4f\n",
              trials.size(), percentile(finite, 0.25), percentile(finite, 0.5),
              percentile(finite, 0.75));
  if (!out_path.empty()) std::printf("summary -> %s\n", out_path.c_str());
  return 0;
}

int cmd_lasso(const std::string& config_path, size_t jobs,
              const std::string& out_path, std::vector<double> lambdas) {
  const RunConfig cfg = load_or_default(config_path);
  const LassoProblem prob = collect_lasso_problem(cfg, jobs);
  if (lambdas.empty()) {
    lambdas.assign(std::begin(kDefaultLambdas), std::end(kDefaultLambdas));
  }
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  const auto entries = lasso_sweep(prob, lambdas);
  write_lasso_csv(out_path, entries);

  std::printf("%zu rows accumulated, lambda_max=%.6g\n", prob.n_rows(),
              prob.lambda_max());
  for (double lambda : lambdas) {
    std::printf("lambda=%.6g:", lambda);
    for (const auto& e : entries) {
      if (e.lambda == lambda && e.weight != 0.0) {
        std::printf(" %s=%+.4g", feature_name(static_cast<FeatureId>(e.feature)),
                    e.weight);
      }
    }
    std::printf("\n");
  }
  std::printf("weights -> %s\n", out_path.c_str());
  return 0;
}

int cmd_rir_check(const std::string& config_path, const std::string& room_name,
                  uint64_t seed, const std::string& out_path) {
  const RunConfig cfg = load_or_default(config_path);
  const RoomConfig& room = pick_room(cfg, room_name);
  const Scene scene = make_scene(cfg, room, seed);
  const auto source = scene.trajectory.position_at(0.0);
  const MicSpec& mic = scene.mics.front();

  const auto rir = rir_image_source(room.spec, source, mic, cfg.sample_rate,
                                    scene.speed_of_sound);
  const double t60 = schroeder_t60(rir, cfg.sample_rate);
  std::vector<double> per_mic{t60};
  for (size_t m = 1; m < scene.mics.size(); ++m) {
    const auto h = rir_image_source(room.spec, source, scene.mics[m],
                                    cfg.sample_rate, scene.speed_of_sound);
    per_mic.push_back(schroeder_t60(h, cfg.sample_rate));
  }
  const double energy = std::inner_product(rir.begin(), rir.end(), rir.begin(), 0.0);
  size_t n_taps = 0;
  for (double h : rir) {
    if (h != 0.0) ++n_taps;
  }
  const double dist = std::sqrt(std::pow(source[0] - mic.position[0], 2) +
                                std::pow(source[1] - mic.position[1], 2) +
                                std::pow(source[2] - mic.position[2], 2));

  std::printf("room %s: %.1f x %.1f x %.1f m, nominal t60 %.3f s, beta %.4f\n",
              room.name.c_str(), room.spec.dims[0], room.spec.dims[1],
              room.spec.dims[2], room.spec.t60, reflection_from_t60(room.spec));
  std::printf("source (%.2f, %.2f, %.2f) -> mic (%.2f, %.2f, %.2f), %.2f m\n",
              source[0], source[1], source[2], mic.position[0], mic.position[1],
              mic.position[2], dist);
  std::printf("rir: %zu samples, %zu nonzero taps, energy %.6g\n", rir.size(),
              n_taps, energy);
  std::printf("decay: schroeder t60 %.3f s (nominal %.3f s, %+.1f%%)\n", t60,
              room.spec.t60, 100.0 * (t60 - room.spec.t60) / room.spec.t60);
  const double med = percentile(per_mic, 0.5);
  std::printf("decay over %zu mics: median t60 %.3f s (%+.1f%%), spread %.3f..%.3f\n",
              per_mic.size(), med, 100.0 * (med - room.spec.t60) / room.spec.t60,
              *std::min_element(per_mic.begin(), per_mic.end()),
              *std::max_element(per_mic.begin(), per_mic.end()));
  if (!out_path.empty()) {
    const double peak = std::max(
        1e-12, std::abs(*std::max_element(rir.begin(), rir.end(),
                                          [](double a, double b) {
                                            return std::abs(a) < std::abs(b);
                                          })));
    std::vector<double> scaled(rir.size());
    for (size_t i = 0; i < rir.size(); ++i) scaled[i] = rir[i] / peak * 0.9;
    WavData wav;
    wav.sample_rate = cfg.sample_rate;
    wav.channels = {scaled};
    write_wav(out_path, wav);
    std::printf("normalized rir -> %s\n", out_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"microphone utility estimation pipeline"};
  app.require_subcommand(1);

  std::string config_path, room_name, in_path, out_path, dry_path, trial_dir;
  uint64_t seed = 1;
  size_t jobs = 0, n_nodes = 0;
  bool all_features = false, quantize = false;
  std::vector<double> lambdas;

  auto* sim = app.add_subcommand("simulate", "render one scene to WAV");
  sim->add_option("--config", config_path, "JSON config (defaults when omitted)");
  sim->add_option("--room", room_name, "room name from the config");
  sim->add_option("--seed", seed, "trial seed");
  sim->add_option("--out", out_path, "multichannel WAV path")->required();
  sim->add_option("--dry", dry_path, "also write the dry source WAV");

  auto* ext = app.add_subcommand("extract", "WAV to feature stream");
  ext->add_option("--config", config_path, "JSON config (defaults when omitted)");
  ext->add_option("--in", in_path, "multichannel WAV input")->required();
  ext->add_option("--out", out_path, "feature stream output (.csff)")->required();
  ext->add_flag("--all-features", all_features, "send all features, not the active set");

  auto* est = app.add_subcommand("estimate", "feature stream to utility CSV");
  est->add_option("--config", config_path, "JSON config (defaults when omitted)");
  est->add_option("--in", in_path, "feature stream input (.csff)")->required();
  est->add_option("--nodes", n_nodes, "node count (default: inferred)");
  est->add_option("--out", out_path, "utility CSV output")->required();
  est->add_flag("--all-features", all_features, "stream carries all features");

  auto* ev = app.add_subcommand("evaluate", "run the trial batch with ground truth");
  ev->add_option("--config", config_path, "JSON config (defaults when omitted)");
  ev->add_option("--jobs", jobs, "worker threads (0 = hardware)");
  ev->add_option("--out", out_path, "batch summary CSV");
  ev->add_option("--trial-dir", trial_dir, "directory for per-trial CSVs");
  ev->add_flag("--quantize", quantize, "round features through the wire format");

  auto* la = app.add_subcommand("lasso", "feature importance sweep");
  la->add_option("--config", config_path, "JSON config (defaults when omitted)");
  la->add_option("--jobs", jobs, "worker threads (0 = hardware)");
  la->add_option("--out", out_path, "weights CSV")->required();
  la->add_option("--lambda", lambdas, "penalty values (default sweep when omitted)");

  auto* rc = app.add_subcommand("rir-check", "impulse response sanity report");
  rc->add_option("--config", config_path, "JSON config (defaults when omitted)");
  rc->add_option("--room", room_name, "room name from the config");
  rc->add_option("--seed", seed, "scene seed");
  rc->add_option("--out", out_path, "write the normalized RIR as WAV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config_path, room_name, seed, out_path, dry_path);
    if (ext->parsed()) return cmd_extract(config_path, in_path, out_path, all_features);
    if (est->parsed()) return cmd_estimate(config_path, in_path, n_nodes, out_path, all_features);
    if (ev->parsed()) return cmd_evaluate(config_path, jobs, out_path, trial_dir, quantize);
    if (la->parsed()) return cmd_lasso(config_path, jobs, out_path, lambdas);
    if (rc->parsed()) return cmd_rir_check(config_path, room_name, seed, out_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
