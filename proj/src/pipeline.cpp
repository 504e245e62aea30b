#include "micutil/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "micutil/msc_oracle.hpp"
#include "micutil/rng.hpp"
#include "micutil/stats.hpp"
#include "micutil/utility_estimator.hpp"

namespace micutil {

namespace {

using ordered_json = nlohmann::ordered_json;

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("config: " + path + ": " + what);
}

void check_keys(const ordered_json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) config_fail(path + "." + it.key(), "unknown key");
  }
}

double get_num(const ordered_json& j, const std::string& path) {
  if (!j.is_number()) config_fail(path, "expected a number");
  return j.get<double>();
}

size_t get_size(const ordered_json& j, const std::string& path) {
  if (!j.is_number_unsigned()) config_fail(path, "expected a non-negative integer");
  return j.get<size_t>();
}

std::string get_str(const ordered_json& j, const std::string& path) {
  if (!j.is_string()) config_fail(path, "expected a string");
  return j.get<std::string>();
}

RoomConfig parse_room(const ordered_json& j, const std::string& path) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    return RoomConfig{name, room_preset(name)};
  }
  check_keys(j, path, {"name", "dims", "t60"});
  RoomConfig rc;
  if (!j.contains("dims") || !j.contains("t60")) {
    config_fail(path, "custom room needs dims and t60");
  }
  const auto& dims = j.at("dims");
  if (!dims.is_array() || dims.size() != 3) {
    config_fail(path + ".dims", "expected an array of 3 numbers");
  }
  for (size_t i = 0; i < 3; ++i) {
    rc.spec.dims[i] = get_num(dims.at(i), path + ".dims");
  }
  rc.spec.t60 = get_num(j.at("t60"), path + ".t60");
  rc.name = j.contains("name") ? get_str(j.at("name"), path + ".name") : "custom";
  return rc;
}

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string csv_cell(double v) {
  if (!std::isfinite(v)) return ".";
  return fmt_g9(v);
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.rooms = {{"A", room_preset("A")}, {"B", room_preset("B")}, {"C", room_preset("C")}};
  for (FeatureId id : default_active_features().ids()) {
    cfg.features.push_back(feature_name(id));
  }
  return cfg;
}

RunConfig config_from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg = default_config();
  check_keys(j, "$", {"scene", "processing", "batch"});

  if (j.contains("scene")) {
    const auto& s = j.at("scene");
    check_keys(s, "$.scene",
               {"rooms", "n_mics", "snr_db", "duration_s", "sample_rate",
                "signal", "move_windows"});
    if (s.contains("rooms")) {
      const auto& rooms = s.at("rooms");
      if (!rooms.is_array() || rooms.empty()) {
        config_fail("$.scene.rooms", "expected a non-empty array");
      }
      cfg.rooms.clear();
      for (size_t i = 0; i < rooms.size(); ++i) {
        cfg.rooms.push_back(
            parse_room(rooms.at(i), "$.scene.rooms[" + std::to_string(i) + "]"));
      }
    }
    if (s.contains("n_mics")) cfg.n_mics = get_size(s.at("n_mics"), "$.scene.n_mics");
    if (s.contains("snr_db")) cfg.snr_db = get_num(s.at("snr_db"), "$.scene.snr_db");
    if (s.contains("duration_s")) {
      cfg.duration_s = get_num(s.at("duration_s"), "$.scene.duration_s");
    }
    if (s.contains("sample_rate")) {
      cfg.sample_rate = get_num(s.at("sample_rate"), "$.scene.sample_rate");
    }
    if (s.contains("signal")) {
      cfg.signal = get_str(s.at("signal"), "$.scene.signal");
      signal_kind_from_name(cfg.signal);  // validate
    }
    if (s.contains("move_windows")) {
      const auto& mw = s.at("move_windows");
      if (!mw.is_array()) config_fail("$.scene.move_windows", "expected an array");
      cfg.move_windows.clear();
      for (size_t i = 0; i < mw.size(); ++i) {
        const std::string p = "$.scene.move_windows[" + std::to_string(i) + "]";
        const auto& w = mw.at(i);
        if (!w.is_array() || w.size() != 2) config_fail(p, "expected [start, end]");
        cfg.move_windows.emplace_back(get_num(w.at(0), p), get_num(w.at(1), p));
      }
    }
  }

  if (j.contains("processing")) {
    const auto& p = j.at("processing");
    check_keys(p, "$.processing",
               {"block_len", "block_shift", "entropy_block_len", "features",
                "kf", "psd_beta"});
    if (p.contains("block_len")) {
      cfg.block_len = get_size(p.at("block_len"), "$.processing.block_len");
    }
    if (p.contains("block_shift")) {
      cfg.block_shift = get_size(p.at("block_shift"), "$.processing.block_shift");
    }
    if (p.contains("entropy_block_len")) {
      cfg.entropy_block_len =
          get_size(p.at("entropy_block_len"), "$.processing.entropy_block_len");
    }
    if (p.contains("features")) {
      const auto& f = p.at("features");
      if (!f.is_array() || f.empty()) {
        config_fail("$.processing.features", "expected a non-empty array");
      }
      cfg.features.clear();
      for (size_t i = 0; i < f.size(); ++i) {
        const std::string path = "$.processing.features[" + std::to_string(i) + "]";
        const std::string name = get_str(f.at(i), path);
        if (!feature_from_name(name)) config_fail(path, "unknown feature '" + name + "'");
        cfg.features.push_back(name);
      }
    }
    if (p.contains("kf")) {
      const auto& k = p.at("kf");
      check_keys(k, "$.processing.kf", {"alpha", "sigma_q", "sigma_r", "epsilon"});
      if (k.contains("alpha")) cfg.kf.alpha = get_num(k.at("alpha"), "$.processing.kf.alpha");
      if (k.contains("sigma_q")) {
        cfg.kf.sigma_q = get_num(k.at("sigma_q"), "$.processing.kf.sigma_q");
      }
      if (k.contains("sigma_r")) {
        cfg.kf.sigma_r = get_num(k.at("sigma_r"), "$.processing.kf.sigma_r");
      }
      if (k.contains("epsilon")) {
        cfg.kf.epsilon = get_num(k.at("epsilon"), "$.processing.kf.epsilon");
      }
    }
    if (p.contains("psd_beta")) {
      cfg.psd_beta = get_num(p.at("psd_beta"), "$.processing.psd_beta");
    }
  }

  if (j.contains("batch")) {
    const auto& b = j.at("batch");
    check_keys(b, "$.batch", {"seeds"});
    if (b.contains("seeds")) {
      const auto& s = b.at("seeds");
      if (!s.is_array() || s.empty()) config_fail("$.batch.seeds", "expected a non-empty array");
      cfg.seeds.clear();
      for (size_t i = 0; i < s.size(); ++i) {
        cfg.seeds.push_back(
            get_size(s.at(i), "$.batch.seeds[" + std::to_string(i) + "]"));
      }
    }
  }
  return cfg;
}

std::string config_to_json_text(const RunConfig& cfg) {
  ordered_json rooms = ordered_json::array();
  for (const auto& r : cfg.rooms) {
    rooms.push_back(ordered_json{{"name", r.name},
                                 {"dims", {r.spec.dims[0], r.spec.dims[1], r.spec.dims[2]}},
                                 {"t60", r.spec.t60}});
  }
  ordered_json windows = ordered_json::array();
  for (const auto& w : cfg.move_windows) {
    windows.push_back(ordered_json::array({w.first, w.second}));
  }
  ordered_json j{
      {"scene",
       {{"rooms", rooms},
        {"n_mics", cfg.n_mics},
        {"snr_db", cfg.snr_db},
        {"duration_s", cfg.duration_s},
        {"sample_rate", cfg.sample_rate},
        {"signal", cfg.signal},
        {"move_windows", windows}}},
      {"processing",
       {{"block_len", cfg.block_len},
        {"block_shift", cfg.block_shift},
        {"entropy_block_len", cfg.entropy_block_len},
        {"features", cfg.features},
        {"kf",
         {{"alpha", cfg.kf.alpha},
          {"sigma_q", cfg.kf.sigma_q},
          {"sigma_r", cfg.kf.sigma_r},
          {"epsilon", cfg.kf.epsilon}}},
        {"psd_beta", cfg.psd_beta}}},
      {"batch", {{"seeds", cfg.seeds}}}};
  return j.dump(2) + "\n";
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_config: cannot open " + path);
  f << config_to_json_text(cfg);
}

std::string config_digest(const RunConfig& cfg, const std::string& room_name,
                          uint64_t seed) {
  const std::string basis = config_to_json_text(cfg) + "|" + room_name + "|" +
                            std::to_string(seed);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(basis)));
  return buf;
}

FeatureMask mask_from_names(std::span<const std::string> names) {
  if (names.empty()) throw std::invalid_argument("mask_from_names: empty feature list");
  FeatureMask m;
  for (const auto& n : names) {
    const auto id = feature_from_name(n);
    if (!id) throw std::invalid_argument("mask_from_names: unknown feature '" + n + "'");
    m.set(*id);
  }
  return m;
}

ExtractionResult extract_features_multichannel(
    const std::vector<std::vector<double>>& channels, const RunConfig& cfg,
    const FeatureMask& mask) {
  if (channels.empty()) throw std::invalid_argument("extract: no channels");
  ExtractionResult out;
  out.frames.resize(channels.size());
  const bool want_entropy = mask.test(FeatureId::entropy);
  size_t n_frames = std::numeric_limits<size_t>::max();
  for (size_t c = 0; c < channels.size(); ++c) {
    const auto blocks = frame_signal(channels[c], cfg.block_len, cfg.block_shift,
                                     static_cast<int>(c), cfg.sample_rate);
    FeatureExtractor fx(cfg.block_len, mask);
    const auto held = held_entropy_per_frame(channels[c], cfg.entropy_block_len,
                                             blocks.size(), cfg.block_len,
                                             cfg.block_shift);
    auto& dst = out.frames[c];
    dst.reserve(blocks.size());
    for (size_t l = 0; l < blocks.size(); ++l) {
      FeatureFrame ff = fx.process(blocks[l]);
      ff.entropy_neg = held[l];
      if (want_entropy) {
        ff.values[static_cast<size_t>(FeatureId::entropy)] = held[l];
      }
      dst.push_back(ff);
    }
    n_frames = std::min(n_frames, dst.size());
  }
  out.n_frames = n_frames;
  return out;
}

std::vector<FeatureWireFrame> to_wire(const ExtractionResult& ex,
                                      const FeatureMask& mask) {
  const auto ids = mask.ids();
  std::vector<FeatureWireFrame> out;
  out.reserve(ex.n_frames * ex.frames.size());
  for (size_t l = 0; l < ex.n_frames; ++l) {
    for (size_t c = 0; c < ex.frames.size(); ++c) {
      const FeatureFrame& ff = ex.frames[c][l];
      FeatureWireFrame w;
      w.node_id = static_cast<uint16_t>(c);
      w.frame_index = static_cast<uint32_t>(l);
      w.features.reserve(ids.size());
      for (FeatureId id : ids) {
        w.features.push_back(static_cast<float>(ff.values[static_cast<size_t>(id)]));
      }
      w.energy = static_cast<float>(ff.energy);
      w.entropy_neg = static_cast<float>(ff.entropy_neg);
      out.push_back(std::move(w));
    }
  }
  return out;
}

ExtractionResult from_wire(std::span<const FeatureWireFrame> wire,
                           const FeatureMask& mask, size_t n_channels) {
  const auto ids = mask.ids();
  // frame index -> per-node frames seen so far
  std::map<uint32_t, std::vector<const FeatureWireFrame*>> grouped;
  for (const auto& w : wire) {
    if (w.node_id >= n_channels) continue;        // foreign node id
    if (w.features.size() != ids.size()) continue;  // wrong feature set
    auto& slot = grouped[w.frame_index];
    if (slot.empty()) slot.assign(n_channels, nullptr);
    slot[w.node_id] = &w;
  }
  ExtractionResult out;
  out.frames.assign(n_channels, {});
  for (const auto& [index, slot] : grouped) {
    bool complete = true;
    for (const auto* p : slot) {
      if (p == nullptr) {
        complete = false;
        break;
      }
    }
    if (!complete) continue;  // a corrupt frame drops this index entirely
    for (size_t c = 0; c < n_channels; ++c) {
      const FeatureWireFrame& w = *slot[c];
      FeatureFrame ff;
      for (size_t i = 0; i < ids.size(); ++i) {
        ff.values[static_cast<size_t>(ids[i])] = static_cast<double>(w.features[i]);
      }
      ff.energy = static_cast<double>(w.energy);
      ff.entropy_neg = static_cast<double>(w.entropy_neg);
      out.frames[c].push_back(ff);
    }
  }
  out.n_frames = out.frames.empty() ? 0 : out.frames[0].size();
  return out;
}

EstimateResult estimate_utilities(const ExtractionResult& ex,
                                  const RunConfig& cfg) {
  const size_t n = ex.frames.size();
  if (n < 2) throw std::invalid_argument("estimate_utilities: need >= 2 channels");
  const FeatureMask mask = mask_from_names(cfg.features);
  FeatureTracker tracker(n, mask, cfg.kf);
  UtilityEstimator estimator(n);

  EstimateResult res;
  res.utility.reserve(ex.n_frames);
  res.flip_corr.reserve(ex.n_frames);
  res.diag.min_degree = std::numeric_limits<double>::infinity();

  std::vector<FeatureFrame> frame_set(n);
  Eigen::VectorXd e(static_cast<Eigen::Index>(n));
  for (size_t l = 0; l < ex.n_frames; ++l) {
    for (size_t c = 0; c < n; ++c) {
      frame_set[c] = ex.frames[c][l];
      e(static_cast<Eigen::Index>(c)) = ex.frames[c][l].entropy_neg;
    }
    tracker.update(frame_set);
    const PccTensor pcc = tracker.pcc();
    const UtilityVector uv = estimator.step(pcc, e);

    const SimilarityGraph& g = estimator.graph();
    res.diag.max_laplacian_row_sum =
        std::max(res.diag.max_laplacian_row_sum,
                 g.L.rowwise().sum().cwiseAbs().maxCoeff());
    res.diag.max_w_asymmetry =
        std::max(res.diag.max_w_asymmetry,
                 (g.W - g.W.transpose()).cwiseAbs().maxCoeff());
    res.diag.min_degree = std::min(res.diag.min_degree, g.d.minCoeff());
    const bool same = (uv.u.array() == uv.fiedler.array()).all();
    const bool flipped = (uv.u.array() == (-uv.fiedler).array()).all();
    res.diag.u_is_pm_fiedler = res.diag.u_is_pm_fiedler && (same || flipped);

    res.flip_corr.push_back(uv.flip_corr);
    std::vector<double> u(n);
    for (size_t c = 0; c < n; ++c) u[c] = uv.u(static_cast<Eigen::Index>(c));
    res.utility.push_back(std::move(u));
  }
  res.rejected_frames = tracker.rejected_frames();
  return res;
}

Scene make_scene(const RunConfig& cfg, const RoomConfig& room, uint64_t seed) {
  const uint64_t scene_seed = mix_seed(seed, fnv1a64(room.name));
  Scene scene;
  scene.room = room.spec;
  scene.sample_rate = cfg.sample_rate;
  scene.snr_db = cfg.snr_db;
  scene.seed = scene_seed;
  scene.source = test_signal(signal_kind_from_name(cfg.signal), cfg.duration_s,
                             cfg.sample_rate, scene_seed);
  scene.mics = place_random_mics(room.spec, cfg.n_mics, scene_seed);
  scene.trajectory = synth_trajectory(room.spec, scene_seed, cfg.duration_s,
                                      cfg.move_windows);
  return scene;
}

TrialResult run_trial(const RunConfig& cfg, const RoomConfig& room,
                      uint64_t seed, const TrialOptions& opts) {
  const Scene scene = make_scene(cfg, room, seed);
  const RenderResult rendered = render_scene(scene, cfg.block_shift);

  const FeatureMask est_mask = mask_from_names(cfg.features);
  const FeatureMask ext_mask = opts.lasso_accum ? FeatureMask::all() : est_mask;
  ExtractionResult ex = extract_features_multichannel(rendered.mics, cfg, ext_mask);

  // Ground truth: coherence of each channel against the dry source.
  const auto src_blocks =
      frame_signal(rendered.source, cfg.block_len, cfg.block_shift);
  std::vector<std::vector<SignalBlock>> mic_blocks(cfg.n_mics);
  for (size_t c = 0; c < cfg.n_mics; ++c) {
    mic_blocks[c] = frame_signal(rendered.mics[c], cfg.block_len, cfg.block_shift,
                                 static_cast<int>(c), cfg.sample_rate);
  }
  const size_t n_frames = std::min(ex.n_frames, src_blocks.size());

  TrialResult out;
  out.room_name = room.name;
  out.seed = seed;
  out.digest = config_digest(cfg, room.name, seed);
  out.msc.reserve(n_frames);

  PsdState psd(cfg.n_mics, PsdConfig{cfg.psd_beta, cfg.block_len});
  std::vector<std::span<const double>> spans(cfg.n_mics);
  for (size_t l = 0; l < n_frames; ++l) {
    for (size_t c = 0; c < cfg.n_mics; ++c) spans[c] = mic_blocks[c][l].samples;
    psd.update(src_blocks[l].samples, spans);
    out.msc.push_back(psd.msc());
  }

  // Importance-study rows come from the full feature set tracked in
  // parallel with the estimation pass.
  if (opts.lasso_accum != nullptr) {
    FeatureTracker full_tracker(cfg.n_mics, FeatureMask::all(), cfg.kf);
    std::vector<FeatureFrame> frame_set(cfg.n_mics);
    const double row_weight =
        1.0 / (static_cast<double>(cfg.n_mics) * static_cast<double>(n_frames));
    for (size_t l = 0; l < n_frames; ++l) {
      for (size_t c = 0; c < cfg.n_mics; ++c) frame_set[c] = ex.frames[c][l];
      full_tracker.update(frame_set);
      const auto mats = build_channel_matrices(full_tracker.pcc());
      const auto centered = zero_mean(out.msc[l]);
      add_frame_rows(*opts.lasso_accum, mats, centered, row_weight);
    }
  }

  if (opts.quantize_features) {
    ex = from_wire(to_wire(ex, est_mask), est_mask, cfg.n_mics);
  }
  EstimateResult est = estimate_utilities(ex, cfg);

  out.utility = std::move(est.utility);
  out.diag = est.diag;
  out.rejected_frames = est.rejected_frames;
  out.rho.resize(n_frames);
  for (size_t l = 0; l < n_frames; ++l) {
    out.rho[l] = pearson(out.utility[l], out.msc[l]);
  }
  out.utility.resize(n_frames);
  return out;
}

std::vector<TrialResult> run_batch(const RunConfig& cfg, size_t jobs,
                                   const TrialOptions& opts) {
  const size_t n_tasks = cfg.rooms.size() * cfg.seeds.size();
  if (n_tasks == 0) throw std::invalid_argument("run_batch: empty trial grid");
  std::vector<TrialResult> results(n_tasks);
  std::vector<std::unique_ptr<LassoProblem>> partial(n_tasks);

  if (jobs == 0) jobs = std::max<size_t>(1, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n_tasks);

  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        const RoomConfig& room = cfg.rooms[i / cfg.seeds.size()];
        const uint64_t seed = cfg.seeds[i % cfg.seeds.size()];
        TrialOptions local = opts;
        std::unique_ptr<LassoProblem> lp;
        if (opts.lasso_accum != nullptr) {
          lp = std::make_unique<LassoProblem>(static_cast<size_t>(kNumFeatures));
          local.lasso_accum = lp.get();
        }
        results[i] = run_trial(cfg, room, seed, local);
        partial[i] = std::move(lp);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Merge importance rows in trial order so batch results do not
  // depend on scheduling.
  if (opts.lasso_accum != nullptr) {
    for (auto& lp : partial) {
      if (lp) opts.lasso_accum->merge(*lp);
    }
  }
  return results;
}

BatchSummary summarize(const std::vector<TrialResult>& trials,
                       const RunConfig& cfg) {
  BatchSummary s;
  s.n_trials = trials.size();
  size_t n_frames = 0;
  for (const auto& t : trials) n_frames = std::max(n_frames, t.rho.size());
  s.time_s.resize(n_frames);
  s.q25.resize(n_frames);
  s.q50.resize(n_frames);
  s.q75.resize(n_frames);
  for (size_t l = 0; l < n_frames; ++l) {
    s.time_s[l] = frame_time_s(l, cfg.block_len, cfg.block_shift, cfg.sample_rate);
    std::vector<double> v;
    v.reserve(trials.size());
    for (const auto& t : trials) {
      if (l < t.rho.size() && std::isfinite(t.rho[l])) v.push_back(t.rho[l]);
    }
    s.q25[l] = percentile(v, 0.25);
    s.q50[l] = percentile(v, 0.50);
    s.q75[l] = percentile(v, 0.75);
  }
  return s;
}

std::vector<LassoSweepEntry> lasso_sweep(const LassoProblem& prob,
                                         std::span<const double> lambdas) {
  std::vector<LassoSweepEntry> out;
  for (double lambda : lambdas) {
    const LassoSolution sol = coordinate_descent(prob, lambda);
    for (int i = 0; i < kNumFeatures; ++i) {
      out.push_back(LassoSweepEntry{i, lambda, sol.w(i)});
    }
  }
  return out;
}

LassoProblem collect_lasso_problem(const RunConfig& cfg, size_t jobs) {
  LassoProblem prob(static_cast<size_t>(kNumFeatures));
  TrialOptions opts;
  opts.lasso_accum = &prob;
  run_batch(cfg, jobs, opts);
  // Average over trials: duplicating the trial set must not move the
  // solution at any lambda.
  const size_t n_trials = cfg.rooms.size() * cfg.seeds.size();
  if (n_trials > 1) prob.scale_weights(1.0 / static_cast<double>(n_trials));
  return prob;
}

void write_trial_csv(const std::string& path, const TrialResult& t,
                     const RunConfig& cfg) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_trial_csv: cannot open " + path);
  const size_t n = cfg.n_mics;
  f << "frame,time_s";
  f << ",rho";
  for (size_t c = 1; c <= n; ++c) f << ",u_" << c;
  for (size_t c = 1; c <= n; ++c) f << ",gamma_" << c;
  f << "\n";
  for (size_t l = 0; l < t.rho.size(); ++l) {
    f << l << ","
      << fmt_g9(frame_time_s(l, cfg.block_len, cfg.block_shift, cfg.sample_rate));
    f << "," << csv_cell(t.rho[l]);
    for (size_t c = 0; c < n; ++c) {
      f << "," << (l < t.utility.size() && c < t.utility[l].size()
                       ? csv_cell(t.utility[l][c])
                       : ".");
    }
    for (size_t c = 0; c < n; ++c) {
      f << "," << (l < t.msc.size() && c < t.msc[l].size() ? csv_cell(t.msc[l][c])
                                                           : ".");
    }
    f << "\n";
  }
  if (!f) throw std::runtime_error("write_trial_csv: write failed: " + path);
}

void write_summary_csv(const std::string& path, const BatchSummary& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_summary_csv: cannot open " + path);
  f << "frame,time_s,rho_q25,rho_median,rho_q75\n";
  for (size_t l = 0; l < s.time_s.size(); ++l) {
    f << l << "," << fmt_g9(s.time_s[l]) << "," << csv_cell(s.q25[l]) << ","
      << csv_cell(s.q50[l]) << "," << csv_cell(s.q75[l]) << "\n";
  }
  if (!f) throw std::runtime_error("write_summary_csv: write failed: " + path);
}

void write_lasso_csv(const std::string& path,
                     std::span<const LassoSweepEntry> entries) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_lasso_csv: cannot open " + path);
  f << "feature_id,feature_name,lambda,weight\n";
  for (const auto& e : entries) {
    f << e.feature << "," << feature_name(static_cast<FeatureId>(e.feature))
      << "," << fmt_g9(e.lambda) << "," << fmt_g9(e.weight) << "\n";
  }
  if (!f) throw std::runtime_error("write_lasso_csv: write failed: " + path);
}

}  // namespace micutil
