#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "micutil/feature_tracker.hpp"
#include "micutil/rng.hpp"

using namespace micutil;

namespace {

// Frames with a single active feature (td_zcr) holding the given values.
std::vector<FeatureFrame> one_feature_frames(std::span<const double> vals,
                                             double energy = 1.0) {
  std::vector<FeatureFrame> frames(vals.size());
  for (size_t p = 0; p < vals.size(); ++p) {
    frames[p].values[static_cast<int>(FeatureId::td_zcr)] = vals[p];
    frames[p].energy = energy;
  }
  return frames;
}

const FeatureMask kOne = FeatureMask::of({FeatureId::td_zcr});

}  // namespace

TEST_CASE("vech index maps are inverse bijections") {
  for (size_t n : {1u, 2u, 5u, 10u}) {
    const size_t q_total = vech_size(n);
    CHECK(q_total == n * (n + 1) / 2);
    std::vector<bool> seen(q_total, false);
    for (size_t q = 0; q < n; ++q) {
      for (size_t p = q; p < n; ++p) {
        const size_t j = vech_index(p, q, n);
        REQUIRE(j < q_total);
        CHECK(!seen[j]);
        seen[j] = true;
        size_t pp = 0, qq = 0;
        vech_unindex(j, n, &pp, &qq);
        CHECK(pp == p);
        CHECK(qq == q);
      }
    }
    for (bool b : seen) CHECK(b);
  }
}

TEST_CASE("recursive mean endpoints") {
  std::vector<double> f{2.0, -3.0};

  std::vector<double> mean(2, 0.0), centered(2);
  update_feature_mean(mean, f, 0.0, centered);
  // alpha 0: mean jumps to the frame, centered is exactly zero.
  CHECK(mean[0] == 2.0);
  CHECK(mean[1] == -3.0);
  CHECK(centered[0] == 0.0);
  CHECK(centered[1] == 0.0);

  std::fill(mean.begin(), mean.end(), 0.0);
  update_feature_mean(mean, f, 1.0, centered);
  // alpha 1: mean never moves, centered is the raw frame.
  CHECK(mean[0] == 0.0);
  CHECK(centered[0] == 2.0);
  CHECK(centered[1] == -3.0);
}

TEST_CASE("recursive mean approaches a constant geometrically") {
  const double c = 1.7;
  const double alpha = 0.99;
  std::vector<double> mean(1, 0.0), centered(1);
  std::vector<double> f{c};
  for (int l = 1; l <= 200; ++l) {
    update_feature_mean(mean, f, alpha, centered);
    const double expect_gap = std::pow(alpha, l) * c;
    CHECK(std::fabs((c - mean[0]) - expect_gap) < 1e-12 * std::max(1.0, expect_gap));
    CHECK(centered[0] == doctest::Approx(expect_gap).epsilon(1e-9));
  }
}

TEST_CASE("kalman step trusts observations when noise vanishes") {
  // Huge block energy drives R toward 0, so the state lands on y.
  KfState st{std::vector<double>(3, 0.0), std::vector<double>(3, 1.0)};
  std::vector<double> centered{0.5, -2.0};
  std::vector<double> energies{1e18, 1e18};
  kf_update(st, centered, energies, KfConfig{});
  CHECK(st.m[vech_index(0, 0, 2)] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(st.m[vech_index(1, 0, 2)] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(st.m[vech_index(1, 1, 2)] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("kalman step freezes when observations are pure noise") {
  // Zero energy makes R = sigma_r / epsilon huge; the gain collapses
  // and the state barely moves.
  KfConfig cfg;
  KfState st{std::vector<double>(1, 5.0), std::vector<double>(1, 1e-6)};
  std::vector<double> centered{100.0};
  std::vector<double> energies{0.0};
  kf_update(st, centered, energies, cfg);
  // R = 0.2 / 1e-6 = 2e5; k ~ (1e-6 + 1e-4) / 2e5 ~ 5e-10.
  CHECK(std::fabs(st.m[0] - 5.0) < 1e-2);
  CHECK(st.P[0] > 0.0);
}

TEST_CASE("tracker state matches an independent scalar recursion") {
  // sigma_q = 0 and constant block energies make every vech coordinate
  // an independent scalar Kalman filter with fixed R. Replaying that
  // recursion must reproduce the tracker state exactly.
  const size_t n = 5;
  KfConfig cfg;
  cfg.alpha = 0.99;
  cfg.sigma_q = 0.0;
  cfg.sigma_r = 0.2;
  cfg.epsilon = 1e-6;
  const double energy = 2.5;

  FeatureTracker tracker(n, kOne, cfg);
  Rng rng(21);

  // Independent replay state.
  std::vector<double> mean(n, 0.0), centered(n);
  const size_t q_total = vech_size(n);
  std::vector<double> m(q_total, 0.0), P(q_total, 1.0);
  const double R = cfg.sigma_r / (std::sqrt(energy * energy) + cfg.epsilon);

  std::vector<double> vals(n);
  for (int l = 0; l < 1000; ++l) {
    for (auto& v : vals) v = rng.gaussian();
    auto frames = one_feature_frames(vals, energy);
    REQUIRE(tracker.update(frames));

    update_feature_mean(mean, vals, cfg.alpha, centered);
    for (size_t q = 0; q < n; ++q) {
      for (size_t p = q; p < n; ++p) {
        const size_t j = vech_index(p, q, n);
        const double y = centered[p] * centered[q];
        const double k = P[j] / (P[j] + R);
        m[j] += k * (y - m[j]);
        P[j] = P[j] * (1.0 - k);
      }
    }
  }

  const KfState& st = tracker.filter_state(0);
  REQUIRE(st.m.size() == q_total);
  for (size_t j = 0; j < q_total; ++j) {
    CHECK(std::fabs(st.m[j] - m[j]) <= 1e-12 * std::max(1.0, std::fabs(m[j])));
    CHECK(std::fabs(st.P[j] - P[j]) <= 1e-12);
    CHECK(st.P[j] > 0.0);
  }
  const auto tm = tracker.tracked_mean(0);
  for (size_t p = 0; p < n; ++p) {
    CHECK(tm[p] == doctest::Approx(mean[p]).epsilon(1e-12));
  }
  CHECK(tracker.updates() == 1000);
  CHECK(tracker.rejected_frames() == 0);
}

TEST_CASE("identical feature sequences correlate to one") {
  FeatureTracker tracker(2, kOne, KfConfig{});
  Rng rng(23);
  std::vector<double> vals(2);
  for (int l = 0; l < 500; ++l) {
    const double v = rng.gaussian();
    vals[0] = v;
    vals[1] = v;
    tracker.update(one_feature_frames(vals));
  }
  const auto r = tracker.pcc();
  CHECK(r.at(0, 1, 0) >= 0.99);
  CHECK(r.at(0, 0, 0) == 1.0);
  CHECK(r.at(1, 1, 0) == 1.0);
}

TEST_CASE("negated feature sequences correlate to minus one") {
  FeatureTracker tracker(2, kOne, KfConfig{});
  Rng rng(29);
  std::vector<double> vals(2);
  for (int l = 0; l < 500; ++l) {
    const double v = rng.gaussian();
    vals[0] = v;
    vals[1] = -v;
    tracker.update(one_feature_frames(vals));
  }
  CHECK(tracker.pcc().at(0, 1, 0) <= -0.99);
}

TEST_CASE("independent feature sequences decorrelate") {
  // The filter weights recent frames with an effective window near 90,
  // so a single run scatters about 1/sqrt(90) around zero. Bound each
  // run loosely and the cross-seed mean tightly.
  double mean_r = 0.0;
  const int n_seeds = 5;
  for (int s = 0; s < n_seeds; ++s) {
    FeatureTracker tracker(2, kOne, KfConfig{});
    Rng rng(31 + static_cast<uint64_t>(s));
    std::vector<double> vals(2);
    for (int l = 0; l < 1000; ++l) {
      vals[0] = rng.gaussian();
      vals[1] = rng.gaussian();
      tracker.update(one_feature_frames(vals));
    }
    const double r01 = tracker.pcc().at(0, 1, 0);
    CHECK(std::fabs(r01) <= 0.35);
    mean_r += r01;
  }
  CHECK(std::fabs(mean_r / n_seeds) < 0.12);
}

TEST_CASE("correlation tensor is symmetric and bounded") {
  FeatureTracker tracker(4, default_active_features(), KfConfig{});
  Rng rng(37);
  std::vector<FeatureFrame> frames(4);
  for (int l = 0; l < 300; ++l) {
    for (auto& fr : frames) {
      for (FeatureId id : default_active_features().ids()) {
        fr.values[static_cast<int>(id)] = rng.gaussian();
      }
      fr.energy = 0.5 + rng.uniform();
    }
    tracker.update(frames);
    const auto r = tracker.pcc();
    REQUIRE(r.n == 4);
    REQUIRE(r.n_feat == 4);
    for (size_t i = 0; i < r.n_feat; ++i) {
      for (size_t p = 0; p < 4; ++p) {
        for (size_t q = 0; q < 4; ++q) {
          CHECK(r.at(p, q, i) == r.at(q, p, i));
          CHECK(r.at(p, q, i) >= -1.0);
          CHECK(r.at(p, q, i) <= 1.0);
        }
        CHECK((r.at(p, p, i) == 1.0 || r.at(p, p, i) == 0.0));
      }
    }
  }
}

TEST_CASE("diagonal is zero until variance accumulates") {
  FeatureTracker tracker(2, kOne, KfConfig{});
  // All-zero feature values: tracked covariance stays 0, so the
  // correlation tensor reports 0, not a spurious 1.
  std::vector<double> vals{0.0, 0.0};
  for (int l = 0; l < 10; ++l) tracker.update(one_feature_frames(vals));
  const auto r = tracker.pcc();
  CHECK(r.at(0, 0, 0) == 0.0);
  CHECK(r.at(0, 1, 0) == 0.0);
}

TEST_CASE("non finite frames are rejected whole") {
  FeatureTracker tracker(2, kOne, KfConfig{});
  Rng rng(41);
  std::vector<double> vals(2);
  for (int l = 0; l < 50; ++l) {
    vals[0] = rng.gaussian();
    vals[1] = 0.5 * vals[0] + rng.gaussian();
    tracker.update(one_feature_frames(vals));
  }
  const auto before = tracker.pcc();
  const auto& st_before = tracker.filter_state(0);
  const auto m_snapshot = st_before.m;

  auto bad = one_feature_frames(std::vector<double>{1.0, 2.0});
  bad[1].values[static_cast<int>(FeatureId::td_zcr)] =
      std::numeric_limits<double>::quiet_NaN();
  CHECK(!tracker.update(bad));
  CHECK(tracker.rejected_frames() == 1);

  auto bad_energy = one_feature_frames(std::vector<double>{1.0, 2.0});
  bad_energy[0].energy = std::numeric_limits<double>::infinity();
  CHECK(!tracker.update(bad_energy));
  CHECK(tracker.rejected_frames() == 2);

  // State untouched by the rejected frames.
  CHECK(tracker.filter_state(0).m == m_snapshot);
  const auto after = tracker.pcc();
  CHECK(after.r == before.r);
}

TEST_CASE("tracker validates frame count") {
  FeatureTracker tracker(3, kOne, KfConfig{});
  auto frames = one_feature_frames(std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(tracker.update(frames), std::invalid_argument);
}
