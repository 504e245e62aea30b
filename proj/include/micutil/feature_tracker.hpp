#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "micutil/signal_features.hpp"

namespace micutil {

// Recursive tracking of the cross-channel feature covariance, one
// diagonal Kalman filter per feature over the half-vectorized N x N
// covariance (Q = N(N+1)/2 coordinates, diagonal included). Feature
// sequences are centered by a recursive mean before forming the
// per-frame outer products that act as observations.

struct KfConfig {
  double alpha = 0.99;     // recursive mean forgetting factor, [0, 1]
  double sigma_q = 1e-4;   // process noise added to every coordinate
  double sigma_r = 0.2;    // observation noise scale
  double epsilon = 1e-6;   // energy regularizer inside the noise scale
};

// Half-vectorization layout: lower triangle including the diagonal,
// stacked column by column. vech_index(p, q) requires p >= q.
inline size_t vech_size(size_t n) { return n * (n + 1) / 2; }
size_t vech_index(size_t p, size_t q, size_t n);
// Inverse map: coordinate j -> (row p, col q) with p >= q.
void vech_unindex(size_t j, size_t n, size_t* p, size_t* q);

// Updates the recursive mean with the incoming frame, then returns the
// centered values: mean <- alpha*mean + (1-alpha)*f; out = f - mean.
void update_feature_mean(std::span<double> mean, std::span<const double> f,
                         double alpha, std::span<double> centered_out);

// State of one per-feature filter (all vech coordinates share the
// frame's scalar observation-noise value).
struct KfState {
  std::vector<double> m;  // tracked covariance, vech layout
  std::vector<double> P;  // per-coordinate error variance
};

// One filter step. centered holds the N centered feature values of
// this frame, energies the N block energies.
//   y_j      = centered[p] * centered[q]
//   R_j      = sigma_r / (sqrt(E_p * E_q) + epsilon)
//   k_j      = (P_j + sigma_q) / (P_j + sigma_q + R_j)
//   m_j     += k_j * (y_j - m_j)
//   P_j      = (P_j + sigma_q) * (1 - k_j)
void kf_update(KfState& st, std::span<const double> centered,
               std::span<const double> energies, const KfConfig& cfg);

// Dense symmetric correlation tensor r[p][q][i] derived from the
// tracked covariances: r = c_pq / sqrt(c_pp c_qq), clamped to [-1, 1].
// Entries touching a diagonal value <= 1e-12 are 0; the diagonal
// itself is 1 exactly when the channel's tracked variance is > 1e-12.
struct PccTensor {
  size_t n = 0;       // channels
  size_t n_feat = 0;  // tracked features
  std::vector<double> r;  // [i * n * n + p * n + q]

  double at(size_t p, size_t q, size_t i) const { return r[i * n * n + p * n + q]; }
  double& at(size_t p, size_t q, size_t i) { return r[i * n * n + p * n + q]; }
};

// Per-frame driver over the active feature set. Feature i of channel p
// is read from frames[p].values; a frame with any non-finite value or
// energy among the active features is rejected for all features
// (state untouched, warning counted).
class FeatureTracker {
 public:
  FeatureTracker(size_t n_channels, FeatureMask active, const KfConfig& cfg = {});

  // frames.size() == n_channels. Returns false if the frame was rejected.
  bool update(std::span<const FeatureFrame> frames);

  PccTensor pcc() const;

  size_t n_channels() const { return n_; }
  size_t n_features() const { return feature_ids_.size(); }
  const std::vector<FeatureId>& feature_ids() const { return feature_ids_; }
  size_t rejected_frames() const { return rejected_; }
  size_t updates() const { return updates_; }
  const KfState& filter_state(size_t i) const { return filters_[i]; }
  std::span<const double> tracked_mean(size_t i) const { return means_[i]; }

 private:
  size_t n_;
  KfConfig cfg_;
  std::vector<FeatureId> feature_ids_;
  std::vector<std::vector<double>> means_;  // per feature, length N
  std::vector<KfState> filters_;            // per feature
  std::vector<double> centered_;            // scratch, length N
  std::vector<double> energies_;            // scratch, length N
  size_t rejected_ = 0;
  size_t updates_ = 0;
};

}  // namespace micutil
