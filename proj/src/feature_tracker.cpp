#include "micutil/feature_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace micutil {

size_t vech_index(size_t p, size_t q, size_t n) {
  if (p < q || p >= n) throw std::out_of_range("vech_index: need n > p >= q");
  // Column q starts after q full columns of decreasing height n, n-1, ...
  return q * n - q * (q + 1) / 2 + p;
}

void vech_unindex(size_t j, size_t n, size_t* p, size_t* q) {
  if (j >= vech_size(n)) throw std::out_of_range("vech_unindex: index out of range");
  size_t col = 0;
  size_t col_start = 0;
  while (col_start + (n - col) <= j) {
    col_start += n - col;
    ++col;
  }
  *q = col;
  *p = col + (j - col_start);
}

void update_feature_mean(std::span<double> mean, std::span<const double> f,
                         double alpha, std::span<double> centered_out) {
  if (mean.size() != f.size() || centered_out.size() != f.size()) {
    throw std::invalid_argument("update_feature_mean: size mismatch");
  }
  for (size_t i = 0; i < f.size(); ++i) {
    mean[i] = alpha * mean[i] + (1.0 - alpha) * f[i];
    centered_out[i] = f[i] - mean[i];
  }
}

void kf_update(KfState& st, std::span<const double> centered,
               std::span<const double> energies, const KfConfig& cfg) {
  const size_t n = centered.size();
  if (energies.size() != n) throw std::invalid_argument("kf_update: size mismatch");
  if (st.m.size() != vech_size(n) || st.P.size() != st.m.size()) {
    throw std::invalid_argument("kf_update: state size mismatch");
  }
  size_t j = 0;
  for (size_t q = 0; q < n; ++q) {
    for (size_t p = q; p < n; ++p, ++j) {
      const double y = centered[p] * centered[q];
      const double r = cfg.sigma_r / (std::sqrt(energies[p] * energies[q]) + cfg.epsilon);
      const double pp = st.P[j] + cfg.sigma_q;
      const double k = pp / (pp + r);
      st.m[j] += k * (y - st.m[j]);
      st.P[j] = pp * (1.0 - k);
    }
  }
}

FeatureTracker::FeatureTracker(size_t n_channels, FeatureMask active,
                               const KfConfig& cfg)
    : n_(n_channels), cfg_(cfg), feature_ids_(active.ids()) {
  if (n_channels == 0) throw std::invalid_argument("FeatureTracker: need >= 1 channel");
  if (feature_ids_.empty()) throw std::invalid_argument("FeatureTracker: empty feature set");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
    throw std::invalid_argument("FeatureTracker: alpha must be in [0, 1]");
  }
  means_.assign(feature_ids_.size(), std::vector<double>(n_, 0.0));
  // m starts at 0 with unit uncertainty on every coordinate.
  filters_.assign(feature_ids_.size(),
                  KfState{std::vector<double>(vech_size(n_), 0.0),
                          std::vector<double>(vech_size(n_), 1.0)});
  centered_.resize(n_);
  energies_.resize(n_);
}

bool FeatureTracker::update(std::span<const FeatureFrame> frames) {
  if (frames.size() != n_) {
    throw std::invalid_argument("FeatureTracker::update: channel count mismatch");
  }
  // Validate the whole frame first so a rejection leaves no partial update.
  for (size_t p = 0; p < n_; ++p) {
    if (!std::isfinite(frames[p].energy)) {
      ++rejected_;
      return false;
    }
    for (FeatureId id : feature_ids_) {
      if (!std::isfinite(frames[p].values[static_cast<size_t>(id)])) {
        ++rejected_;
        return false;
      }
    }
  }
  for (size_t p = 0; p < n_; ++p) energies_[p] = frames[p].energy;
  std::vector<double> f(n_);
  for (size_t i = 0; i < feature_ids_.size(); ++i) {
    const size_t idx = static_cast<size_t>(feature_ids_[i]);
    for (size_t p = 0; p < n_; ++p) f[p] = frames[p].values[idx];
    update_feature_mean(means_[i], f, cfg_.alpha, centered_);
    kf_update(filters_[i], centered_, energies_, cfg_);
  }
  ++updates_;
  return true;
}

PccTensor FeatureTracker::pcc() const {
  constexpr double kVarFloor = 1e-12;
  PccTensor t;
  t.n = n_;
  t.n_feat = feature_ids_.size();
  t.r.assign(t.n_feat * n_ * n_, 0.0);
  for (size_t i = 0; i < t.n_feat; ++i) {
    const auto& m = filters_[i].m;
    for (size_t p = 0; p < n_; ++p) {
      const double cpp = m[vech_index(p, p, n_)];
      t.at(p, p, i) = cpp > kVarFloor ? 1.0 : 0.0;
      for (size_t q = 0; q < p; ++q) {
        const double cqq = m[vech_index(q, q, n_)];
        double r = 0.0;
        if (cpp > kVarFloor && cqq > kVarFloor) {
          r = m[vech_index(p, q, n_)] / std::sqrt(cpp * cqq);
          r = std::clamp(r, -1.0, 1.0);
        }
        t.at(p, q, i) = r;
        t.at(q, p, i) = r;
      }
    }
  }
  return t;
}

}  // namespace micutil
