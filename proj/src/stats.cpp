#include "micutil/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace micutil {

double pearson(std::span<const double> a, std::span<const double> b) {
  const size_t n = a.size();
  if (n < 2 || b.size() != n) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double median_abs_diff(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d;
  const size_t n = std::min(a.size(), b.size());
  d.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    if (std::isfinite(a[i]) && std::isfinite(b[i])) {
      d.push_back(std::fabs(a[i] - b[i]));
    }
  }
  return percentile(std::move(d), 0.5);
}

}  // namespace micutil
