#pragma once

#include <span>
#include <vector>

namespace micutil {

// Pearson correlation of two equal-length sequences. Returns NaN when
// either sequence has zero variance or fewer than two elements; callers
// that need a defined value map NaN to their own sentinel.
double pearson(std::span<const double> a, std::span<const double> b);

// Percentile with linear interpolation between order statistics
// (rank h = (n-1)*p). p in [0, 1]. NaN entries must be removed by the
// caller. Empty input returns NaN.
double percentile(std::vector<double> values, double p);

// Median absolute value of elementwise differences, NaN pairs skipped.
double median_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace micutil
