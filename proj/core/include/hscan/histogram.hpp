#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hscan {

/// Equal-width bins [lo + i*width, lo + (i+1)*width); the upper edge `hi`
/// belongs to the last bin. Values outside [lo, hi] and non-finite values
/// are not counted.
struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<std::size_t> counts;

  double bin_lo(std::size_t i) const noexcept { return lo + static_cast<double>(i) * width; }
  double bin_center(std::size_t i) const noexcept { return bin_lo(i) + 0.5 * width; }
  std::size_t total() const noexcept;
};

Histogram make_histogram(std::span<const double> values, double lo, double hi, double width);

/// Linear-interpolation quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double q);
double median(std::vector<double> values);

/// 2 * IQR * n^(-1/3) over the finite values; 0 when fewer than 2.
double freedman_diaconis_width(std::span<const double> values);

struct ModeEstimate {
  double mode = 0.0;
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  double width = 0.0;
  std::size_t in_range = 0;
};

/// Histogram over [lo, hi] with Freedman-Diaconis width (at least
/// `min_width`), bins anchored at lo. The fullest bin wins, ties go to the
/// lower bin, and the mode is the median of the values inside that bin.
/// With no value in range the median of all finite values is returned.
ModeEstimate histogram_mode(std::span<const double> values, double lo = 0.0, double hi = 5.0,
                            double min_width = 0.05);

}  // namespace hscan
