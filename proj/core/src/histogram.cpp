#include "hscan/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hscan/error.hpp"

namespace hscan {

std::size_t Histogram::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

namespace {

std::size_t bin_count(double lo, double hi, double width) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-12)));
}

std::size_t bin_of(double v, double lo, double width, std::size_t bins) {
  return std::min(bins - 1, static_cast<std::size_t>(std::floor((v - lo) / width)));
}

std::vector<double> finite_sorted(std::span<const double> values) {
  std::vector<double> out;
  for (const double v : values) {
    if (std::isfinite(v)) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Histogram make_histogram(std::span<const double> values, double lo, double hi, double width) {
  if (!(width > 0.0) || !(hi > lo)) throw InputError("histogram needs width > 0 and hi > lo");
  Histogram h;
  h.lo = lo;
  h.width = width;
  h.counts.assign(bin_count(lo, hi, width), 0);
  for (const double v : values) {
    if (!std::isfinite(v) || v < lo || v > hi) continue;
    ++h.counts[bin_of(v, lo, width, h.counts.size())];
  }
  return h;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

double freedman_diaconis_width(std::span<const double> values) {
  const auto sorted = finite_sorted(values);
  if (sorted.size() < 2) return 0.0;
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  return 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
}

ModeEstimate histogram_mode(std::span<const double> values, double lo, double hi, double min_width) {
  ModeEstimate est;
  est.width = std::max(freedman_diaconis_width(values), min_width);
  const auto h = make_histogram(values, lo, hi, est.width);
  est.in_range = h.total();
  if (est.in_range == 0) {
    est.mode = median(finite_sorted(values));
    est.bin_lo = est.bin_hi = est.mode;
    return est;
  }
  const auto best = static_cast<std::size_t>(
      std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
  std::vector<double> members;
  for (const double v : values) {
    if (std::isfinite(v) && v >= lo && v <= hi && bin_of(v, lo, est.width, h.counts.size()) == best) {
      members.push_back(v);
    }
  }
  est.bin_lo = h.bin_lo(best);
  est.bin_hi = est.bin_lo + est.width;
  est.mode = median(std::move(members));
  return est;
}

}  // namespace hscan
