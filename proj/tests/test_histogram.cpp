#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hscan/histogram.hpp"

using namespace hscan;

TEST_CASE("histogram binning puts hi in the last bin and skips outliers") {
  const std::vector<double> v = {0.0, 0.49, 0.5, 1.0, 1.2, -0.1, NAN};
  const auto h = make_histogram(v, 0.0, 1.0, 0.5);
  REQUIRE(h.counts.size() == 2);
  CHECK(h.counts[0] == 2);
  CHECK(h.counts[1] == 2);
  CHECK(h.total() == 4);
}

TEST_CASE("quantiles and median") {
  const std::vector<double> s = {1, 2, 3, 4};
  CHECK(quantile_sorted(s, 0.0) == 1);
  CHECK(quantile_sorted(s, 0.5) == 2.5);
  CHECK(quantile_sorted(s, 0.25) == doctest::Approx(1.75));
  CHECK(median({5, 1, 3}) == 3);
}

TEST_CASE("freedman-diaconis width from the IQR") {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(i / 999.0);
  CHECK(freedman_diaconis_width(v) == doctest::Approx(2 * 0.5 / 10.0).epsilon(1e-9));
  CHECK(freedman_diaconis_width(std::vector<double>{1.0}) == 0.0);
}

TEST_CASE("mode of identical values is that value") {
  const std::vector<double> v(50, 4.0);
  CHECK(histogram_mode(v).mode == 4.0);
}

TEST_CASE("mode locates the peak of a skewed sample") {
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> g(3.0, 0.5);  // mode (a-1) b = 1
  std::vector<double> v(20000);
  for (auto& x : v) x = g(rng);
  const auto m = histogram_mode(v);
  CHECK(m.mode == doctest::Approx(1.0).epsilon(0.12));
  CHECK(m.width >= 0.05);
  CHECK(m.bin_lo <= m.mode);
  CHECK(m.mode <= m.bin_hi);
}

TEST_CASE("ties go to the lower bin") {
  // IQR 1.975 over 8 values gives width 1.975: two bins of four.
  const std::vector<double> v = {1.0, 1.0, 1.05, 1.1, 3.0, 3.0, 3.05, 3.1};
  const auto m = histogram_mode(v);
  CHECK(m.width == doctest::Approx(1.975));
  CHECK(m.mode == doctest::Approx(1.025));
}
