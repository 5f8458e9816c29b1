#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "hscan/growth.hpp"

namespace {

hscan::YearlyCounts ensemble(std::size_t topics) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uk(-0.1, 0.8);
  hscan::YearlyCounts c;
  c.first_year = 2014;
  c.counts = hscan::Matrix(topics, 5);
  for (std::size_t i = 0; i < topics; ++i) {
    c.topic_ids.push_back(static_cast<int>(i));
    const double k = uk(rng);
    for (int t = 0; t < 5; ++t) {
      std::poisson_distribution<int> p(100.0 * std::exp(k * t));
      c.counts(i, t) = p(rng);
    }
  }
  return c;
}

void BM_FitExponential(benchmark::State& state) {
  const auto c = ensemble(1);
  const auto ts = hscan::make_series(0, c.counts.row(0), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(hscan::fit_exponential(ts));
}
BENCHMARK(BM_FitExponential);

void BM_FitAll(benchmark::State& state) {
  const auto c = ensemble(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(hscan::fit_all(c, 1.0, static_cast<unsigned>(state.range(1))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitAll)->Args({10000, 1})->Args({10000, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_Calibrate(benchmark::State& state) {
  const auto c = ensemble(10000);
  hscan::CalibrationOptions o;
  o.threads = 4;
  for (auto _ : state) benchmark::DoNotOptimize(hscan::calibrate_error_scale(c, o));
}
BENCHMARK(BM_Calibrate)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace
