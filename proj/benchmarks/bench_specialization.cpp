#include <benchmark/benchmark.h>

#include <random>

#include "hscan/map_layout.hpp"
#include "hscan/specialization.hpp"

namespace {

hscan::ActivityMatrix activity(std::size_t categories, std::size_t entities) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  hscan::ActivityMatrix m;
  for (std::size_t i = 0; i < categories; ++i) m.categories.push_back(std::to_string(i));
  for (std::size_t j = 0; j < entities; ++j) m.entities.push_back("e" + std::to_string(j));
  m.n = hscan::Matrix(categories, entities);
  for (std::size_t i = 0; i < categories; ++i) {
    for (std::size_t j = 0; j < entities; ++j) m.n(i, j) = u(rng);
  }
  return m;
}

void BM_ComputeLq(benchmark::State& state) {
  const auto m = activity(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(hscan::compute_lq(m));
}
BENCHMARK(BM_ComputeLq)->Args({10000, 3})->Args({10000, 200})->Unit(benchmark::kMillisecond);

void BM_KnnGraph(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto rows = static_cast<std::size_t>(state.range(0));
  hscan::Matrix f(rows, 2000);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < 2000; ++c) f(r, c) = u(rng) < 0.05 ? u(rng) : 0.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(hscan::knn_graph(f, 15, 4));
}
BENCHMARK(BM_KnnGraph)->Arg(1000)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace
