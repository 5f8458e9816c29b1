#include <benchmark/benchmark.h>

#include <random>

#include "hscan/topic_model.hpp"

namespace {

hscan::TokenizedCorpus corpus(std::size_t docs, std::size_t length, std::size_t vocab) {
  std::mt19937_64 rng(4);
  hscan::TokenizedCorpus c;
  for (std::size_t v = 0; v < vocab; ++v) c.vocabulary.push_back("w" + std::to_string(v));
  c.doc_freq.assign(vocab, 1);
  std::uniform_int_distribution<std::uint32_t> w(0, static_cast<std::uint32_t>(vocab - 1));
  for (std::size_t d = 0; d < docs; ++d) {
    hscan::TokenizedDoc doc{"d" + std::to_string(d), {}};
    for (std::size_t i = 0; i < length; ++i) doc.tokens.push_back(w(rng));
    c.docs.push_back(std::move(doc));
  }
  return c;
}

void BM_LdaSweep(benchmark::State& state) {
  const auto c = corpus(5000, 80, 5000);
  hscan::LdaOptions o;
  o.num_topics = static_cast<std::size_t>(state.range(0));
  o.threads = static_cast<unsigned>(state.range(1));
  hscan::LdaSampler sampler(c, o);
  for (auto _ : state) sampler.sweep();
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sampler.num_tokens()));
}
BENCHMARK(BM_LdaSweep)->Args({50, 1})->Args({50, 4})->Args({200, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace
