#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hscan/corpus.hpp"

namespace hscan {

struct SynthOptions {
  std::size_t num_docs = 2000;
  std::size_t num_topics = 20;
  std::size_t words_per_topic = 40;
  std::size_t doc_length = 60;
  double purity = 0.9;    // share of a document's words from its primary topic
  double top_k = 0.8;     // planted rate of the fastest topic
  double k_lo = -0.1;     // range of the other topics' rates
  double k_hi = 0.5;
  YearWindow window;
  std::uint64_t seed = 7;
};

struct SynthTopic {
  int id = 0;
  double k = 0.0;
  std::vector<std::string> vocabulary;
  std::string home_country;
  std::string favored_source;
};

struct SynthTruth {
  std::vector<SynthTopic> topics;
  int fastest_topic = 0;
  std::vector<int> primary_topic;  // per document
};

struct SynthCorpus {
  std::vector<RawDocument> docs;
  SynthTruth truth;
};

/// Documents drawn from planted topics with disjoint vocabularies. Each
/// document picks a (topic, year) cell with probability proportional to
/// exp(k_topic * (year - first)), so topic volumes grow at their planted
/// rates; countries and sources lean toward a per-topic favorite.
SynthCorpus generate_synthetic_corpus(const SynthOptions& options);

/// Writes corpus.jsonl, truth.json, the four vocabulary-preparation files
/// and a scan.conf that points at them.
void write_synthetic_bundle(const std::filesystem::path& dir, const SynthCorpus& corpus, const SynthOptions& options);

SynthTruth read_truth(const std::filesystem::path& path);

}  // namespace hscan
