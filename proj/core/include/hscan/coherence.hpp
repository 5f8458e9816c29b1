#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hscan/corpus.hpp"
#include "hscan/topic_model.hpp"

namespace hscan {

/// Per-type sorted document posting lists.
class CoDocumentIndex {
 public:
  explicit CoDocumentIndex(const TokenizedCorpus& corpus);

  std::size_t num_docs() const noexcept { return num_docs_; }
  std::size_t doc_freq(std::uint32_t type) const;
  std::size_t co_doc_freq(std::uint32_t a, std::uint32_t b) const;

 private:
  std::size_t num_docs_;
  std::vector<std::vector<std::uint32_t>> postings_;
};

struct CoherenceResult {
  double value = 0.0;
  std::size_t skipped_pairs = 0;  // pairs whose earlier term has zero document frequency
};

/// sum over m=2..M, l<m of log((D(v_m,v_l) + 1) / D(v_l)) with terms ordered
/// by topic weight, descending. `doc_freq[m]` is D(v_m) and
/// `co_doc_freq[m][l]` is D(v_m, v_l) for l < m.
CoherenceResult coherence_from_counts(std::span<const std::size_t> doc_freq,
                                      const std::vector<std::vector<std::size_t>>& co_doc_freq);

CoherenceResult coherence(std::span<const std::uint32_t> ranked_terms, const CoDocumentIndex& index);

struct TopicDiagnostics {
  int topic_id = 0;
  double coherence = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, double>> top_terms;
  double token_count = 0.0;

  bool has_coherence() const noexcept { return std::isfinite(coherence); }
};

/// Top `top_m` terms per topic by term_topic weight (ties by type index),
/// coherence over those terms, and fractional document mass.
std::vector<TopicDiagnostics> compute_diagnostics(const TopicModel& model, const TokenizedCorpus& corpus,
                                                  std::size_t top_m = 20);

/// Type indices of the `top_m` heaviest terms of one topic.
std::vector<std::uint32_t> top_term_indices(const TopicModel& model, std::size_t topic, std::size_t top_m);

}  // namespace hscan
