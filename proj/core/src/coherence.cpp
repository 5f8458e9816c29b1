#include "hscan/coherence.hpp"

#include <algorithm>
#include <numeric>

#include "hscan/error.hpp"

namespace hscan {

CoDocumentIndex::CoDocumentIndex(const TokenizedCorpus& corpus)
    : num_docs_(corpus.num_docs()), postings_(corpus.vocab_size()) {
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    for (const auto type : corpus.docs[d].tokens) {
      auto& list = postings_.at(type);
      if (list.empty() || list.back() != d) list.push_back(static_cast<std::uint32_t>(d));
    }
  }
}

std::size_t CoDocumentIndex::doc_freq(std::uint32_t type) const {
  return type < postings_.size() ? postings_[type].size() : 0;
}

std::size_t CoDocumentIndex::co_doc_freq(std::uint32_t a, std::uint32_t b) const {
  if (a >= postings_.size() || b >= postings_.size()) return 0;
  const auto& x = postings_[a];
  const auto& y = postings_[b];
  std::size_t count = 0;
  auto i = x.begin();
  auto j = y.begin();
  while (i != x.end() && j != y.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

CoherenceResult coherence_from_counts(std::span<const std::size_t> doc_freq,
                                      const std::vector<std::vector<std::size_t>>& co_doc_freq) {
  if (doc_freq.size() < 2) throw InputError("coherence needs at least 2 terms");
  CoherenceResult result;
  for (std::size_t m = 1; m < doc_freq.size(); ++m) {
    for (std::size_t l = 0; l < m; ++l) {
      if (doc_freq[l] == 0) {
        ++result.skipped_pairs;
        continue;
      }
      result.value += std::log((static_cast<double>(co_doc_freq[m][l]) + 1.0) /
                               static_cast<double>(doc_freq[l]));
    }
  }
  return result;
}

CoherenceResult coherence(std::span<const std::uint32_t> ranked_terms, const CoDocumentIndex& index) {
  const std::size_t M = ranked_terms.size();
  std::vector<std::size_t> df(M);
  std::vector<std::vector<std::size_t>> co(M);
  for (std::size_t m = 0; m < M; ++m) {
    df[m] = index.doc_freq(ranked_terms[m]);
    co[m].resize(m);
    for (std::size_t l = 0; l < m; ++l) co[m][l] = index.co_doc_freq(ranked_terms[m], ranked_terms[l]);
  }
  return coherence_from_counts(df, co);
}

std::vector<std::uint32_t> top_term_indices(const TopicModel& model, std::size_t topic, std::size_t top_m) {
  const auto row = model.term_topic.row(topic);
  std::vector<std::uint32_t> order(row.size());
  std::iota(order.begin(), order.end(), 0u);
  const std::size_t m = std::min(top_m, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      return row[a] != row[b] ? row[a] > row[b] : a < b;
                    });
  order.resize(m);
  return order;
}

std::vector<TopicDiagnostics> compute_diagnostics(const TopicModel& model, const TokenizedCorpus& corpus,
                                                  std::size_t top_m) {
  if (model.vocab_size() != corpus.vocab_size()) {
    throw InputError("model vocabulary does not match corpus vocabulary");
  }
  const CoDocumentIndex index(corpus);
  const auto sizes = model.topic_sizes();
  std::vector<TopicDiagnostics> out(model.num_topics);
  for (std::size_t k = 0; k < model.num_topics; ++k) {
    auto& diag = out[k];
    diag.topic_id = static_cast<int>(k);
    diag.token_count = sizes[k];
    const auto terms = top_term_indices(model, k, top_m);
    for (const auto t : terms) diag.top_terms.emplace_back(corpus.vocabulary[t], model.term_topic(k, t));
    if (terms.size() >= 2) diag.coherence = coherence(terms, index).value;
  }
  return out;
}

}  // namespace hscan
