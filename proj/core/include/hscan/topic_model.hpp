#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hscan/corpus.hpp"
#include "hscan/dense_matrix.hpp"

namespace hscan {

struct TopicModel {
  std::size_t num_topics = 0;
  Matrix term_topic;  // K x V, rows sum to 1
  Matrix doc_topic;   // D x K, rows sum to 1
  std::vector<double> alpha;
  double beta = 0.0;
  double ll_per_token = 0.0;

  std::size_t num_docs() const noexcept { return doc_topic.rows(); }
  std::size_t vocab_size() const noexcept { return term_topic.cols(); }

  /// Fractional document mass per topic (column sums of doc_topic).
  std::vector<double> topic_sizes() const;
};

struct TokenAssignment {
  std::uint32_t doc = 0;
  std::uint32_t pos = 0;
  std::uint32_t type = 0;
  std::uint32_t topic = 0;

  friend bool operator==(const TokenAssignment&, const TokenAssignment&) = default;
};

/// Per-token topic assignments plus the hyperparameters that produced them.
struct GibbsState {
  std::vector<double> alpha;
  double beta = 0.0;
  std::vector<TokenAssignment> tokens;
  std::vector<std::string> doc_sources;  // one per document, "NA" if unknown
  std::vector<std::string> type_names;   // type index -> token

  std::size_t num_topics() const noexcept { return alpha.size(); }

  friend bool operator==(const GibbsState&, const GibbsState&) = default;
};

struct LdaOptions {
  std::size_t num_topics = 50;
  int iterations = 1000;
  int optimize_interval = 10;  // 0 disables alpha optimization
  int optimize_burn_in = 50;
  int report_interval = 10;
  std::uint64_t seed = 1;
  double alpha_sum = 5.0;
  double beta = 0.01;
  unsigned threads = 1;
};

struct LikelihoodReport {
  int iteration = 0;
  double ll_per_token = 0.0;
};

/// Collapsed Gibbs sampler with cached count tables.
class LdaSampler {
 public:
  /// Random initial assignments drawn from `options.seed`.
  LdaSampler(const TokenizedCorpus& corpus, const LdaOptions& options);
  /// Resumes from existing assignments; alpha and beta come from the state.
  LdaSampler(const TokenizedCorpus& corpus, const GibbsState& state, const LdaOptions& options);

  void sweep();
  /// Fixed-point (Minka) update of the asymmetric alpha from document-topic
  /// count histograms.
  void optimize_alpha(int rounds = 5);

  double log_likelihood() const;
  double ll_per_token() const;
  TopicModel model() const;
  GibbsState state() const;

  /// True when counts rebuilt from the assignments equal the cached tables.
  bool counts_consistent() const;

  const std::vector<double>& alpha() const noexcept { return alpha_; }
  std::size_t num_tokens() const noexcept { return types_.size(); }

 private:
  void init_layout(const TokenizedCorpus& corpus);
  void rebuild_counts();
  void sweep_serial();
  void sweep_parallel();

  std::size_t num_topics_;
  std::size_t vocab_size_;
  std::vector<std::size_t> doc_offsets_;  // CSR over tokens
  std::vector<std::uint32_t> types_;
  std::vector<std::uint32_t> topics_;
  std::vector<std::int32_t> doc_topic_counts_;   // D x K
  std::vector<std::int32_t> type_topic_counts_;  // V x K
  std::vector<std::int32_t> topic_totals_;       // K
  std::vector<double> alpha_;
  double alpha_sum_ = 0.0;
  double beta_ = 0.0;
  std::vector<std::string> doc_ids_;
  std::vector<std::string> type_names_;
  std::mt19937_64 rng_;
  std::uint64_t seed_;
  std::uint64_t sweeps_ = 0;
  unsigned threads_;
};

struct LdaResult {
  TopicModel model;
  GibbsState state;
  std::vector<LikelihoodReport> trace;
};

/// Runs `iterations` sweeps; alpha is re-estimated every optimize_interval
/// sweeps after the burn-in. Throws InputError for K < 2, iterations < 1,
/// an empty corpus, or K larger than the token count.
LdaResult fit_lda(const TokenizedCorpus& corpus, const LdaOptions& options);

/// Builds the model implied by a set of assignments:
/// doc_topic = (n_dk + alpha_k) / (N_d + sum alpha),
/// term_topic = (n_kw + beta) / (n_k + V beta).
TopicModel derive_model(const GibbsState& state, std::size_t num_docs, std::size_t vocab_size);

enum class DocumentAttribute { year, source, country, org, sponsor };

std::string_view to_string(DocumentAttribute attribute);
/// Throws InputError for an unknown name.
DocumentAttribute parse_attribute(std::string_view name);

/// Per-topic fractional document counts for each group of a document attribute.
struct GroupedSums {
  DocumentAttribute attribute = DocumentAttribute::year;
  std::vector<std::string> groups;  // sorted
  Matrix sums;                      // K x G

  double total() const;
  std::size_t group_index(std::string_view group) const;  // npos if absent
};

/// Multi-valued attributes split a document's mass equally across values;
/// documents with no value are counted under the group "NA".
GroupedSums doc_topic_sums(const Matrix& doc_topic, std::span<const RawDocument> docs,
                           DocumentAttribute attribute);

}  // namespace hscan
