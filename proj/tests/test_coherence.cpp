#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hscan/coherence.hpp"
#include "hscan/error.hpp"
#include "testing.hpp"

using namespace hscan;

namespace {

// Two terms over 20 documents; term 0 appears in the first 10.
TokenizedCorpus pair_corpus(bool cooccur) {
  TokenizedCorpus c;
  c.vocabulary = {"t1", "t2"};
  for (int d = 0; d < 20; ++d) {
    TokenizedDoc doc{"d" + std::to_string(d), {}};
    if (d < 10) doc.tokens.push_back(0);
    if (cooccur ? d < 10 : d >= 10) doc.tokens.push_back(1);
    c.docs.push_back(doc);
  }
  c.doc_freq = {10, 10};
  return c;
}

}  // namespace

TEST_CASE("coherence of fully co-occurring and disjoint pairs") {
  const std::uint32_t ranked[] = {0, 1};
  const CoDocumentIndex with(pair_corpus(true));
  CHECK(coherence(ranked, with).value == doctest::Approx(std::log(11.0 / 10.0)));
  const CoDocumentIndex without(pair_corpus(false));
  CHECK(coherence(ranked, without).value == doctest::Approx(std::log(1.0 / 10.0)));
}

TEST_CASE("coherence matches a brute-force count") {
  const auto p = testing::planted_lda_corpus(3, 12, 90, 25, 0.4, 17);
  const CoDocumentIndex index(p.corpus);
  const std::vector<std::uint32_t> ranked = {3, 0, 17, 5, 30};
  double expected = 0.0;
  for (std::size_t m = 1; m < ranked.size(); ++m) {
    for (std::size_t l = 0; l < m; ++l) {
      double both = 0.0;
      double dl = 0.0;
      for (const auto& doc : p.corpus.docs) {
        const bool has_l = std::find(doc.tokens.begin(), doc.tokens.end(), ranked[l]) != doc.tokens.end();
        const bool has_m = std::find(doc.tokens.begin(), doc.tokens.end(), ranked[m]) != doc.tokens.end();
        dl += has_l;
        both += has_l && has_m;
      }
      if (dl > 0) expected += std::log((both + 1.0) / dl);
    }
  }
  CHECK(coherence(ranked, index).value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero document frequency pairs are skipped") {
  const std::size_t df[] = {0, 4};
  const std::vector<std::vector<std::size_t>> co = {{}, {0}};
  const auto r = coherence_from_counts(df, co);
  CHECK(r.value == 0.0);
  CHECK(r.skipped_pairs == 1);
}

TEST_CASE("identical top terms give identical coherence across topics") {
  TopicModel m;
  m.num_topics = 2;
  m.term_topic = Matrix(2, 2);
  m.term_topic(0, 0) = m.term_topic(1, 0) = 0.6;
  m.term_topic(0, 1) = m.term_topic(1, 1) = 0.4;
  m.doc_topic = Matrix(20, 2, 0.5);
  const auto diags = compute_diagnostics(m, pair_corpus(true), 2);
  REQUIRE(diags.size() == 2);
  CHECK(diags[0].coherence == diags[1].coherence);
  CHECK(diags[0].top_terms.size() == 2);
  CHECK(diags[0].token_count == doctest::Approx(10.0));

  m.term_topic = Matrix(2, 3);
  CHECK_THROWS(compute_diagnostics(m, pair_corpus(true), 2));
}

TEST_CASE("top terms break weight ties by lower index") {
  TopicModel m;
  m.num_topics = 1;
  m.term_topic = Matrix(1, 4);
  m.term_topic(0, 0) = 0.2;
  m.term_topic(0, 1) = 0.3;
  m.term_topic(0, 2) = 0.3;
  m.term_topic(0, 3) = 0.2;
  CHECK(top_term_indices(m, 0, 3) == std::vector<std::uint32_t>{1, 2, 0});
}
