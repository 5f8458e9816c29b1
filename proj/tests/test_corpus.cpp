#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "hscan/corpus.hpp"
#include "hscan/error.hpp"
#include "testing.hpp"

using namespace hscan;
using Tokens = std::vector<std::string>;

namespace {

std::string record(const std::string& id, int year, const std::string& extra = "") {
  return R"({"doc_id":")" + id + R"(","title":"t )" + id + R"(","abstract":"a","year":)" + std::to_string(year) +
         R"(,"source":"publication")" + extra + "}\n";
}

}  // namespace

TEST_CASE("load_corpus: valid, missing year, duplicate id") {
  testing::TempDir dir("corpus");
  testing::write_text(dir / "ok.jsonl", record("d1", 2014) + record("d2", 2015) + record("d3", 2018));
  auto ok = load_corpus(dir / "ok.jsonl");
  CHECK(ok.docs.size() == 3);
  CHECK(ok.rejects.empty());

  testing::write_text(dir / "bad.jsonl",
                      record("d1", 2014) +
                          R"({"doc_id":"d2","title":"x","abstract":"y","source":"patent"})" "\n" +
                          record("d3", 2016));
  auto bad = load_corpus(dir / "bad.jsonl");
  CHECK(bad.docs.size() == 2);
  REQUIRE(bad.rejects.size() == 1);
  CHECK(bad.rejects[0].line == 2);
  CHECK(bad.rejects[0].reason.find("year") != std::string::npos);

  testing::write_text(dir / "dup.jsonl", record("d1", 2014) + record("dX", 2015) + record("dX", 2016));
  try {
    load_corpus(dir / "dup.jsonl");
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("dX") != std::string::npos);
  }
}

TEST_CASE("load_corpus: attributes, schema overrides and window") {
  testing::TempDir dir("corpus2");
  testing::write_text(dir / "c.jsonl",
                      R"({"id":7,"name":"T","summary":"S","yr":"2016","source":"grant","countries":["US","CN"],"sponsors":["nsf"]})"
                      "\n" +
                          record("late", 2020));
  FieldSchema schema;
  schema.doc_id = "id";
  schema.title = "name";
  schema.abstract_text = "summary";
  schema.year = "yr";
  auto c = load_corpus(dir / "c.jsonl", schema);
  REQUIRE(c.docs.size() == 1);
  CHECK(c.docs[0].doc_id == "7");
  CHECK(c.docs[0].year == 2016);
  CHECK(c.docs[0].source == Source::grant);
  CHECK(c.docs[0].countries == Tokens{"US", "CN"});
  CHECK(c.docs[0].sponsors == Tokens{"nsf"});
  REQUIRE(c.rejects.size() == 1);

  write_documents(dir / "round.jsonl", c.docs);
  auto again = load_corpus(dir / "round.jsonl");
  REQUIRE(again.docs.size() == 1);
  CHECK(again.docs[0].countries == c.docs[0].countries);
  CHECK(again.docs[0].text() == c.docs[0].text());
}

TEST_CASE("normalization: replacements, multiword stops, lemmas") {
  VocabPrepConfig cfg;
  cfg.replacements.push_back({{"global", "positioning", "system"}, "global_positioning_system"});
  cfg.multiword_stops.push_back({"copyright", "john", "wiley", "and", "sons"});
  cfg.lemma_map["networks"] = "network";
  const TextNormalizer norm(cfg);
  CHECK(norm.normalize("Global Positioning System accuracy") == Tokens{"global_positioning_system", "accuracy"});
  CHECK(norm.normalize("copyright John Wiley and Sons remainder") == Tokens{"remainder"});
  CHECK(norm.normalize("ground truth") == Tokens{"ground", "truth"});
  CHECK(norm.normalize("neural networks 2019 a") == Tokens{"neural", "network"});
}

TEST_CASE("normalization: stopwords drop after lemmatization") {
  VocabPrepConfig cfg;
  cfg.stopwords = {"method"};
  cfg.lemma_map["methods"] = "method";
  CHECK(TextNormalizer(cfg).normalize("Methods for sensing") == Tokens{"for", "sensing"});
}

TEST_CASE("vocab config validation") {
  VocabPrepConfig cfg;
  cfg.lemma_map["a"] = "b";
  cfg.lemma_map["b"] = "c";
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  VocabPrepConfig single;
  single.replacements.push_back({{"one"}, "x"});
  CHECK_THROWS_AS(single.validate(), ValidationError);
}

TEST_CASE("pruning: token in 6 of 100 docs exceeds 5 percent") {
  std::vector<NormalizedDoc> docs(100);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    docs[d].doc_id = "d" + std::to_string(d);
    docs[d].tokens = {"w" + std::to_string(d % 25)};
    if (d < 6) docs[d].tokens.push_back("common");
    if (d < 5) docs[d].tokens.push_back("edge");
  }
  VocabPrepConfig cfg;
  cfg.max_doc_fraction = 0.05;
  const auto c = prune_vocabulary(docs, cfg);
  CHECK_FALSE(c.find("common").has_value());
  CHECK(c.find("edge").has_value());
}

TEST_CASE("pruning: vocab_size keeps the highest document frequencies") {
  std::mt19937_64 rng(11);
  std::vector<NormalizedDoc> docs(40);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    docs[d].doc_id = std::to_string(d);
    for (int t = 0; t < 10; ++t) {
      if (std::uniform_int_distribution<int>(0, 9)(rng) < t) docs[d].tokens.push_back("tok" + std::to_string(t));
    }
  }
  VocabPrepConfig cfg;
  cfg.max_doc_fraction = 1.0;
  cfg.vocab_size = 5;
  const auto c = prune_vocabulary(docs, cfg);

  std::map<std::string, int> df;
  for (const auto& d : docs) {
    for (const auto& t : std::set<std::string>(d.tokens.begin(), d.tokens.end())) ++df[t];
  }
  std::vector<std::pair<int, std::string>> order;
  for (const auto& [t, n] : df) order.emplace_back(-n, t);
  std::sort(order.begin(), order.end());
  REQUIRE(c.vocab_size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(c.vocabulary[i] == order[i].second);
  CHECK(c.lower_cutoff == static_cast<std::uint32_t>(-order[4].first));

  cfg.vocab_size = 200000;
  CHECK(prune_vocabulary(docs, cfg).vocab_size() == df.size());
}

TEST_CASE("tokenized corpus round-trips through text files") {
  testing::TempDir dir("tok");
  std::vector<NormalizedDoc> docs = {{"a", {"x", "y", "x"}}, {"b", {}}, {"c", {"y", "z"}}};
  VocabPrepConfig cfg;
  cfg.max_doc_fraction = 1.0;
  const auto c = prune_vocabulary(docs, cfg);
  write_tokenized_corpus(c, dir / "corpus.txt", dir / "vocab.tsv");
  const auto r = read_tokenized_corpus(dir / "corpus.txt", dir / "vocab.tsv");
  CHECK(r.vocabulary == c.vocabulary);
  CHECK(r.doc_freq == c.doc_freq);
  REQUIRE(r.num_docs() == 3);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(r.docs[d].doc_id == c.docs[d].doc_id);
    CHECK(r.docs[d].tokens == c.docs[d].tokens);
  }
}
