#include <doctest.h>

#include "hscan/error.hpp"
#include "hscan/mallet_format.hpp"
#include "hscan/text_io.hpp"
#include "testing.hpp"

using namespace hscan;

namespace {

const std::filesystem::path kFixtures = HSCAN_FIXTURE_DIR;

}  // namespace

TEST_CASE("state fixture parses with the documented header grammar") {
  const auto text = read_file(kFixtures / "state_two_docs.txt");
  const auto parsed = parse_mallet_state_text(text, "fixture");
  CHECK(parsed.state.alpha == std::vector<double>{0.1, 0.2});
  CHECK(parsed.state.beta == 0.01);
  REQUIRE(parsed.state.tokens.size() == 3);
  CHECK(parsed.state.tokens[2] == TokenAssignment{1, 0, 0, 1});
  CHECK(parsed.corpus.num_docs() == 2);
  CHECK(parsed.corpus.vocabulary == std::vector<std::string>{"sensor", "network"});
  CHECK(format_mallet_state(parsed.state) == text);
}

TEST_CASE("state gzip round trip is byte-identical") {
  testing::TempDir dir("state");
  const auto p = testing::planted_lda_corpus(3, 8, 30, 12, 0.5, 1);
  LdaOptions o;
  o.num_topics = 3;
  o.iterations = 5;
  const auto r = fit_lda(p.corpus, o);
  write_mallet_state(dir / "a.gz", r.state);
  const auto parsed = parse_mallet_state(dir / "a.gz");
  CHECK(parsed.state.tokens == r.state.tokens);
  CHECK(parsed.state.alpha == r.state.alpha);
  write_mallet_state(dir / "b.gz", parsed.state);
  CHECK(read_gzip_file(dir / "a.gz") == read_gzip_file(dir / "b.gz"));
  CHECK(read_file(dir / "a.gz") == read_file(dir / "b.gz"));
}

TEST_CASE("state grammar violations carry line numbers") {
  const std::string head = "#doc source pos typeindex type topic\n#alpha : 0.1 0.2 \n#beta : 0.01\n";
  const auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_mallet_state_text(text, "t");
    } catch (const FormatError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("garbage\n") == 1);
  CHECK(line_of(head + "0 NA 0 0 a 0\n0 NA 1 1 b x\n") == 5);
  CHECK(line_of(head + "0 NA 0 0 a 5\n") == 4);
  CHECK(line_of(head + "0 NA 0 0 a 0\n0 NA 1 0 b 1\n") == 5);
  CHECK(line_of(head + "0 NA 0 0 a 0 extra\n") == 4);
}

TEST_CASE("truncated gzip state fails without partial output") {
  testing::TempDir dir("trunc");
  write_gzip_file(dir / "s.gz", read_file(kFixtures / "state_two_docs.txt"));
  const auto bytes = read_file(dir / "s.gz");
  testing::write_text(dir / "cut.gz", bytes.substr(0, bytes.size() - 12));
  CHECK_THROWS_AS(parse_mallet_state(dir / "cut.gz"), FormatError);
}

TEST_CASE("diagnostics fixture coherence and words") {
  const auto d = parse_diagnostics_xml(kFixtures / "diagnostics_blockchain.xml");
  REQUIRE(d.size() == 1);
  CHECK(d[0].coherence == -439.0);
  REQUIRE(d[0].top_terms.size() == 3);
  CHECK(d[0].top_terms[0].first == "blockchain");
  CHECK(d[0].top_terms[2].first == "smart_contract");
  CHECK(parse_diagnostics_xml(kFixtures / "diagnostics_empty.xml").empty());
}

TEST_CASE("corrupt diagnostics report the line") {
  try {
    parse_diagnostics_xml(kFixtures / "diagnostics_corrupt.xml");
    FAIL("expected a parse error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 5);
  }
}

TEST_CASE("diagnostics emitter round-trips, missing coherence stays absent") {
  std::vector<TopicDiagnostics> in(2);
  in[0].topic_id = 0;
  in[0].coherence = -12.5;
  in[0].token_count = 40.25;
  in[0].top_terms = {{"a&b", 0.5}, {"c<d", 0.25}};
  in[1].topic_id = 1;
  const auto out = parse_diagnostics_xml_text(format_diagnostics_xml(in), "mem");
  REQUIRE(out.size() == 2);
  CHECK(out[0].coherence == -12.5);
  CHECK(out[0].token_count == 40.25);
  CHECK(out[0].top_terms == in[0].top_terms);
  CHECK_FALSE(out[1].has_coherence());
}
