#include <doctest.h>

#include <cmath>
#include <random>

#include "hscan/config_file.hpp"
#include "hscan/error.hpp"
#include "hscan/text_io.hpp"
#include "testing.hpp"

using namespace hscan;

TEST_CASE("config map parses key=value with comments and overrides") {
  const auto c = ConfigMap::parse("# c\n a = 1 \n\nb=x y\na=2\n");
  CHECK(c.get_int("a", 0) == 2);
  CHECK(c.get_or("b", "") == "x y");
  CHECK(c.get_double("missing", 1.5) == 1.5);
  CHECK_THROWS_AS(ConfigMap::parse("novalue\n"), FormatError);
  CHECK_THROWS_AS(ConfigMap::parse("a=zz").get_int("a", 0), InputError);
}

TEST_CASE("config paths resolve against the file's directory") {
  testing::TempDir dir("cfg");
  testing::write_text(dir / "sub/scan.conf", "corpus=data.jsonl\nabs=/tmp/x\n");
  const auto c = ConfigMap::load(dir / "sub/scan.conf");
  CHECK(c.resolve_path("corpus") == dir.path() / "sub" / "data.jsonl");
  CHECK(c.resolve_path("abs") == std::filesystem::path("/tmp/x"));
}

TEST_CASE("csv quoting round-trips") {
  const std::vector<std::string> fields = {"plain", "a,b", "say \"hi\"", ""};
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + csv_escape(fields[i]);
  CHECK(parse_csv_record(line) == fields);
}

TEST_CASE("format_double is shortest round-trip") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    CHECK(*parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("gzip round trip and truncation") {
  testing::TempDir dir("gz");
  std::string payload;
  for (int i = 0; i < 5000; ++i) payload += std::to_string(i * 7919) + "\n";
  write_gzip_file(dir / "a.gz", payload);
  CHECK(read_gzip_file(dir / "a.gz") == payload);
  const auto bytes = read_file(dir / "a.gz");
  testing::write_text(dir / "b.gz", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_gzip_file(dir / "b.gz"), FormatError);
  CHECK_THROWS_AS(read_gzip_file(dir / "none.gz"), InputError);
}

TEST_CASE("split_lines drops carriage returns and keeps an unterminated tail") {
  const auto lines = split_lines("a\r\nb\nc");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "a");
  CHECK(lines[2] == "c");
}
