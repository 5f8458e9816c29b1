#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace hscan {

class ConfigMap;

enum class Source { publication, patent, grant };

std::string_view to_string(Source source);
std::optional<Source> parse_source(std::string_view text);
inline constexpr Source kAllSources[] = {Source::publication, Source::patent, Source::grant};

/// Inclusive calendar-year range.
struct YearWindow {
  int first = 2014;
  int last = 2018;

  bool contains(int year) const noexcept { return year >= first && year <= last; }
  int size() const noexcept { return last - first + 1; }
};

struct RawDocument {
  std::string doc_id;
  std::string title;
  std::string abstract_text;
  int year = 0;
  Source source = Source::publication;
  std::vector<std::string> countries;
  std::vector<std::string> orgs;
  std::vector<std::string> sponsors;

  /// Title and abstract joined by a single space.
  std::string text() const { return title + " " + abstract_text; }
};

/// JSON field names used when reading corpus records.
struct FieldSchema {
  std::string doc_id = "doc_id";
  std::string title = "title";
  std::string abstract_text = "abstract";
  std::string year = "year";
  std::string source = "source";
  std::string countries = "countries";
  std::string orgs = "orgs";
  std::string sponsors = "sponsors";

  /// Reads `schema.<field>=<name>` overrides.
  static FieldSchema from_config(const ConfigMap& config);
};

struct RejectedRecord {
  std::size_t line = 0;
  std::string reason;
  std::string raw;
};

struct LoadedCorpus {
  std::vector<RawDocument> docs;
  std::vector<RejectedRecord> rejects;
};

/// Reads JSON-lines records in file order. Malformed records are collected
/// as rejects; a duplicate doc_id throws InputError naming the id.
LoadedCorpus load_corpus(const std::filesystem::path& path, const FieldSchema& schema = {},
                         YearWindow window = {});

/// One JSON object per line: {"line":..,"reason":..,"raw":..}.
void write_rejects(const std::filesystem::path& path, std::span<const RejectedRecord> rejects);

/// Writes documents with the default schema so load_corpus can read them back.
void write_documents(const std::filesystem::path& path, std::span<const RawDocument> docs);

using Phrase = std::vector<std::string>;

struct VocabPrepConfig {
  std::unordered_set<std::string> stopwords;
  std::vector<Phrase> multiword_stops;
  std::unordered_map<std::string, std::string> lemma_map;
  std::vector<std::pair<Phrase, std::string>> replacements;
  double max_doc_fraction = 0.05;
  std::size_t vocab_size = 200000;

  /// Throws ValidationError if an invariant does not hold.
  void validate() const;

  /// Stopwords and multiword stops: one entry per line. Lemmas and
  /// replacements: `from<TAB>to` per line. Empty paths are skipped.
  static VocabPrepConfig load(const std::filesystem::path& stopwords,
                              const std::filesystem::path& multiword_stops,
                              const std::filesystem::path& lemmas,
                              const std::filesystem::path& replacements);
};

/// Lowercases and splits on anything that is not alphanumeric or '_'.
/// Bytes >= 0x80 are kept inside tokens so UTF-8 words stay whole.
std::vector<std::string> raw_tokens(std::string_view text);

/// Precompiled form of a VocabPrepConfig's text rules.
class TextNormalizer {
 public:
  explicit TextNormalizer(const VocabPrepConfig& config);

  /// Multiword stops are removed, then replacements applied (longest match
  /// first, left to right, no overlaps), then numbers and 1-char tokens
  /// dropped, lemmas applied, and single-token stopwords removed last.
  std::vector<std::string> normalize(std::string_view text) const;

 private:
  struct PhraseRule {
    std::vector<std::string> tokens;
    std::string replacement;  // empty for stop phrases
  };
  using PhraseIndex = std::unordered_map<std::string, std::vector<PhraseRule>>;

  static PhraseIndex index_phrases(std::vector<PhraseRule> rules);
  static std::vector<std::string> apply_phrases(const std::vector<std::string>& tokens,
                                                const PhraseIndex& index, bool drop);

  PhraseIndex stops_;
  PhraseIndex replacements_;
  std::unordered_set<std::string> stopwords_;
  std::unordered_map<std::string, std::string> lemmas_;
};

std::vector<std::string> normalize_text(const RawDocument& doc, const VocabPrepConfig& config);

struct NormalizedDoc {
  std::string doc_id;
  std::vector<std::string> tokens;
};

std::vector<NormalizedDoc> normalize_documents(std::span<const RawDocument> docs,
                                               const VocabPrepConfig& config, unsigned threads = 1);

struct TokenizedDoc {
  std::string doc_id;
  std::vector<std::uint32_t> tokens;
};

struct TokenizedCorpus {
  std::vector<TokenizedDoc> docs;
  std::vector<std::string> vocabulary;
  std::vector<std::uint32_t> doc_freq;
  std::uint32_t lower_cutoff = 0;

  std::size_t num_docs() const noexcept { return docs.size(); }
  std::size_t vocab_size() const noexcept { return vocabulary.size(); }
  std::size_t num_tokens() const noexcept;
  std::optional<std::uint32_t> find(std::string_view token) const;
};

/// Drops tokens found in more than max_doc_fraction of documents, keeps the
/// vocab_size most frequent of the rest (ties by token text), and re-encodes
/// documents. Vocabulary indices follow that ranking.
TokenizedCorpus prune_vocabulary(std::span<const NormalizedDoc> docs, const VocabPrepConfig& config);

/// `<doc_id> <idx> <idx> ...` per line and `index<TAB>token<TAB>doc_freq`.
void write_tokenized_corpus(const TokenizedCorpus& corpus, const std::filesystem::path& corpus_path,
                            const std::filesystem::path& vocab_path);
TokenizedCorpus read_tokenized_corpus(const std::filesystem::path& corpus_path,
                                      const std::filesystem::path& vocab_path);

}  // namespace hscan
