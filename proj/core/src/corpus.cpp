#include "hscan/corpus.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "hscan/config_file.hpp"
#include "hscan/error.hpp"
#include "hscan/parallel.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

using nlohmann::json;

std::string_view to_string(Source source) {
  switch (source) {
    case Source::publication: return "publication";
    case Source::patent: return "patent";
    case Source::grant: return "grant";
  }
  return "publication";
}

std::optional<Source> parse_source(std::string_view text) {
  const std::string lower = to_lower_ascii(trim(text));
  for (Source s : kAllSources) {
    if (lower == to_string(s)) return s;
  }
  return std::nullopt;
}

FieldSchema FieldSchema::from_config(const ConfigMap& config) {
  FieldSchema schema;
  schema.doc_id = config.get_or("schema.doc_id", schema.doc_id);
  schema.title = config.get_or("schema.title", schema.title);
  schema.abstract_text = config.get_or("schema.abstract", schema.abstract_text);
  schema.year = config.get_or("schema.year", schema.year);
  schema.source = config.get_or("schema.source", schema.source);
  schema.countries = config.get_or("schema.countries", schema.countries);
  schema.orgs = config.get_or("schema.orgs", schema.orgs);
  schema.sponsors = config.get_or("schema.sponsors", schema.sponsors);
  return schema;
}

namespace {

// Returns an error reason, or empty on success.
std::string read_string_list(const json& record, const std::string& field,
                             std::vector<std::string>& out) {
  const auto it = record.find(field);
  if (it == record.end() || it->is_null()) return {};
  if (!it->is_array()) return fmt::format("field '{}' is not an array", field);
  for (const auto& item : *it) {
    if (!item.is_string()) return fmt::format("field '{}' has a non-string entry", field);
    out.push_back(item.get<std::string>());
  }
  return {};
}

std::string parse_record(const json& record, const FieldSchema& schema, YearWindow window,
                         RawDocument& doc) {
  if (!record.is_object()) return "record is not a JSON object";

  const auto id = record.find(schema.doc_id);
  if (id == record.end()) return fmt::format("missing '{}'", schema.doc_id);
  if (id->is_string()) {
    doc.doc_id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    doc.doc_id = std::to_string(id->get<long long>());
  } else {
    return fmt::format("'{}' is not a string", schema.doc_id);
  }
  if (doc.doc_id.empty()) return "empty doc_id";
  if (std::any_of(doc.doc_id.begin(), doc.doc_id.end(),
                  [](unsigned char c) { return std::isspace(c) != 0; })) {
    return "doc_id contains whitespace";
  }

  for (auto [field, target] : {std::pair{&schema.title, &doc.title},
                               std::pair{&schema.abstract_text, &doc.abstract_text}}) {
    const auto it = record.find(*field);
    if (it == record.end() || it->is_null()) return fmt::format("missing '{}'", *field);
    if (!it->is_string()) return fmt::format("'{}' is not a string", *field);
    *target = it->get<std::string>();
  }

  const auto year = record.find(schema.year);
  if (year == record.end() || year->is_null()) return fmt::format("missing '{}'", schema.year);
  if (year->is_number_integer()) {
    doc.year = year->get<int>();
  } else if (year->is_string()) {
    const auto parsed = parse_int(year->get<std::string>());
    if (!parsed) return fmt::format("'{}' is not an integer", schema.year);
    doc.year = static_cast<int>(*parsed);
  } else {
    return fmt::format("'{}' is not an integer", schema.year);
  }
  if (!window.contains(doc.year)) {
    return fmt::format("year {} outside {}-{}", doc.year, window.first, window.last);
  }

  const auto source = record.find(schema.source);
  if (source == record.end() || source->is_null()) return fmt::format("missing '{}'", schema.source);
  if (!source->is_string()) return fmt::format("'{}' is not a string", schema.source);
  const auto parsed_source = parse_source(source->get<std::string>());
  if (!parsed_source) return fmt::format("unknown source '{}'", source->get<std::string>());
  doc.source = *parsed_source;

  if (auto err = read_string_list(record, schema.countries, doc.countries); !err.empty()) return err;
  if (auto err = read_string_list(record, schema.orgs, doc.orgs); !err.empty()) return err;
  if (auto err = read_string_list(record, schema.sponsors, doc.sponsors); !err.empty()) return err;
  return {};
}

}  // namespace

LoadedCorpus load_corpus(const std::filesystem::path& path, const FieldSchema& schema,
                         YearWindow window) {
  if (!std::filesystem::exists(path)) {
    throw InputError(fmt::format("corpus file not found: {}", path.string()));
  }
  const std::string text = read_file(path);
  const auto lines = split_lines(text);

  LoadedCorpus result;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    RawDocument doc;
    std::string reason;
    try {
      reason = parse_record(json::parse(lines[i]), schema, window, doc);
    } catch (const json::exception& e) {
      reason = fmt::format("invalid JSON: {}", e.what());
    }
    if (!reason.empty()) {
      result.rejects.push_back({i + 1, std::move(reason), std::string(lines[i])});
      continue;
    }
    if (const auto [it, inserted] = seen.emplace(doc.doc_id, i + 1); !inserted) {
      throw InputError(fmt::format("{}:{}: duplicate doc_id '{}' (first seen on line {})",
                                   path.string(), i + 1, doc.doc_id, it->second));
    }
    result.docs.push_back(std::move(doc));
  }
  return result;
}

void write_rejects(const std::filesystem::path& path, std::span<const RejectedRecord> rejects) {
  std::string out;
  for (const auto& r : rejects) {
    out += json{{"line", r.line}, {"reason", r.reason}, {"raw", r.raw}}.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_documents(const std::filesystem::path& path, std::span<const RawDocument> docs) {
  std::string out;
  for (const auto& d : docs) {
    json record = {{"doc_id", d.doc_id},       {"title", d.title},
                   {"abstract", d.abstract_text}, {"year", d.year},
                   {"source", to_string(d.source)}, {"countries", d.countries},
                   {"orgs", d.orgs},           {"sponsors", d.sponsors}};
    out += record.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

void VocabPrepConfig::validate() const {
  if (!(max_doc_fraction > 0.0 && max_doc_fraction <= 1.0)) {
    throw ValidationError(fmt::format("max_doc_fraction must be in (0,1], got {}", max_doc_fraction));
  }
  if (vocab_size == 0) throw ValidationError("vocab_size must be positive");
  for (const auto& [phrase, target] : replacements) {
    if (phrase.size() < 2) {
      throw ValidationError(fmt::format("replacement key '{}' is not multi-token",
                                        phrase.empty() ? "" : phrase.front()));
    }
    if (target.empty()) throw ValidationError("replacement with empty target");
  }
  for (const auto& [from, to] : lemma_map) {
    const auto it = lemma_map.find(to);
    if (it != lemma_map.end() && it->second != to) {
      throw ValidationError(
          fmt::format("lemma map is not idempotent: {} -> {} -> {}", from, to, it->second));
    }
  }
}

namespace {

std::vector<std::string> read_list(const std::filesystem::path& path) {
  std::vector<std::string> out;
  if (path.empty()) return out;
  const std::string text = read_file(path);
  for (auto line : split_lines(text)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    out.emplace_back(line);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> out;
  if (path.empty()) return out;
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw FormatError(path.string(), i + 1, "expected from<TAB>to");
    out.emplace_back(std::string(trim(line.substr(0, tab))), std::string(trim(line.substr(tab + 1))));
  }
  return out;
}

}  // namespace

VocabPrepConfig VocabPrepConfig::load(const std::filesystem::path& stopwords,
                                      const std::filesystem::path& multiword_stops,
                                      const std::filesystem::path& lemmas,
                                      const std::filesystem::path& replacements) {
  VocabPrepConfig config;
  for (auto& word : read_list(stopwords)) config.stopwords.insert(to_lower_ascii(word));
  for (auto& phrase : read_list(multiword_stops)) {
    auto tokens = raw_tokens(phrase);
    if (!tokens.empty()) config.multiword_stops.push_back(std::move(tokens));
  }
  for (auto& [from, to] : read_pairs(lemmas)) {
    config.lemma_map[to_lower_ascii(from)] = to_lower_ascii(to);
  }
  for (auto& [from, to] : read_pairs(replacements)) {
    config.replacements.emplace_back(raw_tokens(from), to_lower_ascii(to));
  }
  return config;
}

std::vector<std::string> raw_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '_' || c >= 0x80) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TextNormalizer::TextNormalizer(const VocabPrepConfig& config)
    : stopwords_(config.stopwords), lemmas_(config.lemma_map) {
  std::vector<PhraseRule> stops;
  for (const auto& phrase : config.multiword_stops) stops.push_back({phrase, {}});
  stops_ = index_phrases(std::move(stops));
  std::vector<PhraseRule> replacements;
  for (const auto& [phrase, target] : config.replacements) replacements.push_back({phrase, target});
  replacements_ = index_phrases(std::move(replacements));
}

TextNormalizer::PhraseIndex TextNormalizer::index_phrases(std::vector<PhraseRule> rules) {
  PhraseIndex index;
  for (auto& rule : rules) {
    if (rule.tokens.empty()) continue;
    index[rule.tokens.front()].push_back(std::move(rule));
  }
  // Longest first; equal lengths resolved by token text so file order never matters.
  for (auto& [first, bucket] : index) {
    std::stable_sort(bucket.begin(), bucket.end(), [](const PhraseRule& a, const PhraseRule& b) {
      if (a.tokens.size() != b.tokens.size()) return a.tokens.size() > b.tokens.size();
      return a.tokens < b.tokens;
    });
  }
  return index;
}

std::vector<std::string> TextNormalizer::apply_phrases(const std::vector<std::string>& tokens,
                                                       const PhraseIndex& index, bool drop) {
  if (index.empty()) return tokens;
  std::vector<std::string> out;
  out.reserve(tokens.size());
  std::size_t i = 0;
  while (i < tokens.size()) {
    const PhraseRule* match = nullptr;
    if (const auto it = index.find(tokens[i]); it != index.end()) {
      for (const auto& rule : it->second) {
        if (i + rule.tokens.size() <= tokens.size() &&
            std::equal(rule.tokens.begin(), rule.tokens.end(), tokens.begin() + i)) {
          match = &rule;
          break;
        }
      }
    }
    if (match == nullptr) {
      out.push_back(tokens[i]);
      ++i;
      continue;
    }
    if (!drop) out.push_back(match->replacement);
    i += match->tokens.size();
  }
  return out;
}

std::vector<std::string> TextNormalizer::normalize(std::string_view text) const {
  auto tokens = apply_phrases(raw_tokens(text), stops_, true);
  tokens = apply_phrases(tokens, replacements_, false);

  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (auto& token : tokens) {
    if (token.size() < 2) continue;
    if (std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c); })) {
      continue;
    }
    if (const auto it = lemmas_.find(token); it != lemmas_.end()) token = it->second;
    if (stopwords_.contains(token)) continue;
    out.push_back(std::move(token));
  }
  return out;
}

std::vector<std::string> normalize_text(const RawDocument& doc, const VocabPrepConfig& config) {
  return TextNormalizer(config).normalize(doc.text());
}

std::vector<NormalizedDoc> normalize_documents(std::span<const RawDocument> docs,
                                               const VocabPrepConfig& config, unsigned threads) {
  const TextNormalizer normalizer(config);
  std::vector<NormalizedDoc> out(docs.size());
  parallel_for(docs.size(), threads, [&](std::size_t i) {
    out[i] = {docs[i].doc_id, normalizer.normalize(docs[i].text())};
  });
  return out;
}

std::size_t TokenizedCorpus::num_tokens() const noexcept {
  std::size_t total = 0;
  for (const auto& d : docs) total += d.tokens.size();
  return total;
}

std::optional<std::uint32_t> TokenizedCorpus::find(std::string_view token) const {
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i] == token) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

TokenizedCorpus prune_vocabulary(std::span<const NormalizedDoc> docs, const VocabPrepConfig& config) {
  config.validate();

  std::unordered_map<std::string, std::uint32_t> df;
  for (const auto& doc : docs) {
    std::vector<std::string_view> unique(doc.tokens.begin(), doc.tokens.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (auto token : unique) ++df[std::string(token)];
  }

  const double num_docs = static_cast<double>(docs.size());
  std::vector<std::pair<std::string, std::uint32_t>> ranked;
  ranked.reserve(df.size());
  for (auto& [token, count] : df) {
    if (static_cast<double>(count) / num_docs > config.max_doc_fraction) continue;
    ranked.emplace_back(token, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > config.vocab_size) ranked.resize(config.vocab_size);

  TokenizedCorpus corpus;
  corpus.lower_cutoff = ranked.empty() ? 0 : ranked.back().second;
  std::unordered_map<std::string_view, std::uint32_t> index;
  corpus.vocabulary.reserve(ranked.size());
  corpus.doc_freq.reserve(ranked.size());
  for (const auto& [token, count] : ranked) {
    corpus.vocabulary.push_back(token);
    corpus.doc_freq.push_back(count);
  }
  for (std::size_t i = 0; i < corpus.vocabulary.size(); ++i) {
    index.emplace(corpus.vocabulary[i], static_cast<std::uint32_t>(i));
  }

  corpus.docs.reserve(docs.size());
  for (const auto& doc : docs) {
    TokenizedDoc encoded{doc.doc_id, {}};
    encoded.tokens.reserve(doc.tokens.size());
    for (const auto& token : doc.tokens) {
      if (const auto it = index.find(token); it != index.end()) encoded.tokens.push_back(it->second);
    }
    corpus.docs.push_back(std::move(encoded));
  }
  return corpus;
}

void write_tokenized_corpus(const TokenizedCorpus& corpus, const std::filesystem::path& corpus_path,
                            const std::filesystem::path& vocab_path) {
  std::string out;
  for (const auto& doc : corpus.docs) {
    out += doc.doc_id;
    for (auto t : doc.tokens) {
      out += ' ';
      out += std::to_string(t);
    }
    out += '\n';
  }
  write_file_atomic(corpus_path, out);

  std::string vocab;
  for (std::size_t i = 0; i < corpus.vocabulary.size(); ++i) {
    vocab += fmt::format("{}\t{}\t{}\n", i, corpus.vocabulary[i], corpus.doc_freq[i]);
  }
  write_file_atomic(vocab_path, vocab);
}

TokenizedCorpus read_tokenized_corpus(const std::filesystem::path& corpus_path,
                                      const std::filesystem::path& vocab_path) {
  TokenizedCorpus corpus;
  {
    const std::string text = read_file(vocab_path);
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto fields = split(lines[i], '\t');
      const auto idx = fields.size() == 3 ? parse_int(fields[0]) : std::nullopt;
      const auto freq = fields.size() == 3 ? parse_int(fields[2]) : std::nullopt;
      if (!idx || !freq || *idx != static_cast<long long>(corpus.vocabulary.size())) {
        throw FormatError(vocab_path.string(), i + 1, "expected index<TAB>token<TAB>doc_freq");
      }
      corpus.vocabulary.emplace_back(fields[1]);
      corpus.doc_freq.push_back(static_cast<std::uint32_t>(*freq));
    }
  }
  corpus.lower_cutoff =
      corpus.doc_freq.empty() ? 0 : *std::min_element(corpus.doc_freq.begin(), corpus.doc_freq.end());

  const std::string text = read_file(corpus_path);
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = split_whitespace(lines[i]);
    if (fields.empty()) continue;
    TokenizedDoc doc{std::string(fields[0]), {}};
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const auto v = parse_int(fields[f]);
      if (!v || *v < 0 || static_cast<std::size_t>(*v) >= corpus.vocabulary.size()) {
        throw FormatError(corpus_path.string(), i + 1,
                          fmt::format("bad token index '{}'", fields[f]));
      }
      doc.tokens.push_back(static_cast<std::uint32_t>(*v));
    }
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace hscan
