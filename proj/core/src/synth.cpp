#include "hscan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "hscan/error.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "pl", "st"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
constexpr const char* kCodas[] = {"", "n", "r", "s", "x", "m", "l"};
constexpr const char* kCountries[] = {"US", "CN", "DE", "JP", "GB", "KR", "FR", "IN"};
constexpr const char* kFiller[] = {"the", "of", "and", "in", "for", "with", "we", "this", "study"};

std::string make_word(std::mt19937_64& rng) {
  const auto pick = [&](auto& arr) { return std::string(arr[rng() % std::size(arr)]); };
  std::string w;
  const int syllables = 2 + static_cast<int>(rng() % 2);
  for (int s = 0; s < syllables; ++s) w += pick(kOnsets) + pick(kVowels);
  return w + pick(kCodas);
}

}  // namespace

SynthCorpus generate_synthetic_corpus(const SynthOptions& o) {
  if (o.num_topics < 2 || o.num_docs == 0 || o.words_per_topic < 5 || o.doc_length < 5) {
    throw InputError("synthetic corpus needs >= 2 topics, >= 1 document, >= 5 words per topic and per document");
  }
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SynthCorpus out;
  auto& truth = out.truth;

  std::set<std::string> used(std::begin(kFiller), std::end(kFiller));
  truth.fastest_topic = static_cast<int>(rng() % o.num_topics);
  for (std::size_t t = 0; t < o.num_topics; ++t) {
    SynthTopic topic;
    topic.id = static_cast<int>(t);
    topic.k = topic.id == truth.fastest_topic ? o.top_k : o.k_lo + (o.k_hi - o.k_lo) * unit(rng);
    while (topic.vocabulary.size() < o.words_per_topic) {
      auto w = make_word(rng);
      if (used.insert(w).second) topic.vocabulary.push_back(std::move(w));
    }
    topic.home_country = kCountries[rng() % std::size(kCountries)];
    topic.favored_source = std::string(to_string(kAllSources[rng() % std::size(kAllSources)]));
    truth.topics.push_back(std::move(topic));
  }

  const int years = o.window.size();
  std::vector<double> cell_weights;
  for (const auto& topic : truth.topics) {
    for (int y = 0; y < years; ++y) cell_weights.push_back(std::exp(topic.k * y));
  }
  std::discrete_distribution<std::size_t> cell(cell_weights.begin(), cell_weights.end());
  std::vector<double> zipf(o.words_per_topic);
  for (std::size_t r = 0; r < zipf.size(); ++r) zipf[r] = 1.0 / static_cast<double>(r + 1);
  std::discrete_distribution<std::size_t> word_rank(zipf.begin(), zipf.end());

  for (std::size_t d = 0; d < o.num_docs; ++d) {
    const std::size_t c = cell(rng);
    const auto t = c / static_cast<std::size_t>(years);
    const int year_offset = static_cast<int>(c % static_cast<std::size_t>(years));
    const auto& topic = truth.topics[t];
    std::size_t secondary = rng() % o.num_topics;
    if (secondary == t) secondary = (secondary + 1) % o.num_topics;

    const auto draw = [&](std::size_t n) {
      std::string text;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& vocab = unit(rng) < o.purity ? topic.vocabulary : truth.topics[secondary].vocabulary;
        if (!text.empty()) text += ' ';
        if (unit(rng) < 0.1) {
          text += kFiller[rng() % std::size(kFiller)];
          text += ' ';
        }
        text += vocab[word_rank(rng)];
      }
      return text;
    };

    RawDocument doc;
    doc.doc_id = fmt::format("syn{:05d}", d);
    doc.title = draw(6);
    doc.abstract_text = draw(o.doc_length);
    if (unit(rng) < 0.05) doc.abstract_text += " Copyright John Wiley and Sons";
    doc.year = o.window.first + year_offset;
    doc.source = unit(rng) < 0.6 ? *parse_source(topic.favored_source) : kAllSources[rng() % std::size(kAllSources)];
    const std::size_t n_countries = 1 + rng() % 2;
    for (std::size_t i = 0; i < n_countries; ++i) {
      std::string country = unit(rng) < 0.5 ? topic.home_country : kCountries[rng() % std::size(kCountries)];
      if (std::find(doc.countries.begin(), doc.countries.end(), country) == doc.countries.end()) {
        doc.countries.push_back(std::move(country));
      }
    }
    doc.orgs.push_back(fmt::format("org{:02d}", rng() % 30));
    if (doc.source == Source::grant) doc.sponsors.push_back(fmt::format("agency{}", rng() % 5));
    out.docs.push_back(std::move(doc));
    truth.primary_topic.push_back(static_cast<int>(t));
  }
  return out;
}

void write_synthetic_bundle(const std::filesystem::path& dir, const SynthCorpus& corpus, const SynthOptions& o) {
  std::filesystem::create_directories(dir);
  write_documents(dir / "corpus.jsonl", corpus.docs);

  nlohmann::ordered_json truth;
  truth["seed"] = o.seed;
  truth["num_docs"] = corpus.docs.size();
  truth["fastest_topic"] = corpus.truth.fastest_topic;
  truth["topics"] = nlohmann::ordered_json::array();
  for (const auto& t : corpus.truth.topics) {
    truth["topics"].push_back({{"id", t.id},
                               {"k", t.k},
                               {"home_country", t.home_country},
                               {"favored_source", t.favored_source},
                               {"vocabulary", t.vocabulary}});
  }
  truth["primary_topic"] = corpus.truth.primary_topic;
  write_file_atomic(dir / "truth.json", truth.dump(1) + "\n");

  std::string stop;
  for (const auto* w : kFiller) stop += std::string(w) + "\n";
  write_file_atomic(dir / "stopwords.txt", stop);
  write_file_atomic(dir / "multiword_stops.txt", "copyright john wiley and sons\n");
  write_file_atomic(dir / "lemmas.tsv", "studies\tstudy\n");
  write_file_atomic(dir / "replacements.tsv", "global positioning system\tglobal_positioning_system\n");

  const std::string conf = fmt::format(
      "# synthetic corpus, seed {}\n"
      "corpus=corpus.jsonl\n"
      "stopwords=stopwords.txt\n"
      "multiword_stops=multiword_stops.txt\n"
      "lemmas=lemmas.tsv\n"
      "replacements=replacements.tsv\n"
      "year_first={}\n"
      "year_last={}\n"
      "max_doc_fraction=0.5\n"
      "vocab_size=200000\n"
      "num_topics={}\n"
      "iterations=300\n"
      "seed={}\n",
      o.seed, o.window.first, o.window.last, o.num_topics, o.seed);
  write_file_atomic(dir / "scan.conf", conf);
}

SynthTruth read_truth(const std::filesystem::path& path) {
  SynthTruth truth;
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    truth.fastest_topic = j.at("fastest_topic").get<int>();
    for (const auto& t : j.at("topics")) {
      SynthTopic topic;
      topic.id = t.at("id").get<int>();
      topic.k = t.at("k").get<double>();
      topic.home_country = t.at("home_country").get<std::string>();
      topic.favored_source = t.at("favored_source").get<std::string>();
      topic.vocabulary = t.at("vocabulary").get<std::vector<std::string>>();
      truth.topics.push_back(std::move(topic));
    }
    truth.primary_topic = j.at("primary_topic").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string(), 0, e.what());
  }
  return truth;
}

}  // namespace hscan
