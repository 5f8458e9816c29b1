#include "hscan/topic_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "hscan/error.hpp"
#include "hscan/parallel.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

std::vector<double> TopicModel::topic_sizes() const {
  std::vector<double> sizes(num_topics, 0.0);
  for (std::size_t d = 0; d < doc_topic.rows(); ++d) {
    const auto row = doc_topic.row(d);
    for (std::size_t k = 0; k < num_topics; ++k) sizes[k] += row[k];
  }
  return sizes;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct CountTables {
  std::size_t num_topics;
  std::size_t vocab_size;
  std::size_t num_docs;
  const std::int32_t* doc_topic;   // D x K
  const std::int32_t* type_topic;  // V x K
  const std::int32_t* totals;      // K
};

double joint_log_likelihood(const CountTables& c, std::span<const double> alpha, double beta) {
  const std::size_t K = c.num_topics;
  const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  std::vector<double> lgamma_alpha(K);
  for (std::size_t k = 0; k < K; ++k) lgamma_alpha[k] = std::lgamma(alpha[k]);

  double ll = 0.0;
  for (std::size_t d = 0; d < c.num_docs; ++d) {
    const std::int32_t* row = c.doc_topic + d * K;
    long long length = 0;
    for (std::size_t k = 0; k < K; ++k) {
      if (row[k] == 0) continue;
      length += row[k];
      ll += std::lgamma(row[k] + alpha[k]) - lgamma_alpha[k];
    }
    ll += std::lgamma(alpha_sum) - std::lgamma(static_cast<double>(length) + alpha_sum);
  }
  const double lgamma_beta = std::lgamma(beta);
  const double beta_sum = beta * static_cast<double>(c.vocab_size);
  for (std::size_t w = 0; w < c.vocab_size; ++w) {
    const std::int32_t* row = c.type_topic + w * K;
    for (std::size_t k = 0; k < K; ++k) {
      if (row[k] != 0) ll += std::lgamma(row[k] + beta) - lgamma_beta;
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    ll += std::lgamma(beta_sum) - std::lgamma(c.totals[k] + beta_sum);
  }
  return ll;
}

TopicModel model_from_counts(const CountTables& c, std::span<const double> alpha, double beta,
                             std::size_t num_tokens) {
  const std::size_t K = c.num_topics;
  TopicModel model;
  model.num_topics = K;
  model.alpha.assign(alpha.begin(), alpha.end());
  model.beta = beta;
  const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);

  model.doc_topic = Matrix(c.num_docs, K);
  for (std::size_t d = 0; d < c.num_docs; ++d) {
    const std::int32_t* counts = c.doc_topic + d * K;
    long long length = 0;
    for (std::size_t k = 0; k < K; ++k) length += counts[k];
    const double denom = static_cast<double>(length) + alpha_sum;
    auto row = model.doc_topic.row(d);
    for (std::size_t k = 0; k < K; ++k) row[k] = (counts[k] + alpha[k]) / denom;
  }

  const double beta_sum = beta * static_cast<double>(c.vocab_size);
  model.term_topic = Matrix(K, c.vocab_size);
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = c.totals[k] + beta_sum;
    auto row = model.term_topic.row(k);
    for (std::size_t w = 0; w < c.vocab_size; ++w) row[w] = (c.type_topic[w * K + k] + beta) / denom;
  }
  model.ll_per_token =
      num_tokens == 0 ? 0.0 : joint_log_likelihood(c, alpha, beta) / static_cast<double>(num_tokens);
  return model;
}

}  // namespace

LdaSampler::LdaSampler(const TokenizedCorpus& corpus, const LdaOptions& options)
    : num_topics_(options.num_topics),
      vocab_size_(corpus.vocab_size()),
      alpha_(options.num_topics, options.alpha_sum / static_cast<double>(options.num_topics)),
      alpha_sum_(options.alpha_sum),
      beta_(options.beta),
      rng_(options.seed),
      seed_(options.seed),
      threads_(std::max(1u, options.threads)) {
  init_layout(corpus);
  topics_.resize(types_.size());
  for (auto& z : topics_) z = static_cast<std::uint32_t>(rng_() % num_topics_);
  rebuild_counts();
}

LdaSampler::LdaSampler(const TokenizedCorpus& corpus, const GibbsState& state, const LdaOptions& options)
    : num_topics_(state.num_topics()),
      vocab_size_(corpus.vocab_size()),
      alpha_(state.alpha),
      alpha_sum_(std::accumulate(state.alpha.begin(), state.alpha.end(), 0.0)),
      beta_(state.beta),
      rng_(options.seed),
      seed_(options.seed),
      threads_(std::max(1u, options.threads)) {
  if (num_topics_ < 2) throw InputError("Gibbs state has fewer than 2 topics");
  init_layout(corpus);
  topics_.assign(types_.size(), 0);
  std::vector<bool> assigned(types_.size(), false);
  for (const auto& t : state.tokens) {
    if (t.doc + 1 >= doc_offsets_.size()) {
      throw InputError(fmt::format("state token refers to document {} beyond corpus", t.doc));
    }
    const std::size_t index = doc_offsets_[t.doc] + t.pos;
    if (index >= doc_offsets_[t.doc + 1]) {
      throw InputError(fmt::format("state token position {} beyond document {}", t.pos, t.doc));
    }
    if (types_[index] != t.type) {
      throw InputError(fmt::format("state type {} disagrees with corpus at doc {} pos {}", t.type,
                                   t.doc, t.pos));
    }
    if (t.topic >= num_topics_) throw InputError(fmt::format("state topic {} out of range", t.topic));
    if (assigned[index]) {
      throw InputError(fmt::format("duplicate state token at doc {} pos {}", t.doc, t.pos));
    }
    assigned[index] = true;
    topics_[index] = t.topic;
  }
  if (std::find(assigned.begin(), assigned.end(), false) != assigned.end()) {
    throw InputError("Gibbs state does not cover every corpus token");
  }
  rebuild_counts();
}

void LdaSampler::init_layout(const TokenizedCorpus& corpus) {
  doc_offsets_.assign(1, 0);
  doc_offsets_.reserve(corpus.num_docs() + 1);
  types_.clear();
  types_.reserve(corpus.num_tokens());
  doc_ids_.clear();
  for (const auto& doc : corpus.docs) {
    types_.insert(types_.end(), doc.tokens.begin(), doc.tokens.end());
    doc_offsets_.push_back(types_.size());
    doc_ids_.push_back(doc.doc_id);
  }
  type_names_ = corpus.vocabulary;
}

void LdaSampler::rebuild_counts() {
  const std::size_t K = num_topics_;
  const std::size_t D = doc_offsets_.size() - 1;
  doc_topic_counts_.assign(D * K, 0);
  type_topic_counts_.assign(vocab_size_ * K, 0);
  topic_totals_.assign(K, 0);
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t i = doc_offsets_[d]; i < doc_offsets_[d + 1]; ++i) {
      const std::uint32_t z = topics_[i];
      ++doc_topic_counts_[d * K + z];
      ++type_topic_counts_[types_[i] * K + z];
      ++topic_totals_[z];
    }
  }
}

void LdaSampler::sweep() {
  if (threads_ > 1 && doc_offsets_.size() > 2) {
    sweep_parallel();
  } else {
    sweep_serial();
  }
  ++sweeps_;
}

void LdaSampler::sweep_serial() {
  const std::size_t K = num_topics_;
  const double beta_sum = beta_ * static_cast<double>(vocab_size_);
  std::vector<double> cdf(K);
  const std::size_t D = doc_offsets_.size() - 1;
  for (std::size_t d = 0; d < D; ++d) {
    std::int32_t* ndk = &doc_topic_counts_[d * K];
    for (std::size_t i = doc_offsets_[d]; i < doc_offsets_[d + 1]; ++i) {
      std::int32_t* nkw = &type_topic_counts_[types_[i] * K];
      std::uint32_t z = topics_[i];
      --ndk[z];
      --nkw[z];
      --topic_totals_[z];
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        total += (ndk[k] + alpha_[k]) * (nkw[k] + beta_) / (topic_totals_[k] + beta_sum);
        cdf[k] = total;
      }
      const double u = uniform01(rng_) * total;
      z = 0;
      while (z + 1 < K && cdf[z] <= u) ++z;
      topics_[i] = z;
      ++ndk[z];
      ++nkw[z];
      ++topic_totals_[z];
    }
  }
}

void LdaSampler::sweep_parallel() {
  const std::size_t K = num_topics_;
  const double beta_sum = beta_ * static_cast<double>(vocab_size_);
  const std::size_t D = doc_offsets_.size() - 1;
  const std::size_t workers = std::min<std::size_t>(threads_, D);
  const std::vector<std::int32_t> base_types = type_topic_counts_;
  const std::vector<std::int32_t> base_totals = topic_totals_;
  std::vector<std::vector<std::int32_t>> local_types(workers, base_types);
  std::vector<std::vector<std::int32_t>> local_totals(workers, base_totals);

  parallel_chunks(D, static_cast<unsigned>(workers), [&](std::size_t begin, std::size_t end, unsigned w) {
    std::mt19937_64 rng(splitmix64(seed_ ^ splitmix64(sweeps_ * 1024 + w)));
    auto& types = local_types[w];
    auto& totals = local_totals[w];
    std::vector<double> cdf(K);
    for (std::size_t d = begin; d < end; ++d) {
      std::int32_t* ndk = &doc_topic_counts_[d * K];
      for (std::size_t i = doc_offsets_[d]; i < doc_offsets_[d + 1]; ++i) {
        std::int32_t* nkw = &types[types_[i] * K];
        std::uint32_t z = topics_[i];
        --ndk[z];
        --nkw[z];
        --totals[z];
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          total += (ndk[k] + alpha_[k]) * (std::max(nkw[k], 0) + beta_) /
                   (std::max(totals[k], 0) + beta_sum);
          cdf[k] = total;
        }
        const double u = uniform01(rng) * total;
        z = 0;
        while (z + 1 < K && cdf[z] <= u) ++z;
        topics_[i] = z;
        ++ndk[z];
        ++nkw[z];
        ++totals[z];
      }
    }
  });

  for (std::size_t i = 0; i < type_topic_counts_.size(); ++i) {
    std::int32_t value = base_types[i];
    for (std::size_t w = 0; w < workers; ++w) value += local_types[w][i] - base_types[i];
    type_topic_counts_[i] = value;
  }
  for (std::size_t k = 0; k < K; ++k) {
    std::int32_t value = base_totals[k];
    for (std::size_t w = 0; w < workers; ++w) value += local_totals[w][k] - base_totals[k];
    topic_totals_[k] = value;
  }
}

void LdaSampler::optimize_alpha(int rounds) {
  const std::size_t K = num_topics_;
  const std::size_t D = doc_offsets_.size() - 1;
  std::size_t max_length = 0;
  for (std::size_t d = 0; d < D; ++d) {
    max_length = std::max(max_length, doc_offsets_[d + 1] - doc_offsets_[d]);
  }
  if (max_length == 0) return;

  std::vector<std::size_t> length_hist(max_length + 1, 0);
  std::vector<std::vector<std::size_t>> topic_hist(K, std::vector<std::size_t>(max_length + 1, 0));
  for (std::size_t d = 0; d < D; ++d) {
    ++length_hist[doc_offsets_[d + 1] - doc_offsets_[d]];
    for (std::size_t k = 0; k < K; ++k) {
      const auto n = doc_topic_counts_[d * K + k];
      if (n > 0) ++topic_hist[k][static_cast<std::size_t>(n)];
    }
  }

  constexpr double kAlphaFloor = 1e-7;
  for (int round = 0; round < rounds; ++round) {
    // psi(x + n) - psi(x) = sum_{i<n} 1/(x+i), accumulated over the histograms.
    double denominator = 0.0;
    double digamma_diff = 0.0;
    for (std::size_t n = 1; n <= max_length; ++n) {
      digamma_diff += 1.0 / (alpha_sum_ + static_cast<double>(n - 1));
      denominator += static_cast<double>(length_hist[n]) * digamma_diff;
    }
    if (denominator <= 0.0) return;

    double new_sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      double numerator = 0.0;
      double diff = 0.0;
      for (std::size_t n = 1; n <= max_length; ++n) {
        diff += 1.0 / (alpha_[k] + static_cast<double>(n - 1));
        numerator += static_cast<double>(topic_hist[k][n]) * diff;
      }
      alpha_[k] = std::max(alpha_[k] * numerator / denominator, kAlphaFloor);
      new_sum += alpha_[k];
    }
    alpha_sum_ = new_sum;
  }
}

double LdaSampler::log_likelihood() const {
  const CountTables tables{num_topics_,
                           vocab_size_,
                           doc_offsets_.size() - 1,
                           doc_topic_counts_.data(),
                           type_topic_counts_.data(),
                           topic_totals_.data()};
  return joint_log_likelihood(tables, alpha_, beta_);
}

double LdaSampler::ll_per_token() const {
  return types_.empty() ? 0.0 : log_likelihood() / static_cast<double>(types_.size());
}

TopicModel LdaSampler::model() const {
  const CountTables tables{num_topics_,
                           vocab_size_,
                           doc_offsets_.size() - 1,
                           doc_topic_counts_.data(),
                           type_topic_counts_.data(),
                           topic_totals_.data()};
  return model_from_counts(tables, alpha_, beta_, types_.size());
}

GibbsState LdaSampler::state() const {
  GibbsState state;
  state.alpha = alpha_;
  state.beta = beta_;
  state.doc_sources = doc_ids_;
  state.type_names = type_names_;
  state.tokens.reserve(types_.size());
  for (std::size_t d = 0; d + 1 < doc_offsets_.size(); ++d) {
    for (std::size_t i = doc_offsets_[d]; i < doc_offsets_[d + 1]; ++i) {
      state.tokens.push_back({static_cast<std::uint32_t>(d),
                              static_cast<std::uint32_t>(i - doc_offsets_[d]), types_[i], topics_[i]});
    }
  }
  return state;
}

bool LdaSampler::counts_consistent() const {
  LdaSampler copy = *this;
  copy.rebuild_counts();
  return copy.doc_topic_counts_ == doc_topic_counts_ &&
         copy.type_topic_counts_ == type_topic_counts_ && copy.topic_totals_ == topic_totals_;
}

LdaResult fit_lda(const TokenizedCorpus& corpus, const LdaOptions& options) {
  if (options.num_topics < 2) throw InputError("number of topics must be at least 2");
  if (options.iterations < 1) throw InputError("iterations must be at least 1");
  if (corpus.num_docs() == 0) throw InputError("corpus is empty");
  const std::size_t tokens = corpus.num_tokens();
  if (options.num_topics > tokens) {
    throw InputError(
        fmt::format("number of topics ({}) exceeds token count ({})", options.num_topics, tokens));
  }
  if (!(options.alpha_sum > 0.0) || !(options.beta > 0.0)) {
    throw InputError("alpha_sum and beta must be positive");
  }

  LdaSampler sampler(corpus, options);
  LdaResult result;
  const int report = std::max(1, options.report_interval);
  for (int it = 1; it <= options.iterations; ++it) {
    sampler.sweep();
    if (options.optimize_interval > 0 && it > options.optimize_burn_in &&
        it % options.optimize_interval == 0) {
      sampler.optimize_alpha();
    }
    if (it % report == 0 || it == options.iterations) {
      result.trace.push_back({it, sampler.ll_per_token()});
    }
  }
  result.model = sampler.model();
  result.state = sampler.state();
  return result;
}

TopicModel derive_model(const GibbsState& state, std::size_t num_docs, std::size_t vocab_size) {
  const std::size_t K = state.num_topics();
  if (K < 2) throw InputError("Gibbs state has fewer than 2 topics");
  std::vector<std::int32_t> doc_topic(num_docs * K, 0);
  std::vector<std::int32_t> type_topic(vocab_size * K, 0);
  std::vector<std::int32_t> totals(K, 0);
  for (const auto& t : state.tokens) {
    if (t.doc >= num_docs || t.type >= vocab_size || t.topic >= K) {
      throw InputError(fmt::format("state token (doc {}, type {}, topic {}) out of range", t.doc,
                                   t.type, t.topic));
    }
    ++doc_topic[t.doc * K + t.topic];
    ++type_topic[t.type * K + t.topic];
    ++totals[t.topic];
  }
  const CountTables tables{K, vocab_size, num_docs, doc_topic.data(), type_topic.data(), totals.data()};
  return model_from_counts(tables, state.alpha, state.beta, state.tokens.size());
}

std::string_view to_string(DocumentAttribute attribute) {
  switch (attribute) {
    case DocumentAttribute::year: return "year";
    case DocumentAttribute::source: return "source";
    case DocumentAttribute::country: return "country";
    case DocumentAttribute::org: return "org";
    case DocumentAttribute::sponsor: return "sponsor";
  }
  return "year";
}

DocumentAttribute parse_attribute(std::string_view name) {
  for (auto a : {DocumentAttribute::year, DocumentAttribute::source, DocumentAttribute::country,
                 DocumentAttribute::org, DocumentAttribute::sponsor}) {
    if (name == to_string(a)) return a;
  }
  throw InputError(fmt::format("unknown document attribute '{}' (expected year, source, country, org, sponsor)", name));
}

double GroupedSums::total() const {
  const auto v = sums.values();
  return std::accumulate(v.begin(), v.end(), 0.0);
}

std::size_t GroupedSums::group_index(std::string_view group) const {
  const auto it = std::lower_bound(groups.begin(), groups.end(), group);
  if (it == groups.end() || *it != group) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - groups.begin());
}

namespace {

std::vector<std::string> attribute_values(const RawDocument& doc, DocumentAttribute attribute) {
  std::vector<std::string> values;
  switch (attribute) {
    case DocumentAttribute::year: return {std::to_string(doc.year)};
    case DocumentAttribute::source: return {std::string(to_string(doc.source))};
    case DocumentAttribute::country: values = doc.countries; break;
    case DocumentAttribute::org: values = doc.orgs; break;
    case DocumentAttribute::sponsor: values = doc.sponsors; break;
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.empty()) values.emplace_back("NA");
  return values;
}

}  // namespace

GroupedSums doc_topic_sums(const Matrix& doc_topic, std::span<const RawDocument> docs,
                           DocumentAttribute attribute) {
  if (docs.size() != doc_topic.rows()) {
    throw InputError(fmt::format("document metadata count {} does not match doc_topic rows {}",
                                 docs.size(), doc_topic.rows()));
  }
  std::vector<std::vector<std::string>> per_doc(docs.size());
  std::map<std::string, std::size_t> group_ids;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    per_doc[d] = attribute_values(docs[d], attribute);
    for (const auto& v : per_doc[d]) group_ids.emplace(v, 0);
  }
  GroupedSums out;
  out.attribute = attribute;
  for (auto& [name, id] : group_ids) {
    id = out.groups.size();
    out.groups.push_back(name);
  }
  const std::size_t K = doc_topic.cols();
  out.sums = Matrix(K, out.groups.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const double share = 1.0 / static_cast<double>(per_doc[d].size());
    const auto row = doc_topic.row(d);
    for (const auto& v : per_doc[d]) {
      const std::size_t g = group_ids.at(v);
      for (std::size_t k = 0; k < K; ++k) out.sums(k, g) += row[k] * share;
    }
  }
  return out;
}

}  // namespace hscan
