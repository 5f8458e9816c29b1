#include "hscan/model_io.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "hscan/error.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

namespace {

std::string topic_header(std::string_view first, std::size_t num_topics) {
  std::string out(first);
  for (std::size_t k = 0; k < num_topics; ++k) fmt::format_to(std::back_inserter(out), ",t{}", k);
  out += '\n';
  return out;
}

struct WideTable {
  std::vector<std::string> keys;
  Matrix values;
};

WideTable read_wide(const std::filesystem::path& path, std::size_t num_topics) {
  const std::string origin = path.string();
  const auto text = read_gzip_file(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw FormatError(origin, 1, "missing header row");
  if (parse_csv_record(lines[0]).size() != num_topics + 1) {
    throw FormatError(origin, 1, fmt::format("expected {} columns", num_topics + 1));
  }
  WideTable table;
  std::vector<double> values;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = parse_csv_record(lines[i]);
    if (fields.size() != num_topics + 1) {
      throw FormatError(origin, i + 1, fmt::format("expected {} fields, found {}", num_topics + 1, fields.size()));
    }
    table.keys.push_back(fields[0]);
    for (std::size_t k = 0; k < num_topics; ++k) {
      const auto v = parse_double(fields[k + 1]);
      if (!v) throw FormatError(origin, i + 1, fmt::format("invalid number '{}'", fields[k + 1]));
      values.push_back(*v);
    }
  }
  table.values = Matrix(table.keys.size(), num_topics);
  for (std::size_t r = 0; r < table.keys.size(); ++r) {
    for (std::size_t k = 0; k < num_topics; ++k) table.values(r, k) = values[r * num_topics + k];
  }
  return table;
}

}  // namespace

void export_model(const std::filesystem::path& dir, const TopicModel& model,
                  const std::vector<std::string>& doc_ids, const std::vector<std::string>& vocabulary) {
  const std::size_t K = model.num_topics;
  if (doc_ids.size() != model.num_docs() || vocabulary.size() != model.vocab_size()) {
    throw InputError("doc ids or vocabulary do not match the model dimensions");
  }
  std::filesystem::create_directories(dir);

  std::string terms = topic_header("term", K);
  for (std::size_t w = 0; w < vocabulary.size(); ++w) {
    terms += csv_escape(vocabulary[w]);
    for (std::size_t k = 0; k < K; ++k) {
      terms += ',';
      terms += format_double(model.term_topic(k, w));
    }
    terms += '\n';
  }
  write_gzip_file(dir / "term_topic.csv.gz", terms);

  std::string docs = topic_header("doc_id", K);
  for (std::size_t d = 0; d < doc_ids.size(); ++d) {
    docs += csv_escape(doc_ids[d]);
    for (const double v : model.doc_topic.row(d)) {
      docs += ',';
      docs += format_double(v);
    }
    docs += '\n';
  }
  write_gzip_file(dir / "doc_topic.csv.gz", docs);

  nlohmann::ordered_json meta;
  meta["num_topics"] = K;
  meta["num_docs"] = model.num_docs();
  meta["vocab_size"] = model.vocab_size();
  meta["alpha"] = model.alpha;
  meta["beta"] = model.beta;
  meta["ll_per_token"] = model.ll_per_token;
  write_file_atomic(dir / "model.json", meta.dump(2) + "\n");
}

ModelFiles import_model(const std::filesystem::path& dir) {
  const auto meta_path = dir / "model.json";
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(meta_path.string(), 0, e.what());
  }
  ModelFiles files;
  TopicModel& model = files.model;
  try {
    model.num_topics = meta.at("num_topics").get<std::size_t>();
    model.alpha = meta.at("alpha").get<std::vector<double>>();
    model.beta = meta.at("beta").get<double>();
    model.ll_per_token = meta.at("ll_per_token").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(meta_path.string(), 0, e.what());
  }
  auto terms = read_wide(dir / "term_topic.csv.gz", model.num_topics);
  auto docs = read_wide(dir / "doc_topic.csv.gz", model.num_topics);
  files.vocabulary = std::move(terms.keys);
  files.doc_ids = std::move(docs.keys);
  model.doc_topic = std::move(docs.values);
  model.term_topic = Matrix(model.num_topics, files.vocabulary.size());
  for (std::size_t w = 0; w < files.vocabulary.size(); ++w) {
    for (std::size_t k = 0; k < model.num_topics; ++k) model.term_topic(k, w) = terms.values(w, k);
  }
  return files;
}

}  // namespace hscan
