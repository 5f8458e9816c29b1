#include "hscan/snapshot.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "hscan/error.hpp"
#include "hscan/mallet_format.hpp"
#include "hscan/model_io.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

std::string SnapshotManifest::to_json() const {
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["year_first"] = window.first;
  j["year_last"] = window.last;
  j["num_docs"] = num_docs;
  j["num_topics"] = num_topics;
  j["vocab_size"] = vocab_size;
  j["error_scale"] = error_scale;
  j["coherence_source"] = coherence_source;
  j["layout_method"] = std::string(to_string(layout_method));
  j["top_m"] = top_m;
  j["artifacts"] = nlohmann::ordered_json::object();
  for (const auto& [name, digest] : artifacts) j["artifacts"][name] = digest;
  return j.dump(2) + "\n";
}

SnapshotManifest SnapshotManifest::from_json(const std::string& text, const std::string& origin) {
  SnapshotManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.run_id = j.at("run_id").get<std::string>();
    m.window.first = j.at("year_first").get<int>();
    m.window.last = j.at("year_last").get<int>();
    m.num_docs = j.at("num_docs").get<std::size_t>();
    m.num_topics = j.at("num_topics").get<std::size_t>();
    m.vocab_size = j.at("vocab_size").get<std::size_t>();
    m.error_scale = j.at("error_scale").get<double>();
    m.coherence_source = j.value("coherence_source", "diagnostics");
    m.layout_method = j.value("layout_method", "pca") == "imported" ? LayoutMethod::imported : LayoutMethod::pca;
    m.top_m = j.value("top_m", std::size_t{20});
    for (const auto& [name, digest] : j.at("artifacts").items()) m.artifacts[name] = digest.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(origin, 0, e.what());
  }
  return m;
}

std::string artifact_digest(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) return hex_digest(fnv1a64(read_file(path)));
  std::vector<std::filesystem::path> entries;
  for (const auto& e : std::filesystem::recursive_directory_iterator(path)) {
    if (e.is_regular_file()) entries.push_back(e.path());
  }
  std::sort(entries.begin(), entries.end());
  std::uint64_t h = fnv1a64("");
  for (const auto& p : entries) {
    h = fnv1a64(std::filesystem::relative(p, path).generic_string(), h);
    h = fnv1a64(read_file(p), h);
  }
  return hex_digest(h);
}

std::map<std::string, ActivityMatrix> build_activity(const Matrix& doc_topic, std::span<const RawDocument> docs) {
  std::map<std::string, ActivityMatrix> out;
  for (const auto attribute : kEntityAttributes) {
    out.emplace(std::string(to_string(attribute)), activity_from_sums(doc_topic_sums(doc_topic, docs, attribute)));
  }
  return out;
}

std::map<int, std::string> read_fields_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const std::string origin = path.string();
  const auto c_id = table.column("topic_id", origin);
  const auto c_field = table.column("field", origin);
  std::map<int, std::string> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto id = parse_int(table.rows[r][c_id]);
    if (!id) throw FormatError(origin, table.row_lines[r], "invalid topic_id");
    out[static_cast<int>(*id)] = table.rows[r][c_field];
  }
  return out;
}

ScanSnapshot ScanSnapshot::load(const std::filesystem::path& dir) {
  const auto manifest_path = dir / files::kManifest;
  if (!std::filesystem::exists(manifest_path)) {
    throw InputError(fmt::format("{} is not a snapshot directory (no {})", dir.string(), files::kManifest));
  }
  ScanSnapshot s;
  s.dir = dir;
  s.manifest = SnapshotManifest::from_json(read_file(manifest_path), manifest_path.string());
  for (const auto& [name, digest] : s.manifest.artifacts) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) throw InputError(fmt::format("snapshot artifact {} is missing", path.string()));
    if (artifact_digest(path) != digest) {
      throw ValidationError(fmt::format("snapshot artifact {} does not match run {}", path.string(), s.manifest.run_id));
    }
  }

  auto model_files = import_model(dir / files::kModelDir);
  s.model = std::move(model_files.model);
  s.doc_ids = std::move(model_files.doc_ids);
  s.vocabulary = std::move(model_files.vocabulary);

  auto loaded = load_corpus(dir / files::kDocuments, FieldSchema{}, s.manifest.window);
  if (!loaded.rejects.empty() || loaded.docs.size() != s.doc_ids.size()) {
    throw ValidationError(fmt::format("snapshot documents ({}) do not match model rows ({})", loaded.docs.size(),
                                      s.doc_ids.size()));
  }
  s.docs = std::move(loaded.docs);
  for (std::size_t d = 0; d < s.docs.size(); ++d) {
    if (s.docs[d].doc_id != s.doc_ids[d]) {
      throw ValidationError(fmt::format("document order differs at row {} ({} vs {})", d, s.docs[d].doc_id, s.doc_ids[d]));
    }
  }

  const std::size_t K = s.model.num_topics;
  s.sizes = s.model.topic_sizes();
  s.diagnostics.resize(K);
  for (std::size_t k = 0; k < K; ++k) s.diagnostics[k].topic_id = static_cast<int>(k);
  for (auto& d : parse_diagnostics_xml(dir / files::kDiagnostics)) {
    if (d.topic_id < 0 || static_cast<std::size_t>(d.topic_id) >= K) continue;
    s.diagnostics[static_cast<std::size_t>(d.topic_id)] = std::move(d);
  }

  s.yearly = read_yearly_counts(dir / files::kYearly, s.manifest.window);
  s.fits.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    s.fits[k].topic_id = static_cast<int>(k);
    s.fits[k].fittable = false;
    s.fits[k].reason = "no fit recorded";
  }
  for (auto& f : read_fits_csv(dir / files::kFits)) {
    if (f.topic_id >= 0 && static_cast<std::size_t>(f.topic_id) < K) s.fits[static_cast<std::size_t>(f.topic_id)] = f;
  }

  s.activity = build_activity(s.model.doc_topic, s.docs);

  std::vector<int> ids(K);
  for (std::size_t k = 0; k < K; ++k) ids[k] = static_cast<int>(k);
  s.layout = import_coordinates(dir / files::kLayout, ids);
  s.layout.method = s.manifest.layout_method;
  if (std::filesystem::exists(dir / files::kKnn)) s.layout.knn = read_knn_csv(dir / files::kKnn, ids);
  if (std::filesystem::exists(dir / files::kFields)) s.fields = read_fields_csv(dir / files::kFields);
  return s;
}

}  // namespace hscan
