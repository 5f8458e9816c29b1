#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hscan/coherence.hpp"
#include "hscan/corpus.hpp"
#include "hscan/growth.hpp"
#include "hscan/map_layout.hpp"
#include "hscan/specialization.hpp"
#include "hscan/topic_model.hpp"

namespace hscan {

/// File names inside a run directory.
namespace files {
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kDocuments = "documents.jsonl";
inline constexpr const char* kRejects = "rejects.jsonl";
inline constexpr const char* kCorpus = "corpus.txt";
inline constexpr const char* kVocab = "vocab.tsv";
inline constexpr const char* kCorpusStats = "corpus_stats.json";
inline constexpr const char* kModelDir = "model";
inline constexpr const char* kState = "state.gz";
inline constexpr const char* kDiagnostics = "diagnostics.xml";
inline constexpr const char* kTrace = "ll_trace.csv";
inline constexpr const char* kModelInfo = "model_info.json";
inline constexpr const char* kYearly = "yearly_counts.csv";
inline constexpr const char* kCalibration = "calibration.json";
inline constexpr const char* kFits = "fits.csv";
inline constexpr const char* kScreen = "screen.csv";
inline constexpr const char* kActivity = "activity.csv";
inline constexpr const char* kLqSource = "lq_source.csv";
inline constexpr const char* kLqCountry = "lq_country.csv";
inline constexpr const char* kLayout = "layout.csv";
inline constexpr const char* kKnn = "knn.csv";
inline constexpr const char* kFields = "fields.csv";
inline constexpr const char* kLabels = "labels.jsonl";
inline constexpr const char* kReports = "reports";
}  // namespace files

struct SnapshotManifest {
  std::string run_id;
  YearWindow window;
  std::size_t num_docs = 0;
  std::size_t num_topics = 0;
  std::size_t vocab_size = 0;
  double error_scale = 1.0;
  std::string coherence_source = "diagnostics";  // or "recomputed"
  LayoutMethod layout_method = LayoutMethod::pca;
  std::size_t top_m = 20;
  std::map<std::string, std::string> artifacts;  // relative path -> FNV-1a digest

  std::string to_json() const;
  static SnapshotManifest from_json(const std::string& text, const std::string& origin);
};

/// Digest of a file's bytes (directories: of every file below, in path order).
std::string artifact_digest(const std::filesystem::path& path);

/// Read-only view of a completed run directory.
struct ScanSnapshot {
  std::filesystem::path dir;
  SnapshotManifest manifest;
  TopicModel model;
  std::vector<std::string> doc_ids;
  std::vector<std::string> vocabulary;
  std::vector<RawDocument> docs;  // parallel to doc_ids
  std::vector<TopicDiagnostics> diagnostics;  // indexed by topic id
  std::vector<double> sizes;
  YearlyCounts yearly;
  std::vector<FitResult> fits;  // indexed by topic id
  std::map<std::string, ActivityMatrix> activity;  // by entity type
  TopicMapLayout layout;
  std::map<int, std::string> fields;

  const std::string& run_id() const noexcept { return manifest.run_id; }
  std::size_t num_topics() const noexcept { return model.num_topics; }

  /// Verifies every artifact digest in the manifest before loading.
  static ScanSnapshot load(const std::filesystem::path& dir);
};

/// Entity types served by the LQ endpoints.
inline constexpr DocumentAttribute kEntityAttributes[] = {DocumentAttribute::country, DocumentAttribute::org,
                                                          DocumentAttribute::sponsor, DocumentAttribute::source};

/// Activity matrices (topics x entities) for country, org, sponsor, source.
std::map<std::string, ActivityMatrix> build_activity(const Matrix& doc_topic, std::span<const RawDocument> docs);

/// CSV `topic_id,field`.
std::map<int, std::string> read_fields_csv(const std::filesystem::path& path);

}  // namespace hscan
