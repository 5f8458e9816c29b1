#pragma once

#include <filesystem>
#include <string>

#include "hscan/config_file.hpp"
#include "hscan/corpus.hpp"
#include "hscan/error.hpp"
#include "hscan/growth.hpp"
#include "hscan/report.hpp"
#include "hscan/topic_model.hpp"

namespace hscan {

struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path stopwords;
  std::filesystem::path multiword_stops;
  std::filesystem::path lemmas;
  std::filesystem::path replacements;
  std::filesystem::path out = "runs";
  std::filesystem::path mallet_state;        // non-empty: import instead of sampling
  std::filesystem::path mallet_diagnostics;  // optional with mallet_state
  std::filesystem::path layout_coords;       // optional imported topic_id,x,y
  std::filesystem::path fields;              // optional topic_id,field
  FieldSchema schema;
  YearWindow window;
  double max_doc_fraction = 0.05;
  std::size_t vocab_size = 200000;
  LdaOptions lda;
  bool calibrate = true;
  double scale = 1.0;
  CalibrationOptions calibration;
  ReportOptions report;
  std::size_t knn_k = 15;
  std::size_t top_m = 20;
  unsigned threads = 1;

  /// Keys: corpus, stopwords, multiword_stops, lemmas, replacements, out,
  /// mallet_state, mallet_diagnostics, layout_coords, fields, year_first,
  /// year_last, max_doc_fraction, vocab_size, num_topics, iterations,
  /// optimize_interval, optimize_burn_in, report_interval, alpha_sum, beta,
  /// seed, threads, calibrate, scale, calibration_tol, calibration_max_iter,
  /// calibration_min_topics, top_n, coherence_floor, chi_lo, chi_hi,
  /// max_pct_err, knn_k, top_m, schema.*. Relative paths resolve against the
  /// config file's directory.
  static PipelineConfig from_config(const ConfigMap& config);

  /// Throws InputError for an empty year window, K < 2 or bad numbers.
  void validate() const;
  /// Every setting that influences outputs, one `key=value` per line.
  std::string canonical() const;
};

/// A stage failed; `input` marks failures caused by unusable inputs.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message, bool input)
      : Error(stage + ": " + message), stage_(std::move(stage)), input_(input) {}
  const std::string& stage() const noexcept { return stage_; }
  bool input() const noexcept { return input_; }

 private:
  std::string stage_;
  bool input_;
};

/// Digest of the corpus bytes, vocabulary-preparation files, imported files
/// and the canonical config.
std::string compute_run_id(const PipelineConfig& config);

// Stages read earlier outputs from and write into a work directory.
void stage_ingest(const PipelineConfig& config, const std::filesystem::path& work);
void stage_model(const PipelineConfig& config, const std::filesystem::path& work);
/// Needs documents.jsonl from stage_ingest; the state's document count must
/// equal it.
void stage_import_mallet(const PipelineConfig& config, const std::filesystem::path& work);
void stage_metrics(const PipelineConfig& config, const std::filesystem::path& work);
void stage_lq(const PipelineConfig& config, const std::filesystem::path& work);
void stage_layout(const PipelineConfig& config, const std::filesystem::path& work);
void stage_snapshot(const PipelineConfig& config, const std::filesystem::path& work, const std::string& run_id);
void stage_report(const PipelineConfig& config, const std::filesystem::path& work);

struct RunOutcome {
  std::string run_id;
  std::filesystem::path dir;
};

/// Runs every stage in `<out>/<run_id>.staging` and renames it to
/// `<out>/<run_id>` on success, keeping an existing label journal. On failure
/// the staging directory moves to `<out>/<run_id>/partial` and StageError is
/// thrown.
RunOutcome run_pipeline(const PipelineConfig& config);

}  // namespace hscan
