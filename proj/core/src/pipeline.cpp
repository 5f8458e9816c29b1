#include "hscan/pipeline.hpp"

#include <chrono>
#include <cstdio>

#include <fmt/format.h>
#include <json.hpp>

#include "hscan/coherence.hpp"
#include "hscan/error.hpp"
#include "hscan/label_store.hpp"
#include "hscan/mallet_format.hpp"
#include "hscan/map_layout.hpp"
#include "hscan/model_io.hpp"
#include "hscan/snapshot.hpp"
#include "hscan/specialization.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

namespace fs = std::filesystem;

PipelineConfig PipelineConfig::from_config(const ConfigMap& config) {
  PipelineConfig c;
  const auto path = [&](const char* key, fs::path& target) {
    if (config.contains(key) && !config.get_or(key, "").empty()) target = config.resolve_path(key);
  };
  path("corpus", c.corpus);
  path("stopwords", c.stopwords);
  path("multiword_stops", c.multiword_stops);
  path("lemmas", c.lemmas);
  path("replacements", c.replacements);
  path("out", c.out);
  path("mallet_state", c.mallet_state);
  path("mallet_diagnostics", c.mallet_diagnostics);
  path("layout_coords", c.layout_coords);
  path("fields", c.fields);
  c.schema = FieldSchema::from_config(config);
  c.window.first = static_cast<int>(config.get_int("year_first", c.window.first));
  c.window.last = static_cast<int>(config.get_int("year_last", c.window.last));
  c.max_doc_fraction = config.get_double("max_doc_fraction", c.max_doc_fraction);
  c.vocab_size = static_cast<std::size_t>(config.get_int("vocab_size", static_cast<long long>(c.vocab_size)));
  c.lda.num_topics = static_cast<std::size_t>(config.get_int("num_topics", static_cast<long long>(c.lda.num_topics)));
  c.lda.iterations = static_cast<int>(config.get_int("iterations", c.lda.iterations));
  c.lda.optimize_interval = static_cast<int>(config.get_int("optimize_interval", c.lda.optimize_interval));
  c.lda.optimize_burn_in = static_cast<int>(config.get_int("optimize_burn_in", c.lda.optimize_burn_in));
  c.lda.report_interval = static_cast<int>(config.get_int("report_interval", c.lda.report_interval));
  c.lda.alpha_sum = config.get_double("alpha_sum", c.lda.alpha_sum);
  c.lda.beta = config.get_double("beta", c.lda.beta);
  c.lda.seed = static_cast<std::uint64_t>(config.get_int("seed", static_cast<long long>(c.lda.seed)));
  c.threads = static_cast<unsigned>(std::max<long long>(1, config.get_int("threads", c.threads)));
  c.lda.threads = c.threads;
  c.calibration.threads = c.threads;
  c.calibrate = config.get_bool("calibrate", c.calibrate);
  c.scale = config.get_double("scale", c.scale);
  c.calibration.tol = config.get_double("calibration_tol", c.calibration.tol);
  c.calibration.max_iter = static_cast<int>(config.get_int("calibration_max_iter", c.calibration.max_iter));
  c.calibration.min_topics = static_cast<std::size_t>(
      config.get_int("calibration_min_topics", static_cast<long long>(c.calibration.min_topics)));
  c.report.rank.top_n = static_cast<std::size_t>(config.get_int("top_n", static_cast<long long>(c.report.rank.top_n)));
  c.report.rank.coherence_floor = config.get_double("coherence_floor", c.report.rank.coherence_floor);
  c.report.screen.chi_lo = config.get_double("chi_lo", c.report.screen.chi_lo);
  c.report.screen.chi_hi = config.get_double("chi_hi", c.report.screen.chi_hi);
  c.report.screen.max_pct_err = config.get_double("max_pct_err", c.report.screen.max_pct_err);
  c.knn_k = static_cast<std::size_t>(config.get_int("knn_k", static_cast<long long>(c.knn_k)));
  c.top_m = static_cast<std::size_t>(config.get_int("top_m", static_cast<long long>(c.top_m)));
  return c;
}

void PipelineConfig::validate() const {
  if (window.last < window.first) throw InputError(fmt::format("empty year window {}-{}", window.first, window.last));
  if (lda.num_topics < 2) throw InputError("num_topics must be at least 2");
  if (lda.iterations < 1) throw InputError("iterations must be at least 1");
  if (!(max_doc_fraction > 0.0 && max_doc_fraction <= 1.0)) throw InputError("max_doc_fraction must be in (0, 1]");
  if (vocab_size == 0) throw InputError("vocab_size must be positive");
  if (!(scale > 0.0)) throw InputError("scale must be positive");
  if (!(calibration.tol > 0.0) || calibration.max_iter < 1) throw InputError("calibration_tol and calibration_max_iter must be positive");
  if (knn_k == 0 || top_m < 2) throw InputError("knn_k must be positive and top_m at least 2");
  if (!(report.screen.chi_lo < report.screen.chi_hi)) throw InputError("chi_lo must be below chi_hi");
}

std::string PipelineConfig::canonical() const {
  std::string out;
  const auto add = [&](const char* key, const std::string& value) { out += fmt::format("{}={}\n", key, value); };
  add("schema", fmt::format("{},{},{},{},{},{},{},{}", schema.doc_id, schema.title, schema.abstract_text, schema.year,
                            schema.source, schema.countries, schema.orgs, schema.sponsors));
  add("year_first", std::to_string(window.first));
  add("year_last", std::to_string(window.last));
  add("max_doc_fraction", format_double(max_doc_fraction));
  add("vocab_size", std::to_string(vocab_size));
  add("num_topics", std::to_string(lda.num_topics));
  add("iterations", std::to_string(lda.iterations));
  add("optimize_interval", std::to_string(lda.optimize_interval));
  add("optimize_burn_in", std::to_string(lda.optimize_burn_in));
  add("report_interval", std::to_string(lda.report_interval));
  add("alpha_sum", format_double(lda.alpha_sum));
  add("beta", format_double(lda.beta));
  add("seed", std::to_string(lda.seed));
  add("threads", std::to_string(threads));
  add("calibrate", calibrate ? "1" : "0");
  add("scale", format_double(scale));
  add("calibration_tol", format_double(calibration.tol));
  add("calibration_max_iter", std::to_string(calibration.max_iter));
  add("calibration_min_topics", std::to_string(calibration.min_topics));
  add("top_n", std::to_string(report.rank.top_n));
  add("coherence_floor", format_double(report.rank.coherence_floor));
  add("chi_lo", format_double(report.screen.chi_lo));
  add("chi_hi", format_double(report.screen.chi_hi));
  add("max_pct_err", format_double(report.screen.max_pct_err));
  add("knn_k", std::to_string(knn_k));
  add("top_m", std::to_string(top_m));
  add("mallet_import", mallet_state.empty() ? "0" : "1");
  add("layout_import", layout_coords.empty() ? "0" : "1");
  return out;
}

std::string compute_run_id(const PipelineConfig& config) {
  std::uint64_t h = fnv1a64(config.canonical());
  for (const auto* p : {&config.corpus, &config.stopwords, &config.multiword_stops, &config.lemmas,
                        &config.replacements, &config.mallet_state, &config.mallet_diagnostics,
                        &config.layout_coords, &config.fields}) {
    h = fnv1a64(p->empty() ? std::string("-") : read_file(*p), h);
  }
  return hex_digest(h);
}

namespace {

void log_stage(const char* stage, std::chrono::steady_clock::time_point start) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  fmt::print(stderr, "[{}] done in {} ms\n", stage, ms.count());
}

struct ModelData {
  ModelFiles files;
  std::vector<RawDocument> docs;
};

ModelData load_model_data(const PipelineConfig& config, const fs::path& work) {
  ModelData data;
  data.files = import_model(work / files::kModelDir);
  data.docs = load_corpus(work / files::kDocuments, FieldSchema{}, config.window).docs;
  if (data.docs.size() != data.files.doc_ids.size()) {
    throw InputError(fmt::format("documents ({}) and model rows ({}) differ", data.docs.size(), data.files.doc_ids.size()));
  }
  return data;
}

void write_model_info(const fs::path& work, const std::string& coherence_source) {
  nlohmann::ordered_json j;
  j["coherence_source"] = coherence_source;
  write_file_atomic(work / files::kModelInfo, j.dump(2) + "\n");
}

VocabPrepConfig vocab_config(const PipelineConfig& config) {
  auto prep = VocabPrepConfig::load(config.stopwords, config.multiword_stops, config.lemmas, config.replacements);
  prep.max_doc_fraction = config.max_doc_fraction;
  prep.vocab_size = config.vocab_size;
  prep.validate();
  return prep;
}

}  // namespace

void stage_ingest(const PipelineConfig& config, const fs::path& work) {
  const auto start = std::chrono::steady_clock::now();
  if (config.corpus.empty()) throw InputError("no corpus path configured");
  if (!fs::exists(config.corpus)) throw InputError(fmt::format("corpus not found: {}", config.corpus.string()));
  fs::create_directories(work);
  const auto prep = vocab_config(config);
  auto loaded = load_corpus(config.corpus, config.schema, config.window);
  if (loaded.docs.empty()) throw InputError(fmt::format("{} holds no usable documents", config.corpus.string()));
  const auto normalized = normalize_documents(loaded.docs, prep, config.threads);
  const auto corpus = prune_vocabulary(normalized, prep);
  write_documents(work / files::kDocuments, loaded.docs);
  write_rejects(work / files::kRejects, loaded.rejects);
  write_tokenized_corpus(corpus, work / files::kCorpus, work / files::kVocab);
  nlohmann::ordered_json stats;
  stats["num_docs"] = corpus.num_docs();
  stats["num_rejects"] = loaded.rejects.size();
  stats["num_tokens"] = corpus.num_tokens();
  stats["vocab_size"] = corpus.vocab_size();
  stats["lower_cutoff"] = corpus.lower_cutoff;
  stats["year_first"] = config.window.first;
  stats["year_last"] = config.window.last;
  write_file_atomic(work / files::kCorpusStats, stats.dump(2) + "\n");
  fmt::print(stderr, "[ingest] {} documents, {} rejects, {} types (lower cutoff {})\n", corpus.num_docs(),
             loaded.rejects.size(), corpus.vocab_size(), corpus.lower_cutoff);
  log_stage("ingest", start);
}

void stage_model(const PipelineConfig& config, const fs::path& work) {
  const auto start = std::chrono::steady_clock::now();
  const auto corpus = read_tokenized_corpus(work / files::kCorpus, work / files::kVocab);
  auto result = fit_lda(corpus, config.lda);
  std::vector<std::string> doc_ids;
  for (const auto& d : corpus.docs) doc_ids.push_back(d.doc_id);
  export_model(work / files::kModelDir, result.model, doc_ids, corpus.vocabulary);
  write_mallet_state(work / files::kState, result.state);
  write_diagnostics_xml(work / files::kDiagnostics, compute_diagnostics(result.model, corpus, config.top_m));
  std::string trace = "iteration,ll_per_token\n";
  for (const auto& r : result.trace) trace += fmt::format("{},{}\n", r.iteration, format_double(r.ll_per_token));
  write_file_atomic(work / files::kTrace, trace);
  write_model_info(work, "diagnostics");
  fmt::print(stderr, "[model] K={} iterations={} ll/token={:.4f}\n", config.lda.num_topics, config.lda.iterations,
             result.model.ll_per_token);
  log_stage("model", start);
}

void stage_import_mallet(const PipelineConfig& config, const fs::path& work) {
  const auto start = std::chrono::steady_clock::now();
  if (config.mallet_state.empty()) throw InputError("no mallet_state path configured");
  auto parsed = parse_mallet_state(config.mallet_state);
  const auto docs = load_corpus(work / files::kDocuments, FieldSchema{}, config.window).docs;
  if (parsed.corpus.num_docs() != docs.size()) {
    throw InputError(fmt::format("state file has {} documents but the corpus metadata has {}",
                                 parsed.corpus.num_docs(), docs.size()));
  }
  for (std::size_t d = 0; d < docs.size(); ++d) parsed.corpus.docs[d].doc_id = docs[d].doc_id;
  const auto model = derive_model(parsed.state, docs.size(), parsed.state.type_names.size());
  std::vector<std::string> doc_ids;
  for (const auto& d : docs) doc_ids.push_back(d.doc_id);
  export_model(work / files::kModelDir, model, doc_ids, parsed.corpus.vocabulary);
  write_tokenized_corpus(parsed.corpus, work / files::kCorpus, work / files::kVocab);
  fs::copy_file(config.mallet_state, work / files::kState, fs::copy_options::overwrite_existing);
  std::string source = "diagnostics";
  if (!config.mallet_diagnostics.empty()) {
    write_diagnostics_xml(work / files::kDiagnostics, parse_diagnostics_xml(config.mallet_diagnostics));
  } else {
    write_diagnostics_xml(work / files::kDiagnostics, compute_diagnostics(model, parsed.corpus, config.top_m));
    source = "recomputed";
  }
  write_model_info(work, source);
  fmt::print(stderr, "[import-mallet] K={} documents={} tokens={} coherence {}\n", model.num_topics, docs.size(),
             parsed.state.tokens.size(), source);
  log_stage("import-mallet", start);
}

void stage_metrics(const PipelineConfig& config, const fs::path& work) {
  const auto start = std::chrono::steady_clock::now();
  const auto data = load_model_data(config, work);
  const auto yearly = yearly_counts_from_sums(
      doc_topic_sums(data.files.model.doc_topic, data.docs, DocumentAttribute::year), config.window);
  write_yearly_counts(work / files::kYearly, yearly);

  double scale = config.scale;
  nlohmann::ordered_json cal;
  if (config.calibrate) {
    const auto result = calibrate_error_scale(yearly, config.calibration);
    if (!result.skipped && !result.aborted) scale = result.scale;
    cal["converged"] = result.converged;
    cal["skipped"] = result.skipped;
    cal["aborted"] = result.aborted;
    cal["iterations"] = result.iterations;
    cal["mode_chi2"] = std::isfinite(result.mode_chi2) ? nlohmann::ordered_json(result.mode_chi2) : nullptr;
    cal["diagnostic"] = result.diagnostic;
    if (!result.diagnostic.empty()) fmt::print(stderr, "[metrics] {}\n", result.diagnostic);
  } else {
    cal["skipped"] = true;
    cal["diagnostic"] = "calibration disabled";
  }
  cal["scale"] = scale;
  write_file_atomic(work / files::kCalibration, cal.dump(2) + "\n");

  const auto fits = fit_all(yearly, scale, config.threads);
  write_fits_csv(work / files::kFits, fits);
  std::string screen = "topic_id,chi2_red,cagr,err_cagr,pct_err,bucket\n";
  for (const auto& f : fits) {
    screen += fmt::format("{},{},{},{},{},{}\n", f.topic_id, format_double(f.chi2_red), format_double(f.cagr),
                          format_double(f.err_cagr), format_double(pct_error(f)),
                          to_string(classify_fit(f, config.report.screen)));
  }
  write_file_atomic(work / files::kScreen, screen);
  fmt::print(stderr, "[metrics] {} topics fitted, error scale {}\n", fits.size(), format_double(scale));
  log_stage("metrics", start);
}

void stage_lq(const PipelineConfig& config, const fs::path& work) {
  const auto start = std::chrono::steady_clock::now();
  const auto data = load_model_data(config, work);
  const auto activity = build_activity(data.files.model.doc_topic, data.docs);
  std::string out = "entity_type,entity_id,category_id,count\n";
  for (const auto& [type, m] : activity) {
    for (std::size_t j = 0; j < m.entities.size(); ++j) {
      for (std::size_t i = 0; i < m.categories.size(); ++i) {
        out += fmt::format("{},{},{},{}\n", csv_escape(type), csv_escape(m.entities[j]), csv_escape(m.categories[i]),
                           format_double(m.n(i, j)));
      }
    }
  }
  write_file_atomic(work / files::kActivity, out);
  ActivityMatrix source_activity;
  const auto source_lq = lq_by_source(doc_topic_sums(data.files.model.doc_topic, data.docs, DocumentAttribute::source),
                                      &source_activity);
  write_lq_csv(work / files::kLqSource, source_activity, source_lq);
  const auto& country = activity.at("country");
  write_lq_csv(work / files::kLqCountry, country, compute_lq(country));
  log_stage("lq", start);
}

void stage_layout(const PipelineConfig& config, const fs::path& work) {
  const auto start = std::chrono::steady_clock::now();
  const auto model = import_model(work / files::kModelDir).model;
  const std::size_t K = model.num_topics;
  TopicMapLayout layout;
  if (!config.layout_coords.empty()) {
    std::vector<int> ids(K);
    for (std::size_t k = 0; k < K; ++k) ids[k] = static_cast<int>(k);
    layout = import_coordinates(config.layout_coords, ids);
  } else {
    layout = pca_layout(model.term_topic);
  }
  for (const auto& w : layout.warnings) fmt::print(stderr, "[layout] warning: {}\n", w);
  const std::size_t k = std::min(config.knn_k, K - 1);
  layout.knn = knn_graph(model.term_topic, k, config.threads, &layout.zero_rows);
  if (!layout.zero_rows.empty()) {
    fmt::print(stderr, "[layout] warning: {} topic(s) with all-zero term rows\n", layout.zero_rows.size());
  }
  write_coordinates_csv(work / files::kLayout, layout);
  write_knn_csv(work / files::kKnn, layout);
  nlohmann::ordered_json info;
  info["method"] = std::string(to_string(layout.method));
  info["knn_k"] = k;
  write_file_atomic(work / "layout_info.json", info.dump(2) + "\n");
  log_stage("layout", start);
}

void stage_snapshot(const PipelineConfig& config, const fs::path& work, const std::string& run_id) {
  const auto start = std::chrono::steady_clock::now();
  if (!config.fields.empty()) {
    fs::copy_file(config.fields, work / files::kFields, fs::copy_options::overwrite_existing);
  }
  if (!fs::exists(work / files::kLabels)) write_file_atomic(work / files::kLabels, "");

  SnapshotManifest m;
  m.run_id = run_id;
  m.window = config.window;
  const auto stats = nlohmann::json::parse(read_file(work / files::kCorpusStats));
  const auto model = import_model(work / files::kModelDir);
  m.num_docs = model.doc_ids.size();
  m.num_topics = model.model.num_topics;
  m.vocab_size = model.vocabulary.size();
  m.error_scale = nlohmann::json::parse(read_file(work / files::kCalibration)).at("scale").get<double>();
  m.coherence_source = nlohmann::json::parse(read_file(work / files::kModelInfo)).at("coherence_source").get<std::string>();
  m.layout_method = nlohmann::json::parse(read_file(work / "layout_info.json")).at("method") == "imported"
                        ? LayoutMethod::imported
                        : LayoutMethod::pca;
  m.top_m = config.top_m;
  (void)stats;
  for (const auto& entry : fs::directory_iterator(work)) {
    const auto name = entry.path().filename().string();
    if (name == files::kLabels || name == files::kManifest || name == files::kReports || name == "partial") continue;
    m.artifacts[name] = artifact_digest(entry.path());
  }
  write_file_atomic(work / files::kManifest, m.to_json());
  log_stage("snapshot", start);
}

void stage_report(const PipelineConfig& config, const fs::path& work) {
  const auto start = std::chrono::steady_clock::now();
  const auto snapshot = ScanSnapshot::load(work);
  const LabelStore labels(work / files::kLabels, snapshot.run_id());
  write_reports(snapshot, *labels.view(), work / files::kReports, config.report);
  log_stage("report", start);
}

RunOutcome run_pipeline(const PipelineConfig& config) {
  config.validate();
  if (config.corpus.empty()) throw InputError("no corpus path configured");
  for (const auto* p : {&config.corpus, &config.stopwords, &config.multiword_stops, &config.lemmas,
                        &config.replacements, &config.mallet_state, &config.mallet_diagnostics,
                        &config.layout_coords, &config.fields}) {
    if (!p->empty() && !fs::exists(*p)) throw InputError(fmt::format("input not found: {}", p->string()));
  }
  RunOutcome outcome;
  outcome.run_id = compute_run_id(config);
  outcome.dir = config.out / outcome.run_id;
  const fs::path staging = config.out / (outcome.run_id + ".staging");
  fs::remove_all(staging);
  fs::create_directories(staging);

  std::string stage = "ingest";
  try {
    stage_ingest(config, staging);
    if (config.mallet_state.empty()) {
      stage = "model";
      stage_model(config, staging);
    } else {
      stage = "import-mallet";
      stage_import_mallet(config, staging);
    }
    stage = "metrics";
    stage_metrics(config, staging);
    stage = "lq";
    stage_lq(config, staging);
    stage = "layout";
    stage_layout(config, staging);
    stage = "snapshot";
    stage_snapshot(config, staging, outcome.run_id);
    stage = "report";
    stage_report(config, staging);
  } catch (const std::exception& e) {
    const bool input = dynamic_cast<const InputError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
                       dynamic_cast<const ValidationError*>(&e);
    std::error_code ec;
    fs::create_directories(outcome.dir, ec);
    fs::remove_all(outcome.dir / "partial", ec);
    fs::rename(staging, outcome.dir / "partial", ec);
    throw StageError(stage, e.what(), input);
  }

  if (fs::exists(outcome.dir / files::kLabels)) {
    fs::copy_file(outcome.dir / files::kLabels, staging / files::kLabels, fs::copy_options::overwrite_existing);
  }
  fs::remove_all(outcome.dir);
  fs::rename(staging, outcome.dir);
  return outcome;
}

}  // namespace hscan
