#include <doctest.h>

#include <cstdlib>

#include <fmt/format.h>
#include <json.hpp>

#include "hscan/config_file.hpp"
#include "hscan/error.hpp"
#include "hscan/mallet_format.hpp"
#include "hscan/model_io.hpp"
#include "hscan/pipeline.hpp"
#include "hscan/snapshot.hpp"
#include "hscan/text_io.hpp"
#include "testing.hpp"

using namespace hscan;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const int rc = std::system(fmt::format("{} {} >/dev/null 2>&1", HSCAN_CLI_PATH, args).c_str());
  return WEXITSTATUS(rc);
}

PipelineConfig small_config(const fs::path& out) {
  auto config = ConfigMap::load(testing::small_run().bundle / "scan.conf");
  config.set("iterations", "60");
  config.set("out", out.string());
  return PipelineConfig::from_config(config);
}

}  // namespace

TEST_CASE("snapshot contents") {
  const auto& run = testing::small_run();
  for (const auto* name : {"corpus_stats.json", "model", "fits.csv", "lq_source.csv", "lq_country.csv", "layout.csv",
                           "knn.csv", "labels.jsonl", "manifest.json", "reports"}) {
    CHECK(fs::exists(run.run_dir / name));
  }
  CHECK(fs::file_size(run.run_dir / "labels.jsonl") == 0);
  const auto snap = ScanSnapshot::load(run.run_dir);
  CHECK(snap.run_id() == run.run_id);
  CHECK(snap.fits.size() == 8);
  CHECK(snap.layout.coords.size() == 8);
  const auto fits = read_fits_csv(run.run_dir / "fits.csv");
  std::vector<int> ids;
  for (const auto& f : fits) ids.push_back(f.topic_id);
  CHECK(ids == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("rerun is idempotent and keeps labels") {
  testing::TempDir dir("rerun");
  const auto cfg = small_config(dir / "runs");
  const auto a = run_pipeline(cfg);
  const auto fits_a = read_file(a.dir / "fits.csv");
  const auto manifest_a = read_file(a.dir / "manifest.json");
  write_file_atomic(a.dir / "labels.jsonl",
                    R"({"event":"supertopic_add","run_id":")" + a.run_id + R"(","name":"X"})" "\n");
  const auto b = run_pipeline(cfg);
  CHECK(a.dir == b.dir);
  CHECK(read_file(b.dir / "fits.csv") == fits_a);
  CHECK(read_file(b.dir / "manifest.json") == manifest_a);
  CHECK(read_file(b.dir / "labels.jsonl").find("supertopic_add") != std::string::npos);

  auto tampered = cfg;
  tampered.lda.seed = 12345;
  CHECK(compute_run_id(tampered) != a.run_id);
}

TEST_CASE("tampered artifacts fail snapshot verification") {
  testing::TempDir dir("tamper");
  fs::copy(testing::small_run().run_dir, dir / "snap", fs::copy_options::recursive);
  testing::write_text(dir / "snap" / "fits.csv", "topic_id\n");
  CHECK_THROWS(ScanSnapshot::load(dir / "snap"));
}

TEST_CASE("stage failure quarantines partial outputs") {
  testing::TempDir dir("fail");
  auto cfg = small_config(dir / "runs");
  testing::write_text(dir / "coords.csv", "topic_id,x,y\n0,1,1\n");
  cfg.layout_coords = dir / "coords.csv";
  try {
    run_pipeline(cfg);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "layout");
  }
  const auto id = compute_run_id(cfg);
  CHECK(fs::exists(dir / "runs" / id / "partial" / "fits.csv"));
  CHECK_FALSE(fs::exists(dir / "runs" / (id + ".staging")));
  CHECK_FALSE(fs::exists(dir / "runs" / id / "manifest.json"));
}

TEST_CASE("config validation") {
  testing::TempDir dir("cfgv");
  auto cfg = small_config(dir / "runs");
  cfg.window = {2018, 2014};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = small_config(dir / "runs");
  cfg.lda.num_topics = 1;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("imported state reproduces the in-process model") {
  testing::TempDir dir("import");
  const auto& run = testing::small_run();
  auto cfg = small_config(dir / "runs");
  cfg.mallet_state = run.run_dir / "state.gz";
  cfg.mallet_diagnostics = run.run_dir / "diagnostics.xml";
  const fs::path work = dir / "work";
  stage_ingest(cfg, work);
  stage_import_mallet(cfg, work);
  const auto imported = import_model(work / "model");
  const auto original = import_model(run.run_dir / "model");
  REQUIRE(imported.model.doc_topic.rows() == original.model.doc_topic.rows());
  for (std::size_t i = 0; i < imported.model.doc_topic.values().size(); ++i) {
    CHECK(std::abs(imported.model.doc_topic.values()[i] - original.model.doc_topic.values()[i]) <= 1e-9);
  }
  for (std::size_t i = 0; i < imported.model.term_topic.values().size(); ++i) {
    CHECK(std::abs(imported.model.term_topic.values()[i] - original.model.term_topic.values()[i]) <= 1e-9);
  }
  CHECK(imported.doc_ids == original.doc_ids);
  stage_metrics(cfg, work);
  CHECK(read_file(work / "yearly_counts.csv") == read_file(run.run_dir / "yearly_counts.csv"));
  CHECK(read_file(work / "fits.csv") == read_file(run.run_dir / "fits.csv"));
  const auto info = nlohmann::json::parse(read_file(work / "model_info.json"));
  CHECK(info["coherence_source"] == "diagnostics");

  cfg.mallet_diagnostics.clear();
  stage_import_mallet(cfg, work);
  CHECK(nlohmann::json::parse(read_file(work / "model_info.json"))["coherence_source"] == "recomputed");
  const auto recomputed = parse_diagnostics_xml(work / "diagnostics.xml");
  const auto shipped = parse_diagnostics_xml(run.run_dir / "diagnostics.xml");
  for (std::size_t k = 0; k < shipped.size(); ++k) {
    CHECK(recomputed[k].coherence == doctest::Approx(shipped[k].coherence).epsilon(1e-12));
  }
}

TEST_CASE("import errors: document count mismatch and corrupt XML") {
  testing::TempDir dir("importerr");
  auto cfg = small_config(dir / "runs");
  const fs::path work = dir / "work";
  stage_ingest(cfg, work);

  GibbsState s;
  s.alpha = {0.1, 0.1};
  s.beta = 0.01;
  s.type_names = {"x"};
  s.doc_sources = {"NA", "NA"};
  s.tokens = {{0, 0, 0, 0}, {1, 0, 0, 1}};
  write_mallet_state(dir / "small.gz", s);
  cfg.mallet_state = dir / "small.gz";
  try {
    stage_import_mallet(cfg, work);
    FAIL("expected mismatch");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(" 2 ") != std::string::npos);
    CHECK(msg.find("400") != std::string::npos);
  }

  cfg.mallet_state = testing::small_run().run_dir / "state.gz";
  cfg.mallet_diagnostics = fs::path(HSCAN_FIXTURE_DIR) / "diagnostics_corrupt.xml";
  CHECK_THROWS_AS(stage_import_mallet(cfg, work), FormatError);
}

TEST_CASE("cli exit codes") {
  testing::TempDir dir("cli");
  testing::write_text(dir / "scan.conf", "corpus=does_not_exist.jsonl\n");
  const auto missing = fmt::format("--config {} --out {} run", (dir / "scan.conf").string(), (dir / "runs").string());
  CHECK(run_cli(missing) == 2);
  const int rc = std::system(fmt::format("{} {} 2>&1 | grep -q does_not_exist.jsonl", HSCAN_CLI_PATH, missing).c_str());
  CHECK(rc == 0);
  CHECK(run_cli("--bogus-flag") == 2);
  CHECK(run_cli("") == 2);

  testing::write_text(dir / "corrupt.conf",
                      fmt::format("corpus={}\nmallet_state={}\nmallet_diagnostics={}\n",
                                  (testing::small_run().bundle / "corpus.jsonl").string(),
                                  (testing::small_run().run_dir / "state.gz").string(),
                                  (fs::path(HSCAN_FIXTURE_DIR) / "diagnostics_corrupt.xml").string()));
  const int corrupt = std::system(
      fmt::format("{} --config {} --out {} run 2>&1 | grep -q 'diagnostics_corrupt.xml:5'", HSCAN_CLI_PATH,
                  (dir / "corrupt.conf").string(), (dir / "runs").string())
          .c_str());
  CHECK(corrupt == 0);
}

TEST_CASE("reports") {
  const auto& run = testing::small_run();
  const auto t1 = read_csv(run.run_dir / "reports" / "table1.csv");
  CHECK(t1.rows.size() <= 200);
  for (const auto& row : t1.rows) {
    CHECK(row[t1.column("topic_name", "t1")].empty());
    CHECK(row[t1.column("super_topic_name", "t1")].empty());
  }
  const auto fig3 = read_csv(run.run_dir / "reports" / "fig3_calibration.csv");
  std::size_t converged = 0;
  for (const auto& f : read_fits_csv(run.run_dir / "fits.csv")) converged += f.converged;
  CHECK(fig3.rows.size() == converged);
}
