#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hscan/config_file.hpp"
#include "hscan/error.hpp"
#include "hscan/pipeline.hpp"
#include "hscan/scan_service.hpp"
#include "hscan/snapshot.hpp"
#include "hscan/synth.hpp"
#include "hscan/text_io.hpp"

namespace fs = std::filesystem;
using namespace hscan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitStage = 3;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
  std::vector<std::string> overrides;
};

ConfigMap load_config(const GlobalFlags& g, bool required) {
  fs::path path = g.config;
  if (path.empty()) {
    for (const fs::path candidate : {"scan.conf", "synth/scan.conf"}) {
      if (fs::exists(candidate)) {
        path = candidate;
        break;
      }
    }
  }
  ConfigMap config;
  if (!path.empty()) {
    if (!fs::exists(path)) throw InputError(fmt::format("config file not found: {}", path.string()));
    config = ConfigMap::load(path);
  } else if (required) {
    throw InputError("no --config given and no scan.conf found");
  }
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError(fmt::format("--set expects key=value, got '{}'", kv));
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

PipelineConfig pipeline_config(const GlobalFlags& g) {
  auto cfg = PipelineConfig::from_config(load_config(g, true));
  if (g.seed) cfg.lda.seed = *g.seed;
  if (g.threads) {
    cfg.threads = std::max(1u, *g.threads);
    cfg.lda.threads = cfg.threads;
    cfg.calibration.threads = cfg.threads;
  }
  if (!g.out.empty()) cfg.out = g.out;
  cfg.validate();
  return cfg;
}

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const StageError& e) {
    fmt::print(stderr, "error: stage {}\n", e.what());
    return e.input() ? kExitInput : kExitStage;
  } catch (const FormatError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const InputError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const NotFoundError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitStage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Horizon-scanning pipeline: topic model, growth metrics, specialization, map layout"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "key=value config file (default: ./scan.conf or ./synth/scan.conf)");
  app.add_option("--seed", g.seed, "sampler seed (overrides config)");
  app.add_option("--threads", g.threads, "worker thread cap (overrides config)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--set", g.overrides, "config override key=value, repeatable");

  std::string work;
  const auto add_stage = [&](const char* name, const char* help,
                             std::function<void(const PipelineConfig&, const fs::path&)> stage) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--dir", work, "work directory holding earlier stage outputs")->required();
    cmd->callback([&, stage] {
      std::exit(run_guarded([&] {
        const auto cfg = pipeline_config(g);
        fs::create_directories(work);
        stage(cfg, work);
      }));
    });
  };
  add_stage("ingest", "load, normalize and prune the corpus", stage_ingest);
  add_stage("model", "fit the topic model", stage_model);
  add_stage("import-mallet", "derive the model from a MALLET state file", stage_import_mallet);
  add_stage("metrics", "yearly counts, calibration, exponential fits, screen", stage_metrics);
  add_stage("lq", "activity matrices and location quotients", stage_lq);
  add_stage("layout", "2-D topic map and kNN graph", stage_layout);
  add_stage("snapshot", "write the manifest and empty label journal",
            [](const PipelineConfig& cfg, const fs::path& dir) { stage_snapshot(cfg, dir, compute_run_id(cfg)); });
  add_stage("report", "table and figure CSVs", stage_report);

  auto* run = app.add_subcommand("run", "all stages into <out>/<run_id>");
  run->callback([&] {
    std::exit(run_guarded([&] {
      const auto outcome = run_pipeline(pipeline_config(g));
      fmt::print("{}\n", outcome.dir.string());
    }));
  });

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus with planted truth");
  synth->add_option("--docs", synth_opts.num_docs, "number of documents")->capture_default_str();
  synth->add_option("--topics", synth_opts.num_topics, "number of planted topics")->capture_default_str();
  synth->add_option("--doc-length", synth_opts.doc_length, "words per document")->capture_default_str();
  synth->add_option("--top-k", synth_opts.top_k, "planted rate of the fastest topic")->capture_default_str();
  synth->callback([&] {
    std::exit(run_guarded([&] {
      if (g.seed) synth_opts.seed = *g.seed;
      const fs::path dir = g.out.empty() ? fs::path("synth") : fs::path(g.out);
      const auto corpus = generate_synthetic_corpus(synth_opts);
      write_synthetic_bundle(dir, corpus, synth_opts);
      fmt::print("{}\n", (dir / "scan.conf").string());
    }));
  });

  std::string snapshot_dir;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "HTTP+JSON API over a snapshot (port from SCAN_PORT)");
  serve->add_option("--snapshot", snapshot_dir, "snapshot directory")->required();
  serve->add_option("--host", host, "bind address")->capture_default_str();
  serve->callback([&] {
    std::exit(run_guarded([&] {
      int port = 8080;
      if (const char* env = std::getenv("SCAN_PORT")) {
        const auto p = parse_int(env);
        if (!p || *p <= 0 || *p > 65535) throw InputError(fmt::format("SCAN_PORT is not a port: '{}'", env));
        port = static_cast<int>(*p);
      }
      if (!fs::exists(fs::path(snapshot_dir) / files::kManifest)) {
        throw InputError(fmt::format("no snapshot at {}", snapshot_dir));
      }
      auto snap = std::make_shared<const ScanSnapshot>(ScanSnapshot::load(snapshot_dir));
      ScanService service(snap, fs::path(snapshot_dir) / files::kLabels);
      fmt::print(stderr, "serving run {} on {}:{}\n", snap->run_id(), host, port);
      serve_http(service, host, port);
    }));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }
  return kExitOk;
}
