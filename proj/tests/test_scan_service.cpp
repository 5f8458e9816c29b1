#include <doctest.h>

#include <json.hpp>

#include "hscan/scan_service.hpp"
#include "hscan/specialization.hpp"
#include "testing.hpp"

using namespace hscan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Harness {
  testing::TempDir dir{"service"};
  std::shared_ptr<const ScanSnapshot> snap;
  std::unique_ptr<ScanService> service;

  Harness() {
    const auto& run = testing::small_run();
    fs::copy(run.run_dir, dir / "snap", fs::copy_options::recursive);
    snap = std::make_shared<const ScanSnapshot>(ScanSnapshot::load(dir / "snap"));
    service = std::make_unique<ScanService>(snap, dir / "snap" / "labels.jsonl");
  }

  std::pair<int, json> call(const std::string& method, const std::string& path,
                            std::map<std::string, std::string> query = {}, const std::string& body = "") {
    ApiRequest r;
    r.method = method;
    r.path = path;
    r.query = std::move(query);
    r.body = body;
    r.analyst = "tester";
    const auto resp = service->handle(r);
    return {resp.status, json::parse(resp.body)};
  }
};

}  // namespace

TEST_CASE("every response carries the run id") {
  Harness h;
  const auto& id = testing::small_run().run_id;
  for (const auto* path : {"/healthz", "/map", "/topics/0", "/topics/0/documents", "/supertopics", "/screen",
                           "/nowhere", "/topics/999"}) {
    const auto [status, body] = h.call("GET", path);
    CHECK(body["run_id"] == id);
  }
  CHECK(h.call("GET", "/nowhere").first == 404);
  CHECK(h.call("GET", "/topics/999").first == 404);
  CHECK(h.call("POST", "/map").first == 405);
}

TEST_CASE("map coloring modes") {
  Harness h;
  const auto [s1, sup] = h.call("GET", "/map", {{"color_by", "supertopic"}});
  REQUIRE(s1 == 200);
  CHECK(sup["topics"].size() == 8);
  for (const auto& t : sup["topics"]) CHECK(t["color"] == "unlabeled");

  const auto [s2, cagr] = h.call("GET", "/map", {{"color_by", "cagr"}});
  for (const auto& t : cagr["topics"]) {
    const int id = t["topic_id"];
    CHECK(t["x"] == sup["topics"][id]["x"]);
    const auto& fit = h.snap->fits[id];
    if (fit.fittable && t["color"].is_number()) CHECK(t["color"].get<double>() == fit.cagr);
  }

  const auto [s3, lq] = h.call("GET", "/map", {{"color_by", "source_lq"}, {"source", "patent"}});
  REQUIRE(s3 == 200);
  GroupedSums sums = doc_topic_sums(h.snap->model.doc_topic, h.snap->docs, DocumentAttribute::source);
  const auto oracle = lq_by_source(sums);
  for (const auto& t : lq["topics"]) {
    const int id = t["topic_id"];
    if (t["color"].is_number()) CHECK(t["color"].get<double>() == doctest::Approx(oracle.lq(id, 1)).epsilon(1e-12));
  }
  CHECK(h.call("GET", "/map", {{"color_by", "bogus"}}).first == 400);
}

TEST_CASE("topic detail and documents") {
  Harness h;
  const auto [status, t] = h.call("GET", "/topics/2");
  REQUIRE(status == 200);
  CHECK(t["terms"].size() == 20);
  CHECK(t["coherence"].is_number());
  CHECK(t.contains("fit"));
  CHECK(t["neighbors"].size() == 7);

  const auto [s2, all] = h.call("GET", "/topics/2/documents", {{"limit", "1000"}});
  const auto& docs = all["documents"];
  REQUIRE(docs.size() > 1);
  for (std::size_t i = 1; i < docs.size(); ++i) CHECK(docs[i - 1]["fraction"] >= docs[i]["fraction"]);
  for (const auto& d : docs) CHECK(d["fraction"].get<double>() <= 1.0);
  const auto [s3, one] = h.call("GET", "/topics/2/documents", {{"limit", "1"}});
  REQUIRE(one["documents"].size() == 1);
  CHECK(one["documents"][0]["doc_id"] == docs[0]["doc_id"]);
  const auto [s4, page] = h.call("GET", "/topics/2/documents", {{"limit", "5"}, {"offset", "5"}});
  CHECK(page["documents"][0]["doc_id"] == docs[5]["doc_id"]);
}

TEST_CASE("label writes through the API") {
  Harness h;
  CHECK(h.call("POST", "/supertopics", {}, R"({"name":"Neural Networks"})").first == 201);
  const auto [s1, put] =
      h.call("PUT", "/topics/3/label", {}, R"({"topic_name":"Deep Learning","super_topic_name":"Neural Networks"})");
  REQUIRE(s1 == 200);
  CHECK(put["record"]["author"] == "tester");
  const auto [s2, map] = h.call("GET", "/map", {{"color_by", "supertopic"}});
  CHECK(map["topics"][3]["color"] == "Neural Networks");
  CHECK(h.call("PUT", "/topics/3/label", {}, R"({"junk":true,"junk_reason":"none"})").first == 422);
  CHECK(h.call("PUT", "/topics/3/label", {}, R"({"super_topic_name":"Unknown"})").first == 422);
  CHECK(h.call("DELETE", "/supertopics/Neural Networks").first == 422);

  h.call("PUT", "/topics/3/label", {}, R"({"topic_name":"Deep Nets","super_topic_name":"Neural Networks"})");
  const auto [s3, detail] = h.call("GET", "/topics/3");
  CHECK(detail["label"]["topic_name"] == "Deep Nets");
  CHECK(detail["history"].size() == 1);

  ScanService restarted(h.snap, h.dir / "snap" / "labels.jsonl");
  ApiRequest r;
  r.path = "/topics/3";
  CHECK(json::parse(restarted.handle(r).body)["label"]["topic_name"] == "Deep Nets");
}

TEST_CASE("screen endpoint ranks and filters") {
  Harness h;
  const auto [s1, all] = h.call("GET", "/screen", {{"top_n", "5"}});
  REQUIRE(s1 == 200);
  CHECK(all["rows"].size() <= 5);
  for (std::size_t i = 1; i < all["rows"].size(); ++i) CHECK(all["rows"][i - 1]["cagr"] >= all["rows"][i]["cagr"]);

  h.call("PUT", "/topics/" + std::to_string(all["rows"][0]["topic_id"].get<int>()) + "/label", {},
         R"({"junk":true,"junk_reason":"trivial"})");
  const auto [s2, after] = h.call("GET", "/screen", {{"top_n", "5"}});
  CHECK(after["rows"][0]["topic_id"] != all["rows"][0]["topic_id"]);
  for (int id = 0; id < 8; ++id) h.call("PUT", "/topics/" + std::to_string(id) + "/label", {}, R"({"junk":true,"junk_reason":"mixed"})");
  CHECK(h.call("GET", "/screen").second["rows"].empty());
}

TEST_CASE("lq endpoint") {
  Harness h;
  const auto [s1, one] = h.call("GET", "/lq", {{"entity_type", "source"}, {"entities", "patent"}});
  REQUIRE(s1 == 200);
  for (const auto& v : one["entities"][0]["lq"]) {
    if (v.is_number()) CHECK(v.get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto [s2, two] = h.call("GET", "/lq", {{"entity_type", "source"}, {"entities", "patent,publication"}});
  CHECK(two["quadrants"].size() == 8);
  CHECK(h.call("GET", "/lq", {{"entity_type", "planet"}}).first == 404);
  CHECK(h.call("GET", "/lq", {{"entity_type", "source"}, {"entities", "mars"}}).first == 404);

  h.call("POST", "/supertopics", {}, R"({"name":"G1"})");
  h.call("POST", "/supertopics", {}, R"({"name":"G2"})");
  for (int id = 0; id < 8; ++id) {
    h.call("PUT", "/topics/" + std::to_string(id) + "/label", {},
           std::string(R"({"super_topic_name":")") + (id < 4 ? "G1" : "G2") + "\"}");
  }
  const auto [s3, grouped] = h.call("GET", "/lq", {{"entity_type", "country"}, {"level", "supertopic"}});
  REQUIRE(s3 == 200);
  const auto& act = h.snap->activity.at("country");
  const auto agg = aggregate_categories(act, [](const std::string& c) -> std::optional<std::string> {
    return std::stoi(c) < 4 ? "G1" : "G2";
  });
  const auto oracle = compute_lq(agg);
  const auto& rows = grouped["entities"];
  for (std::size_t e = 0; e < rows.size(); ++e) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (rows[e]["lq"][i].is_number()) {
        CHECK(rows[e]["lq"][i].get<double>() == doctest::Approx(oracle.lq(i, e)).epsilon(1e-12));
      }
    }
  }
}
