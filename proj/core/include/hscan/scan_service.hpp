#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "hscan/label_store.hpp"
#include "hscan/snapshot.hpp"

namespace hscan {

struct ApiRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string analyst;  // X-Analyst-Id header
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

/// Transport-independent request router over one snapshot and its label
/// store. Read endpoints are pure functions of the snapshot and the label
/// view they observe, so identical requests between writes return identical
/// bodies.
///
///   GET    /healthz
///   GET    /map?color_by=supertopic|cagr|field|source_lq&source=
///   GET    /topics/{id}
///   GET    /topics/{id}/documents?limit=
///   PUT    /topics/{id}/label
///   GET    /supertopics        POST /supertopics {"name":..}
///   DELETE /supertopics/{name}
///   GET    /screen?top_n=&coherence_floor=
///   GET    /lq?entity_type=&entities=a,b&level=topic|supertopic
///          &baseline=requested|all&universe=all|top200
class ScanService {
 public:
  ScanService(std::shared_ptr<const ScanSnapshot> snapshot, const std::filesystem::path& labels_path);

  ApiResponse handle(const ApiRequest& request);

  const ScanSnapshot& snapshot() const noexcept { return *snapshot_; }
  LabelStore& labels() noexcept { return labels_; }

 private:
  std::string get_map(const ApiRequest& request) const;
  std::string get_topic(int topic_id) const;
  std::string get_topic_documents(int topic_id, const ApiRequest& request) const;
  std::string put_label(int topic_id, const ApiRequest& request);
  std::string get_supertopics() const;
  std::string post_supertopic(const ApiRequest& request);
  std::string delete_supertopic(const std::string& name);
  std::string get_screen(const ApiRequest& request) const;
  std::string get_lq(const ApiRequest& request) const;
  void check_topic(int topic_id) const;

  std::shared_ptr<const ScanSnapshot> snapshot_;
  LabelStore labels_;
  LqTable source_lq_;
  ActivityMatrix source_activity_;
};

/// Serves `service` over HTTP until the process is stopped.
void serve_http(ScanService& service, const std::string& host, int port);

}  // namespace hscan
