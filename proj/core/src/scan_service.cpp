#include "hscan/scan_service.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "hscan/error.hpp"
#include "hscan/text_io.hpp"
#include "label_json.hpp"

namespace hscan {

using nlohmann::ordered_json;

namespace {

class RequestError : public Error {
 public:
  using Error::Error;
};

class MethodError : public Error {
 public:
  using Error::Error;
};

ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string query_or(const ApiRequest& r, const std::string& key, const std::string& fallback) {
  const auto it = r.query.find(key);
  return it == r.query.end() || it->second.empty() ? fallback : it->second;
}

long long query_int(const ApiRequest& r, const std::string& key, long long fallback) {
  const auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) return fallback;
  const auto v = parse_int(it->second);
  if (!v) throw RequestError(fmt::format("parameter {} must be an integer", key));
  return *v;
}

double query_double(const ApiRequest& r, const std::string& key, double fallback) {
  const auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) return fallback;
  const auto v = parse_double(it->second);
  if (!v) throw RequestError(fmt::format("parameter {} must be a number", key));
  return *v;
}

ordered_json fit_json(const FitResult& f) {
  ordered_json j;
  j["n0"] = number(f.n0_hat);
  j["err_n0"] = number(f.err_n0);
  j["k"] = number(f.k_hat);
  j["err_k"] = number(f.err_k);
  j["cagr"] = number(f.cagr);
  j["err_cagr"] = number(f.err_cagr);
  j["chi2_red"] = number(f.chi2_red);
  j["dof"] = f.dof;
  j["converged"] = f.converged;
  j["bucket"] = std::string(to_string(classify_fit(f)));
  return j;
}

}  // namespace

ScanService::ScanService(std::shared_ptr<const ScanSnapshot> snapshot, const std::filesystem::path& labels_path)
    : snapshot_(std::move(snapshot)), labels_(labels_path, snapshot_->run_id()) {
  source_lq_ = lq_by_source(doc_topic_sums(snapshot_->model.doc_topic, snapshot_->docs, DocumentAttribute::source),
                            &source_activity_);
}

void ScanService::check_topic(int topic_id) const {
  if (topic_id < 0 || static_cast<std::size_t>(topic_id) >= snapshot_->num_topics()) {
    throw NotFoundError(fmt::format("unknown topic {}", topic_id));
  }
}

ApiResponse ScanService::handle(const ApiRequest& request) {
  ApiResponse response;
  try {
    std::vector<std::string> parts;
    for (const auto p : split(request.path, '/')) {
      if (!p.empty()) parts.emplace_back(p);
    }
    const auto& m = request.method;
    const auto topic_id = [&]() {
      const auto v = parse_int(parts[1]);
      if (!v) throw NotFoundError(fmt::format("unknown topic '{}'", parts[1]));
      check_topic(static_cast<int>(*v));
      return static_cast<int>(*v);
    };
    const auto require = [&](const char* method) {
      if (m != method) throw MethodError(fmt::format("{} not allowed on {}", m, request.path));
    };
    if (parts.size() == 1 && parts[0] == "healthz") {
      require("GET");
      ordered_json j;
      j["run_id"] = snapshot_->run_id();
      j["status"] = "ok";
      response.body = j.dump();
    } else if (parts.size() == 1 && parts[0] == "map") {
      require("GET");
      response.body = get_map(request);
    } else if (parts.size() == 2 && parts[0] == "topics") {
      require("GET");
      response.body = get_topic(topic_id());
    } else if (parts.size() == 3 && parts[0] == "topics" && parts[2] == "documents") {
      require("GET");
      response.body = get_topic_documents(topic_id(), request);
    } else if (parts.size() == 3 && parts[0] == "topics" && parts[2] == "label") {
      require("PUT");
      response.body = put_label(topic_id(), request);
    } else if (parts.size() == 1 && parts[0] == "supertopics") {
      if (m == "GET") {
        response.body = get_supertopics();
      } else if (m == "POST") {
        response.body = post_supertopic(request);
        response.status = 201;
      } else {
        throw MethodError(fmt::format("{} not allowed on {}", m, request.path));
      }
    } else if (parts.size() == 2 && parts[0] == "supertopics") {
      require("DELETE");
      response.body = delete_supertopic(parts[1]);
    } else if (parts.size() == 1 && parts[0] == "screen") {
      require("GET");
      response.body = get_screen(request);
    } else if (parts.size() == 1 && parts[0] == "lq") {
      require("GET");
      response.body = get_lq(request);
    } else {
      throw NotFoundError(fmt::format("no route for {}", request.path));
    }
  } catch (const Error& e) {
    if (dynamic_cast<const NotFoundError*>(&e)) {
      response.status = 404;
    } else if (dynamic_cast<const MethodError*>(&e)) {
      response.status = 405;
    } else if (dynamic_cast<const ValidationError*>(&e)) {
      response.status = 422;
    } else if (dynamic_cast<const RequestError*>(&e) || dynamic_cast<const InputError*>(&e)) {
      response.status = 400;
    } else {
      response.status = 500;
    }
    ordered_json j;
    j["run_id"] = snapshot_->run_id();
    j["error"] = e.what();
    response.body = j.dump();
  } catch (const std::exception& e) {
    response.status = 500;
    ordered_json j;
    j["run_id"] = snapshot_->run_id();
    j["error"] = e.what();
    response.body = j.dump();
  }
  return response;
}

std::string ScanService::get_map(const ApiRequest& request) const {
  const auto& s = *snapshot_;
  const std::string color_by = query_or(request, "color_by", "supertopic");
  if (color_by != "supertopic" && color_by != "cagr" && color_by != "field" && color_by != "source_lq") {
    throw RequestError(fmt::format("unknown color_by '{}' (supertopic, cagr, field, source_lq)", color_by));
  }
  std::size_t source_col = 0;
  const std::string source = query_or(request, "source", "");
  if (color_by == "source_lq") {
    if (source.empty()) throw RequestError("color_by=source_lq requires a source parameter");
    source_col = source_activity_.entity_index(source);
    if (source_col == static_cast<std::size_t>(-1)) {
      throw RequestError(fmt::format("unknown source '{}' (publication, patent, grant)", source));
    }
  }
  const auto labels = labels_.view();
  ordered_json j;
  j["run_id"] = s.run_id();
  j["method"] = std::string(to_string(s.layout.method));
  j["color_by"] = color_by;
  if (!source.empty()) j["source"] = source;
  j["label_version"] = labels->version;
  ordered_json topics = ordered_json::array();
  for (std::size_t i = 0; i < s.layout.topic_ids.size(); ++i) {
    const int id = s.layout.topic_ids[i];
    const auto k = static_cast<std::size_t>(id);
    const auto* label = labels->find(id);
    ordered_json t;
    t["topic_id"] = id;
    t["x"] = s.layout.coords[i].x;
    t["y"] = s.layout.coords[i].y;
    t["size"] = s.sizes[k];
    if (color_by == "cagr") {
      t["color"] = number(s.fits[k].fittable ? s.fits[k].cagr : kNaN);
    } else if (color_by == "supertopic") {
      t["color"] = label && !label->super_topic_name.empty() ? label->super_topic_name : "unlabeled";
    } else if (color_by == "field") {
      const auto it = s.fields.find(id);
      t["color"] = it == s.fields.end() ? std::string("unassigned") : it->second;
    } else {
      t["color"] = number(source_lq_.lq(k, source_col));
      const auto flags = flag_string(source_lq_.flags[k][source_col]);
      if (!flags.empty()) t["flag"] = flags;
    }
    t["topic_name"] = label ? ordered_json(label->topic_name) : ordered_json(nullptr);
    t["super_topic_name"] = label ? ordered_json(label->super_topic_name) : ordered_json(nullptr);
    t["muted"] = label != nullptr && label->junk;
    topics.push_back(std::move(t));
  }
  j["topics"] = std::move(topics);
  return j.dump();
}

std::string ScanService::get_topic(int topic_id) const {
  const auto& s = *snapshot_;
  const auto k = static_cast<std::size_t>(topic_id);
  const auto labels = labels_.view();
  ordered_json j;
  j["run_id"] = s.run_id();
  j["topic_id"] = topic_id;
  ordered_json terms = ordered_json::array();
  for (const auto w : top_term_indices(s.model, k, s.manifest.top_m)) {
    terms.push_back({{"term", s.vocabulary[w]}, {"weight", s.model.term_topic(k, w)}});
  }
  j["terms"] = std::move(terms);
  j["coherence"] = number(s.diagnostics[k].coherence);
  j["coherence_source"] = s.manifest.coherence_source;
  j["size"] = s.sizes[k];
  const auto& fit = s.fits[k];
  if (fit.fittable) {
    j["fit"] = fit_json(fit);
  } else {
    j["fit"] = nullptr;
    j["fit_absent_reason"] = fit.reason;
  }
  const auto* label = labels->find(topic_id);
  j["label"] = label ? record_json(*label) : ordered_json(nullptr);
  ordered_json history = ordered_json::array();
  if (const auto it = labels->history.find(topic_id); it != labels->history.end()) {
    for (const auto& r : it->second) history.push_back(record_json(r));
  }
  j["history"] = std::move(history);
  ordered_json neighbors = ordered_json::array();
  const auto li = s.layout.index_of(topic_id);
  if (li != static_cast<std::size_t>(-1) && li < s.layout.knn.size()) {
    for (const auto& n : s.layout.knn[li]) neighbors.push_back({{"topic_id", n.id}, {"distance", number(n.distance)}});
  }
  j["neighbors"] = std::move(neighbors);
  return j.dump();
}

std::string ScanService::get_topic_documents(int topic_id, const ApiRequest& request) const {
  const auto& s = *snapshot_;
  const auto k = static_cast<std::size_t>(topic_id);
  const long long limit = query_int(request, "limit", 50);
  const long long offset = query_int(request, "offset", 0);
  if (limit < 1) throw RequestError("limit must be at least 1");
  if (offset < 0) throw RequestError("offset must be non-negative");
  std::vector<std::size_t> order(s.docs.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& dt = s.model.doc_topic;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dt(a, k) != dt(b, k)) return dt(a, k) > dt(b, k);
    return s.docs[a].doc_id < s.docs[b].doc_id;
  });
  ordered_json j;
  j["run_id"] = s.run_id();
  j["topic_id"] = topic_id;
  j["total"] = order.size();
  j["offset"] = offset;
  ordered_json rows = ordered_json::array();
  const auto begin = std::min<std::size_t>(static_cast<std::size_t>(offset), order.size());
  const auto end = std::min<std::size_t>(begin + static_cast<std::size_t>(limit), order.size());
  for (std::size_t i = begin; i < end; ++i) {
    const auto& doc = s.docs[order[i]];
    ordered_json r;
    r["doc_id"] = doc.doc_id;
    r["title"] = doc.title;
    r["year"] = doc.year;
    r["source"] = std::string(to_string(doc.source));
    r["fraction"] = dt(order[i], k);
    r["abstract"] = doc.abstract_text;
    rows.push_back(std::move(r));
  }
  j["documents"] = std::move(rows);
  return j.dump();
}

std::string ScanService::put_label(int topic_id, const ApiRequest& request) {
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(request.body);
  } catch (const nlohmann::json::exception& e) {
    throw RequestError(fmt::format("label body is not valid JSON: {}", e.what()));
  }
  if (!body.is_object()) throw RequestError("label body must be a JSON object");
  if (body.contains("topic_id") && body["topic_id"] != topic_id) {
    throw RequestError("topic_id in body does not match the path");
  }
  TopicLabelRecord record;
  try {
    body["topic_id"] = topic_id;
    body["updated_at"] = "";
    if (!request.analyst.empty()) body["author"] = request.analyst;
    record = record_from_json(body);
  } catch (const nlohmann::json::exception& e) {
    throw RequestError(fmt::format("invalid label record: {}", e.what()));
  }
  auto result = labels_.put_label(std::move(record));
  ordered_json j;
  j["run_id"] = snapshot_->run_id();
  j["record"] = record_json(result.record);
  j["warnings"] = result.warnings;
  return j.dump();
}

std::string ScanService::get_supertopics() const {
  const auto view = labels_.view();
  ordered_json j;
  j["run_id"] = snapshot_->run_id();
  j["supertopics"] = view->supertopics;
  j["soft_limit"] = LabelStore::kSupertopicSoftLimit;
  return j.dump();
}

std::string ScanService::post_supertopic(const ApiRequest& request) {
  std::string name;
  try {
    const auto body = nlohmann::json::parse(request.body);
    name = body.at("name").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw RequestError(fmt::format("expected {{\"name\": ...}}: {}", e.what()));
  }
  const auto warnings = labels_.add_supertopic(name);
  ordered_json j;
  j["run_id"] = snapshot_->run_id();
  j["supertopics"] = labels_.view()->supertopics;
  j["warnings"] = warnings;
  return j.dump();
}

std::string ScanService::delete_supertopic(const std::string& name) {
  labels_.remove_supertopic(name);
  return get_supertopics();
}

std::string ScanService::get_screen(const ApiRequest& request) const {
  const auto& s = *snapshot_;
  const long long top_n = query_int(request, "top_n", 200);
  if (top_n < 0) throw RequestError("top_n must be non-negative");
  RankOptions options;
  options.top_n = static_cast<std::size_t>(top_n);
  options.coherence_floor = query_double(request, "coherence_floor", -1000.0);
  const auto labels = labels_.view();
  const auto rows = rank_emerging(
      s.fits, [&](int id) { return s.sizes[static_cast<std::size_t>(id)]; },
      [&](int id) { return s.diagnostics[static_cast<std::size_t>(id)].coherence; },
      [&](int id) { return labels->is_junk(id); }, options);
  ordered_json j;
  j["run_id"] = s.run_id();
  j["top_n"] = top_n;
  j["coherence_floor"] = options.coherence_floor;
  ordered_json out = ordered_json::array();
  int rank = 1;
  for (const auto& r : rows) {
    const auto k = static_cast<std::size_t>(r.topic_id);
    const auto* label = labels->find(r.topic_id);
    ordered_json row;
    row["rank"] = rank++;
    row["topic_id"] = r.topic_id;
    row["topic_name"] = label ? label->topic_name : "";
    row["super_topic_name"] = label ? label->super_topic_name : "";
    row["size"] = r.size;
    row["cagr"] = number(r.cagr);
    row["err_cagr"] = number(r.err_cagr);
    row["coherence"] = number(r.coherence);
    row["chi2_red"] = number(s.fits[k].chi2_red);
    row["bucket"] = std::string(to_string(classify_fit(s.fits[k])));
    ordered_json terms = ordered_json::array();
    for (const auto w : top_term_indices(s.model, k, 5)) terms.push_back(s.vocabulary[w]);
    row["top_terms"] = std::move(terms);
    out.push_back(std::move(row));
  }
  j["rows"] = std::move(out);
  return j.dump();
}

std::string ScanService::get_lq(const ApiRequest& request) const {
  const auto& s = *snapshot_;
  const std::string entity_type = query_or(request, "entity_type", "");
  const auto it = s.activity.find(entity_type);
  if (it == s.activity.end()) {
    std::vector<std::string> known;
    for (const auto& [name, m] : s.activity) known.push_back(name);
    throw NotFoundError(fmt::format("unknown entity_type '{}'; known: {}", entity_type, fmt::join(known, ", ")));
  }
  const std::string level = query_or(request, "level", "topic");
  const std::string baseline = query_or(request, "baseline", "requested");
  const std::string universe = query_or(request, "universe", "all");
  if (level != "topic" && level != "supertopic") throw RequestError("level must be topic or supertopic");
  if (baseline != "requested" && baseline != "all") throw RequestError("baseline must be requested or all");
  if (universe != "all" && universe != "top200") throw RequestError("universe must be all or top200");

  std::vector<std::string> entities;
  const std::string entity_list = query_or(request, "entities", "");
  for (const auto e : split(entity_list, ',')) {
    if (!trim(e).empty()) entities.emplace_back(trim(e));
  }
  const auto labels = labels_.view();
  ActivityMatrix m = it->second;
  if (universe == "top200") {
    RankOptions options;
    options.top_n = 200;
    const auto rows = rank_emerging(
        s.fits, [&](int id) { return s.sizes[static_cast<std::size_t>(id)]; },
        [&](int id) { return s.diagnostics[static_cast<std::size_t>(id)].coherence; },
        [&](int id) { return labels->is_junk(id); }, options);
    std::vector<int> ids;
    for (const auto& r : rows) ids.push_back(r.topic_id);
    std::sort(ids.begin(), ids.end());
    std::vector<std::string> cats;
    for (const int id : ids) cats.push_back(std::to_string(id));
    m = select_categories(m, cats);
  }
  if (level == "supertopic") {
    m = aggregate_categories(m, [&](const std::string& category) -> std::optional<std::string> {
      const auto* r = labels->find(std::stoi(category));
      if (!r || r->junk || r->super_topic_name.empty()) return std::nullopt;
      return r->super_topic_name;
    });
    if (m.categories.empty()) throw RequestError("no topics carry a super topic label");
  }
  if (entities.empty()) entities = m.entities;
  ActivityMatrix selected = select_entities(m, entities);
  LqTable table;
  std::vector<std::size_t> columns(entities.size());
  if (baseline == "requested") {
    table = compute_lq(selected);
    std::iota(columns.begin(), columns.end(), 0);
  } else {
    table = compute_lq(m);
    for (std::size_t e = 0; e < entities.size(); ++e) columns[e] = m.entity_index(entities[e]);
  }

  ordered_json j;
  j["run_id"] = s.run_id();
  j["entity_type"] = entity_type;
  j["level"] = level;
  j["baseline"] = baseline;
  j["universe"] = universe;
  j["categories"] = m.categories;
  ordered_json rows = ordered_json::array();
  for (std::size_t e = 0; e < entities.size(); ++e) {
    const std::size_t col = columns[e];
    ordered_json row;
    row["entity_id"] = entities[e];
    ordered_json lq = ordered_json::array();
    ordered_json err = ordered_json::array();
    ordered_json flags = ordered_json::array();
    for (std::size_t i = 0; i < m.categories.size(); ++i) {
      lq.push_back(number(table.lq(i, col)));
      err.push_back(number(table.err(i, col)));
      flags.push_back(flag_string(table.flags[i][col]));
    }
    row["lq"] = std::move(lq);
    row["lq_err"] = std::move(err);
    row["flags"] = std::move(flags);
    rows.push_back(std::move(row));
  }
  j["entities"] = std::move(rows);
  if (entities.size() == 2) {
    ordered_json quads = ordered_json::array();
    for (std::size_t i = 0; i < m.categories.size(); ++i) {
      quads.push_back(std::string(to_string(quadrant(table.lq(i, columns[0]), table.lq(i, columns[1])))));
    }
    j["quadrants"] = std::move(quads);
  }
  return j.dump();
}

}  // namespace hscan
