#pragma once

#include <json.hpp>

#include "hscan/error.hpp"
#include "hscan/label_store.hpp"

namespace hscan {

inline nlohmann::ordered_json record_json(const TopicLabelRecord& r) {
  nlohmann::ordered_json j;
  j["topic_id"] = r.topic_id;
  j["topic_name"] = r.topic_name;
  j["super_topic_name"] = r.super_topic_name;
  j["junk"] = r.junk;
  j["junk_reason"] = std::string(to_string(r.junk_reason));
  j["updated_at"] = r.updated_at;
  j["author"] = r.author;
  return j;
}

inline TopicLabelRecord record_from_json(const nlohmann::json& j) {
  TopicLabelRecord r;
  r.topic_id = j.at("topic_id").get<int>();
  r.topic_name = j.value("topic_name", "");
  r.super_topic_name = j.value("super_topic_name", "");
  r.junk = j.value("junk", false);
  const auto reason = parse_junk_reason(j.value("junk_reason", "none"));
  if (!reason) throw ValidationError("unknown junk_reason");
  r.junk_reason = *reason;
  r.updated_at = j.value("updated_at", "");
  r.author = j.value("author", "");
  return r;
}

}  // namespace hscan
