#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hscan/topic_model.hpp"

namespace hscan {

struct ModelFiles {
  TopicModel model;
  std::vector<std::string> doc_ids;
  std::vector<std::string> vocabulary;
};

/// Writes `<dir>/term_topic.csv.gz` (term,t0..tK-1), `<dir>/doc_topic.csv.gz`
/// (doc_id,t0..tK-1) and `<dir>/model.json` (alpha, beta, ll_per_token).
/// Values use the shortest round-trip representation.
void export_model(const std::filesystem::path& dir, const TopicModel& model,
                  const std::vector<std::string>& doc_ids, const std::vector<std::string>& vocabulary);
ModelFiles import_model(const std::filesystem::path& dir);

}  // namespace hscan
