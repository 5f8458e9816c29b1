#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hscan/dense_matrix.hpp"

namespace hscan {

enum class LayoutMethod { imported, pca };
std::string_view to_string(LayoutMethod method);

struct Neighbor {
  int id = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct TopicMapLayout {
  LayoutMethod method = LayoutMethod::pca;
  std::vector<int> topic_ids;  // ascending
  std::vector<Point2> coords;
  std::vector<std::vector<Neighbor>> knn;  // parallel to topic_ids, may be empty
  std::vector<int> zero_rows;              // topics with an all-zero feature row
  std::vector<std::string> warnings;

  std::size_t index_of(int topic_id) const;  // npos if absent
};

/// CSV `topic_id,x,y`. Every id in `expected_ids` must appear exactly once;
/// missing ids, unknown ids, duplicates and non-finite values are errors.
TopicMapLayout import_coordinates(const std::filesystem::path& path, std::span<const int> expected_ids);

struct PcaOptions {
  double tol = 1e-9;
  int max_iter = 1000;
};

/// Rows of `features` (one per topic) are centered and projected on the top
/// two principal directions found by power iteration with deflation. Each
/// direction is signed so its largest-magnitude component is positive.
TopicMapLayout pca_layout(const Matrix& features, const PcaOptions& options = {});

/// 1 - cosine similarity; +inf when either row is all zero.
double cosine_distance(std::span<const double> a, std::span<const double> b);

/// Exact k nearest rows by cosine distance, excluding self, ordered by
/// distance then lower id. Topic ids are the row indices.
std::vector<std::vector<Neighbor>> knn_graph(const Matrix& features, std::size_t k, unsigned threads = 1,
                                             std::vector<int>* zero_rows = nullptr);

/// `topic_id,x,y` with 9 significant digits.
void write_coordinates_csv(const std::filesystem::path& path, const TopicMapLayout& layout);
/// `topic_id,rank,neighbor_id,distance`, rank starting at 1.
void write_knn_csv(const std::filesystem::path& path, const TopicMapLayout& layout);
std::vector<std::vector<Neighbor>> read_knn_csv(const std::filesystem::path& path, std::span<const int> topic_ids);

}  // namespace hscan
