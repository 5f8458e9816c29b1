#include "hscan/map_layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "hscan/error.hpp"
#include "hscan/parallel.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

std::string_view to_string(LayoutMethod method) {
  return method == LayoutMethod::imported ? "imported" : "pca";
}

std::size_t TopicMapLayout::index_of(int topic_id) const {
  const auto it = std::lower_bound(topic_ids.begin(), topic_ids.end(), topic_id);
  if (it == topic_ids.end() || *it != topic_id) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - topic_ids.begin());
}

TopicMapLayout import_coordinates(const std::filesystem::path& path, std::span<const int> expected_ids) {
  const auto table = read_csv(path);
  const std::string origin = path.string();
  const auto c_id = table.column("topic_id", origin);
  const auto c_x = table.column("x", origin);
  const auto c_y = table.column("y", origin);
  std::map<int, Point2> coords;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.row_lines[r];
    const auto id = parse_int(row[c_id]);
    const auto x = parse_double(row[c_x]);
    const auto y = parse_double(row[c_y]);
    if (!id) throw FormatError(origin, line, fmt::format("invalid topic_id '{}'", row[c_id]));
    if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
      throw FormatError(origin, line, fmt::format("topic {} has a non-finite coordinate", *id));
    }
    if (std::find(expected_ids.begin(), expected_ids.end(), *id) == expected_ids.end()) {
      throw FormatError(origin, line, fmt::format("topic {} is not in the model", *id));
    }
    if (!coords.emplace(static_cast<int>(*id), Point2{*x, *y}).second) {
      throw FormatError(origin, line, fmt::format("duplicate topic {}", *id));
    }
  }
  std::vector<int> missing;
  for (const int id : expected_ids) {
    if (!coords.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    throw InputError(fmt::format("{}: coordinates missing for topic(s) {}", origin, fmt::join(missing, ", ")));
  }
  TopicMapLayout layout;
  layout.method = LayoutMethod::imported;
  for (const auto& [id, p] : coords) {
    layout.topic_ids.push_back(id);
    layout.coords.push_back(p);
  }
  return layout;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

TopicMapLayout pca_layout(const Matrix& features, const PcaOptions& options) {
  const std::size_t K = features.rows();
  const std::size_t V = features.cols();
  if (K < 3) throw InputError("PCA layout needs at least 3 topics");

  Matrix x = features;
  for (std::size_t j = 0; j < V; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < K; ++i) mean += x(i, j);
    mean /= static_cast<double>(K);
    for (std::size_t i = 0; i < K; ++i) x(i, j) -= mean;
  }

  TopicMapLayout layout;
  layout.method = LayoutMethod::pca;
  layout.topic_ids.resize(K);
  std::iota(layout.topic_ids.begin(), layout.topic_ids.end(), 0);
  layout.coords.assign(K, Point2{});

  std::vector<std::vector<double>> axes;
  std::vector<double> eigenvalues;
  std::vector<double> xv(K);
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  std::vector<double> start(V);
  for (auto& s : start) s = unit(rng);

  for (int axis = 0; axis < 2; ++axis) {
    std::vector<double> v = start;
    const auto orthogonalize = [&](std::vector<double>& w) {
      for (const auto& prev : axes) {
        const double c = dot(w, prev);
        for (std::size_t j = 0; j < V; ++j) w[j] -= c * prev[j];
      }
    };
    orthogonalize(v);
    double nv = norm(v);
    double lambda = 0.0;
    if (nv > 0.0) {
      for (auto& e : v) e /= nv;
      for (int it = 0; it < options.max_iter; ++it) {
        for (std::size_t i = 0; i < K; ++i) xv[i] = dot(x.row(i), v);
        std::vector<double> w(V, 0.0);
        for (std::size_t i = 0; i < K; ++i) {
          const auto row = x.row(i);
          for (std::size_t j = 0; j < V; ++j) w[j] += row[j] * xv[i];
        }
        orthogonalize(w);
        lambda = norm(w);
        if (!(lambda > 0.0)) break;
        double diff = 0.0;
        for (std::size_t j = 0; j < V; ++j) {
          w[j] /= lambda;
          diff += (w[j] - v[j]) * (w[j] - v[j]);
        }
        v = std::move(w);
        if (std::sqrt(diff) < options.tol) break;
      }
    }
    const double scale_ref = eigenvalues.empty() ? lambda : eigenvalues.front();
    if (!(lambda > 1e-12 * std::max(scale_ref, 1e-300))) {
      layout.warnings.push_back(fmt::format("rank-deficient input: axis {} set to zero", axis + 1));
      v.assign(V, 0.0);
      lambda = 0.0;
    } else {
      std::size_t big = 0;
      for (std::size_t j = 1; j < V; ++j) {
        if (std::abs(v[j]) > std::abs(v[big])) big = j;
      }
      if (v[big] < 0.0) {
        for (auto& e : v) e = -e;
      }
    }
    eigenvalues.push_back(lambda);
    for (std::size_t i = 0; i < K; ++i) {
      const double p = dot(x.row(i), v);
      if (axis == 0) {
        layout.coords[i].x = p;
      } else {
        layout.coords[i].y = p;
      }
    }
    axes.push_back(std::move(v));
  }
  return layout;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return std::numeric_limits<double>::infinity();
  return std::clamp(1.0 - dot(a, b) / (na * nb), 0.0, 2.0);
}

std::vector<std::vector<Neighbor>> knn_graph(const Matrix& features, std::size_t k, unsigned threads,
                                             std::vector<int>* zero_rows) {
  const std::size_t K = features.rows();
  if (k >= K) throw InputError(fmt::format("k ({}) must be smaller than the number of topics ({})", k, K));
  std::vector<double> norms(K);
  for (std::size_t i = 0; i < K; ++i) norms[i] = norm(features.row(i));
  if (zero_rows) {
    zero_rows->clear();
    for (std::size_t i = 0; i < K; ++i) {
      if (norms[i] == 0.0) zero_rows->push_back(static_cast<int>(i));
    }
  }
  const auto distance = [&](std::size_t a, std::size_t b) {
    if (norms[a] == 0.0 || norms[b] == 0.0) return std::numeric_limits<double>::infinity();
    const std::size_t lo = std::min(a, b);
    const std::size_t hi = std::max(a, b);
    return std::clamp(1.0 - dot(features.row(lo), features.row(hi)) / (norms[lo] * norms[hi]), 0.0, 2.0);
  };
  std::vector<std::vector<Neighbor>> out(K);
  parallel_for(K, threads, [&](std::size_t q) {
    std::vector<Neighbor> all;
    all.reserve(K - 1);
    for (std::size_t j = 0; j < K; ++j) {
      if (j != q) all.push_back({static_cast<int>(j), distance(q, j)});
    }
    const auto less = [](const Neighbor& a, const Neighbor& b) {
      return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
    all.resize(k);
    out[q] = std::move(all);
  });
  return out;
}

void write_coordinates_csv(const std::filesystem::path& path, const TopicMapLayout& layout) {
  std::string out = "topic_id,x,y\n";
  for (std::size_t i = 0; i < layout.topic_ids.size(); ++i) {
    fmt::format_to(std::back_inserter(out), "{},{},{}\n", layout.topic_ids[i], format_sig9(layout.coords[i].x),
                   format_sig9(layout.coords[i].y));
  }
  write_file_atomic(path, out);
}

void write_knn_csv(const std::filesystem::path& path, const TopicMapLayout& layout) {
  std::string out = "topic_id,rank,neighbor_id,distance\n";
  for (std::size_t i = 0; i < layout.knn.size(); ++i) {
    for (std::size_t r = 0; r < layout.knn[i].size(); ++r) {
      fmt::format_to(std::back_inserter(out), "{},{},{},{}\n", layout.topic_ids[i], r + 1, layout.knn[i][r].id,
                     format_double(layout.knn[i][r].distance));
    }
  }
  write_file_atomic(path, out);
}

std::vector<std::vector<Neighbor>> read_knn_csv(const std::filesystem::path& path, std::span<const int> topic_ids) {
  const auto table = read_csv(path);
  const std::string origin = path.string();
  const auto c_id = table.column("topic_id", origin);
  const auto c_rank = table.column("rank", origin);
  const auto c_nb = table.column("neighbor_id", origin);
  const auto c_d = table.column("distance", origin);
  std::map<int, std::map<long long, Neighbor>> lists;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto id = parse_int(row[c_id]);
    const auto rank = parse_int(row[c_rank]);
    const auto nb = parse_int(row[c_nb]);
    const auto d = parse_double(row[c_d]);
    if (!id || !rank || !nb || !d) throw FormatError(origin, table.row_lines[r], "malformed neighbor row");
    lists[static_cast<int>(*id)][*rank] = Neighbor{static_cast<int>(*nb), *d};
  }
  std::vector<std::vector<Neighbor>> out(topic_ids.size());
  for (std::size_t i = 0; i < topic_ids.size(); ++i) {
    const auto it = lists.find(topic_ids[i]);
    if (it == lists.end()) continue;
    for (const auto& [rank, n] : it->second) out[i].push_back(n);
  }
  return out;
}

}  // namespace hscan
