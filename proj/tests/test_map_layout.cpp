#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hscan/error.hpp"
#include "hscan/map_layout.hpp"
#include "testing.hpp"

using namespace hscan;

namespace {

double silhouette(const std::vector<Point2>& p, const std::vector<int>& label) {
  const std::size_t n = p.size();
  const auto dist = [&](std::size_t a, std::size_t b) { return std::hypot(p[a].x - p[b].x, p[a].y - p[b].y); };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sum(3, 0.0);
    std::vector<int> cnt(3, 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sum[label[j]] += dist(i, j);
      ++cnt[label[j]];
    }
    const double a = sum[label[i]] / cnt[label[i]];
    double b = INFINITY;
    for (int c = 0; c < 3; ++c) {
      if (c != label[i]) b = std::min(b, sum[c] / cnt[c]);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / double(n);
}

Matrix random_features(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = u(rng) < 0.4 ? u(rng) : 0.0;
  }
  return m;
}

}  // namespace

TEST_CASE("imported coordinates") {
  testing::TempDir dir("coords");
  const std::vector<int> ids = {0, 1, 2};
  testing::write_text(dir / "ok.csv", "topic_id,x,y\n2,0.5,1\n0,1,2\n1,-3,4\n");
  const auto l = import_coordinates(dir / "ok.csv", ids);
  CHECK(l.method == LayoutMethod::imported);
  REQUIRE(l.coords.size() == 3);
  CHECK(l.coords[l.index_of(2)].x == 0.5);

  testing::write_text(dir / "missing.csv", "topic_id,x,y\n0,1,2\n1,-3,4\n");
  try {
    import_coordinates(dir / "missing.csv", ids);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
  testing::write_text(dir / "nan.csv", "topic_id,x,y\n0,1,2\n1,nan,4\n2,0,0\n");
  CHECK_THROWS(import_coordinates(dir / "nan.csv", ids));
  testing::write_text(dir / "dup.csv", "topic_id,x,y\n0,1,2\n1,1,4\n2,0,0\n2,0,0\n");
  CHECK_THROWS(import_coordinates(dir / "dup.csv", ids));
}

TEST_CASE("pca separates well-separated bundles") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0.0, 0.05);
  const std::size_t V = 60;
  Matrix centers(3, V);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t v = 0; v < V; ++v) centers(c, v) = u(rng);
  }
  Matrix f(45, V);
  std::vector<int> label(45);
  for (std::size_t r = 0; r < 45; ++r) {
    label[r] = int(r % 3);
    for (std::size_t v = 0; v < V; ++v) f(r, v) = centers(label[r], v) + noise(rng);
  }
  const auto l = pca_layout(f);
  CHECK(l.method == LayoutMethod::pca);
  CHECK(silhouette(l.coords, label) > 0.5);

  double vx = 0.0;
  double vy = 0.0;
  for (const auto& p : l.coords) {
    vx += p.x * p.x;
    vy += p.y * p.y;
  }
  CHECK(vx >= vy);
}

TEST_CASE("duplicate rows coincide and the layout is deterministic") {
  std::mt19937_64 rng(3);
  auto f = random_features(rng, 12, 30);
  for (std::size_t c = 0; c < 30; ++c) f(7, c) = f(2, c);
  const auto a = pca_layout(f);
  CHECK(std::abs(a.coords[7].x - a.coords[2].x) < 1e-6);
  CHECK(std::abs(a.coords[7].y - a.coords[2].y) < 1e-6);
  const auto b = pca_layout(f);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(a.coords[i].x == b.coords[i].x);
    CHECK(a.coords[i].y == b.coords[i].y);
  }
  CHECK_THROWS(pca_layout(Matrix(2, 4, 1.0)));
}

TEST_CASE("cosine distances") {
  const std::vector<double> a = {1, 2, 0};
  const std::vector<double> b = {2, 4, 0};
  const std::vector<double> e1 = {1, 0, 0};
  const std::vector<double> e2 = {0, 1, 0};
  const std::vector<double> z = {0, 0, 0};
  CHECK(cosine_distance(a, b) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cosine_distance(e1, e2) == 1.0);
  CHECK(std::isinf(cosine_distance(a, z)));
}

TEST_CASE("knn: identical rows, one-hot rows, zero rows") {
  Matrix f(4, 3);
  f(0, 0) = 1;
  f(1, 0) = 1;
  f(2, 1) = 1;
  std::vector<int> zero;
  const auto g = knn_graph(f, 2, 1, &zero);
  CHECK(g[0][0] == Neighbor{1, 0.0});
  CHECK(g[1][0] == Neighbor{0, 0.0});
  CHECK(g[0][1] == Neighbor{2, 1.0});
  CHECK(zero == std::vector<int>{3});
}

TEST_CASE("knn matches the exhaustive oracle and is symmetric") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_features(rng, 10, 15);
    const std::size_t k = 3;
    const auto g = knn_graph(f, k, 1 + trial % 4);
    for (std::size_t i = 0; i < 10; ++i) {
      std::vector<std::pair<double, int>> all;
      for (std::size_t j = 0; j < 10; ++j) {
        if (i != j) all.emplace_back(cosine_distance(f.row(i), f.row(j)), int(j));
      }
      std::sort(all.begin(), all.end());
      REQUIRE(g[i].size() == k);
      for (std::size_t r = 0; r < k; ++r) {
        CHECK(g[i][r].id == all[r].second);
        if (std::isinf(all[r].first)) {
          CHECK(std::isinf(g[i][r].distance));
        } else {
          CHECK(g[i][r].distance == doctest::Approx(all[r].first).epsilon(1e-12));
        }
      }
    }
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < 10; ++j) {
        if (i != j) CHECK(cosine_distance(f.row(i), f.row(j)) == cosine_distance(f.row(j), f.row(i)));
      }
    }
  }
}

TEST_CASE("layout files round trip") {
  testing::TempDir dir("layout");
  std::mt19937_64 rng(5);
  const auto f = random_features(rng, 8, 10);
  auto l = pca_layout(f);
  l.knn = knn_graph(f, 3);
  write_coordinates_csv(dir / "layout.csv", l);
  write_knn_csv(dir / "knn.csv", l);
  const auto back = import_coordinates(dir / "layout.csv", l.topic_ids);
  for (std::size_t i = 0; i < 8; ++i) CHECK(back.coords[i].x == doctest::Approx(l.coords[i].x).epsilon(1e-8));
  const auto knn = read_knn_csv(dir / "knn.csv", l.topic_ids);
  REQUIRE(knn.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    REQUIRE(knn[i].size() == 3);
    CHECK(knn[i][0].id == l.knn[i][0].id);
  }
}
