#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "synth.hpp"
#include "w2c/contextspace.hpp"
#include "w2c/random.hpp"

using namespace w2c;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

std::vector<double> row_of(const Matrix& m, std::size_t r) { return {m.row(r).begin(), m.row(r).end()}; }

}  // namespace

TEST_CASE("duplicate points cluster onto their directions") {
  Matrix pts{{1, 0}, {1, 0}, {0, 1}, {0, 1}};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto res = kmeans_cluster(pts, {.k = 2, .max_iter = 100, .seed = seed});
    std::set<std::vector<double>> got{row_of(res.space.centroids, 0), row_of(res.space.centroids, 1)};
    std::set<std::vector<double>> want{{1.0, 0.0}, {0.0, 1.0}};
    CHECK(got == want);
    CHECK(res.objective() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(res.assignment[0] == res.assignment[1]);
    CHECK(res.assignment[2] == res.assignment[3]);
    CHECK(res.assignment[0] != res.assignment[2]);
    CHECK(res.converged);
    CHECK(res.space.merge == Matrix::identity(2));
  }
}

TEST_CASE("k = 1 yields the normalized mean direction") {
  Matrix pts{{2, 0}, {0, 3}};
  auto res = kmeans_cluster(pts, {.k = 1, .max_iter = 50, .seed = 3});
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(res.space.centroids(0, 0) == doctest::Approx(s));
  CHECK(res.space.centroids(0, 1) == doctest::Approx(s));
  CHECK(res.objective() == doctest::Approx(2.0 * (1.0 - s)));
}

TEST_CASE("k equal to the distinct directions gives zero objective") {
  Matrix pts{{1, 0, 0}, {0, 2, 0}, {0, 0, 3}, {5, 0, 0}, {0, 0, 1}};
  auto res = kmeans_cluster(pts, {.k = 3, .max_iter = 100, .seed = 1});
  CHECK(res.objective() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kmeans input validation") {
  CHECK_THROWS(kmeans_cluster(Matrix{{1, 0}}, {.k = 2, .max_iter = 10, .seed = 0}));
  CHECK_THROWS_AS(kmeans_cluster(Matrix{{1, 0}, {0, 0}}, {.k = 1, .max_iter = 10, .seed = 0}), DegenerateInputError);
  CHECK_THROWS_AS(kmeans_from(Matrix{{1, 0}, {0, 1}}, Matrix{{1, 0, 0}}, 10), ShapeError);
}

TEST_CASE("kmeans objective trace is non-increasing and centroids are unit length") {
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(5), count = 5 + rng.below(40), k = 1 + rng.below(4);
    Matrix pts = random_matrix(count, n, rng);
    auto res = kmeans_cluster(pts, {.k = k, .max_iter = 100, .seed = rng.next_u64()});
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
      CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-12);
    }
    for (std::size_t c = 0; c < k; ++c) CHECK(norm(res.space.centroids.row(c)) == doctest::Approx(1.0));
    CHECK(res.objective() == doctest::Approx(kmeans_objective(pts, res.space.centroids, res.assignment)));
  }
}

TEST_CASE("kmeans is deterministic under a seed") {
  Rng rng(5);
  Matrix pts = random_matrix(60, 4, rng);
  auto a = kmeans_cluster(pts, {.k = 5, .max_iter = 100, .seed = 9});
  auto b = kmeans_cluster(pts, {.k = 5, .max_iter = 100, .seed = 9});
  CHECK(a.space.centroids == b.space.centroids);
  CHECK(a.assignment == b.assignment);
}

TEST_CASE("merge_contexts examples") {
  auto space = ContextSpace::from_centroids(Matrix{{1, 0}, {0, 1}});
  CHECK(merge_contexts(space) == space.centroids);

  space.merge = Matrix{{0, 1}, {1, 0}};
  CHECK(merge_contexts(space) == Matrix{{0, 1}, {1, 0}});

  space.merge = Matrix(2, 2, 0.5);
  CHECK(merge_contexts(space) == Matrix{{0.5, 0.5}, {0.5, 0.5}});

  space.merge = Matrix(3, 3);
  CHECK_THROWS_AS(merge_contexts(space), ShapeError);
}

TEST_CASE("context space checkpoint round trip") {
  Rng rng(3);
  auto space = ContextSpace::from_centroids(random_matrix(4, 6, rng));
  space.merge = random_matrix(4, 4, rng);
  space.metadata = json{{"seed", 1}};
  for (auto& v : space.centroids.data()) v = static_cast<float>(v);
  for (auto& v : space.merge.data()) v = static_cast<float>(v);

  auto dir = test::scratch_dir("space");
  save_space(space, dir / "s.w2cs");
  ContextSpace back = load_space(dir / "s.w2cs", 6);
  CHECK(back.centroids == space.centroids);
  CHECK(back.merge == space.merge);
  CHECK(back.metadata == space.metadata);
  CHECK(serialize_space(back) == serialize_space(space));

  CHECK_THROWS_AS(load_space(dir / "s.w2cs", 5), ConfigMismatchError);
  std::string bytes = serialize_space(space);
  CHECK_THROWS_AS(parse_space(bytes.substr(0, bytes.size() - 4)), FormatError);
  CHECK_THROWS_AS(parse_space(bytes + "x"), FormatError);
  bytes[1] = '?';
  CHECK_THROWS_AS(parse_space(bytes), FormatError);
}
