#include "w2c/contextspace.hpp"

#include <algorithm>
#include <cmath>

#include "w2c/binio.hpp"
#include "w2c/error.hpp"
#include "w2c/random.hpp"

namespace w2c {

ContextSpace ContextSpace::from_centroids(Matrix centroids) {
  ContextSpace s;
  s.merge = Matrix::identity(centroids.rows());
  s.centroids = std::move(centroids);
  return s;
}

Matrix merge_contexts(const ContextSpace& space) {
  if (space.merge.rows() != space.k() || space.merge.cols() != space.k()) {
    throw ShapeError("merge matrix must be k x k");
  }
  return matmul(space.merge, space.centroids);
}

namespace {

Matrix normalized_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const double nr = norm(out.row(r));
    if (nr == 0.0) throw DegenerateInputError("kmeans: element " + std::to_string(r) + " has zero norm");
    for (double& v : out.row(r)) v /= nr;
  }
  return out;
}

// Rows are unit length, so cosine is a dot product.
std::size_t nearest(const Matrix& centroids, std::span<const double> x, double& best_sim) {
  std::size_t best = 0;
  best_sim = -2.0;
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double s = dot(centroids.row(c), x);
    if (s > best_sim) {
      best_sim = s;
      best = c;
    }
  }
  return best;
}

Matrix kmeanspp_init(const Matrix& unit, std::size_t k, Rng& rng) {
  const std::size_t count = unit.rows(), n = unit.cols();
  Matrix centroids(k, n);
  std::vector<std::size_t> chosen;
  chosen.push_back(rng.below(count));
  std::vector<double> dist(count, 0.0);
  while (chosen.size() < k) {
    const Matrix current = [&] {
      Matrix c(chosen.size(), n);
      for (std::size_t i = 0; i < chosen.size(); ++i) std::copy_n(unit.row(chosen[i]).begin(), n, c.row(i).begin());
      return c;
    }();
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      double sim = 0.0;
      nearest(current, unit.row(i), sim);
      const double dd = std::max(0.0, 1.0 - sim);
      dist[i] = dd * dd;
      total += dist[i];
    }
    std::size_t pick = count;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < count; ++i) {
        if (dist[i] <= 0.0) continue;
        pick = i;
        target -= dist[i];
        if (target < 0.0) break;
      }
    }
    if (pick == count) {
      // every element coincides with a chosen centroid; take the first unused index
      for (std::size_t i = 0; i < count && pick == count; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) pick = i;
      }
    }
    chosen.push_back(pick);
  }
  for (std::size_t i = 0; i < k; ++i) std::copy_n(unit.row(chosen[i]).begin(), n, centroids.row(i).begin());
  return centroids;
}

KMeansResult iterate(const Matrix& unit, Matrix centroids, std::size_t max_iter) {
  const std::size_t count = unit.rows(), n = unit.cols(), k = centroids.rows();
  KMeansResult result;
  std::vector<std::size_t> assign(count, k);  // k = unassigned sentinel
  std::vector<double> sim(count, 0.0);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t c = nearest(centroids, unit.row(i), sim[i]);
      changed = changed || c != assign[i];
      assign[i] = c;
      objective += 1.0 - sim[i];
    }
    result.objective_trace.push_back(objective);
    result.iterations = iter + 1;
    if (!changed) {
      result.converged = true;
      break;
    }
    // update step
    Matrix sums(k, n);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < count; ++i) {
      auto dst = sums.row(assign[i]);
      auto src = unit.row(i);
      for (std::size_t c = 0; c < n; ++c) dst[c] += src[c];
      ++sizes[assign[i]];
    }
    std::vector<std::size_t> reseeded;
    for (std::size_t c = 0; c < k; ++c) {
      const double nr = norm(sums.row(c));
      if (sizes[c] > 0 && nr > 0.0) {
        for (std::size_t j = 0; j < n; ++j) centroids(c, j) = sums(c, j) / nr;
        continue;
      }
      // empty (or cancelling) cluster: move it onto the worst-served element
      std::size_t far = count;
      for (std::size_t i = 0; i < count; ++i) {
        if (std::find(reseeded.begin(), reseeded.end(), i) != reseeded.end()) continue;
        if (far == count || sim[i] < sim[far]) far = i;
      }
      if (far == count) continue;
      reseeded.push_back(far);
      std::copy_n(unit.row(far).begin(), n, centroids.row(c).begin());
    }
  }
  result.assignment = std::move(assign);
  result.space = ContextSpace::from_centroids(std::move(centroids));
  return result;
}

}  // namespace

double kmeans_objective(const Matrix& elements, const Matrix& centroids, std::span<const std::size_t> assignment) {
  if (assignment.size() != elements.rows()) throw ShapeError("kmeans_objective: assignment length mismatch");
  double obj = 0.0;
  for (std::size_t i = 0; i < elements.rows(); ++i) {
    obj += 1.0 - cosine_similarity(elements.row(i), centroids.row(assignment[i]));
  }
  return obj;
}

KMeansResult kmeans_cluster(const Matrix& elements, const KMeansConfig& config) {
  if (config.k == 0) throw Error("kmeans: k must be positive");
  if (elements.rows() < config.k) {
    throw Error("kmeans: " + std::to_string(elements.rows()) + " elements < k = " + std::to_string(config.k));
  }
  const Matrix unit = normalized_rows(elements);
  Rng rng(config.seed);
  return iterate(unit, kmeanspp_init(unit, config.k, rng), config.max_iter);
}

KMeansResult kmeans_from(const Matrix& elements, Matrix initial, std::size_t max_iter) {
  if (initial.cols() != elements.cols()) throw ShapeError("kmeans_from: centroid width mismatch");
  if (elements.rows() < initial.rows()) throw Error("kmeans: fewer elements than centroids");
  return iterate(normalized_rows(elements), normalized_rows(initial), max_iter);
}

// ---------------------------------------------------------------------------
// Checkpoint

std::string serialize_space(const ContextSpace& space) {
  if (space.merge.rows() != space.k() || space.merge.cols() != space.k()) {
    throw ShapeError("serialize_space: merge matrix must be k x k");
  }
  json header = {{"kind", "w2c-space"}, {"k", space.k()}, {"n", space.n()}, {"metadata", space.metadata}};
  std::vector<float> blob;
  append_matrix(blob, space.centroids);
  append_matrix(blob, space.merge);
  return encode_json_blob("W2CS", header, blob);
}

ContextSpace parse_space(std::string_view bytes, std::optional<std::size_t> expected_n) {
  JsonBlob file = decode_json_blob("W2CS", bytes);
  std::size_t k = 0, n = 0;
  ContextSpace space;
  try {
    k = file.header.at("k").get<std::size_t>();
    n = file.header.at("n").get<std::size_t>();
    space.metadata = file.header.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw FormatError(std::string("space checkpoint header: ") + e.what());
  }
  if (file.blob.size() != k * n + k * k) {
    throw FormatError("space checkpoint blob has " + std::to_string(file.blob.size()) + " floats, expected " +
                      std::to_string(k * n + k * k));
  }
  if (expected_n && *expected_n != n) {
    throw ConfigMismatchError("context space has n = " + std::to_string(n) + " but the mapper produces n = " +
                              std::to_string(*expected_n));
  }
  std::size_t offset = 0;
  space.centroids = read_matrix(k, n, file.blob, offset);
  space.merge = read_matrix(k, k, file.blob, offset);
  return space;
}

void save_space(const ContextSpace& space, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_space(space));
}

ContextSpace load_space(const std::filesystem::path& path, std::optional<std::size_t> expected_n) {
  return parse_space(read_file(path), expected_n);
}

}  // namespace w2c
