#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "w2c/checkpoint.hpp"
#include "w2c/tensor.hpp"

namespace w2c {

/// k context centroids (k x n) and the trainable k x k merge matrix.
struct ContextSpace {
  Matrix centroids;
  Matrix merge;
  json metadata = json::object();

  std::size_t k() const { return centroids.rows(); }
  std::size_t n() const { return centroids.cols(); }

  static ContextSpace from_centroids(Matrix centroids);
};

/// Merged contexts X_bar = M_M * X, k x n.
Matrix merge_contexts(const ContextSpace& space);

struct KMeansConfig {
  std::size_t k = 2;
  std::size_t max_iter = 100;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  ContextSpace space;
  std::vector<std::size_t> assignment;
  /// Objective sum(1 - cos(x, own centroid)) after every assignment step.
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;

  double objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
};

/// Spherical k-means over the rows of `elements`: assignment by maximum
/// cosine similarity (ties to the lower index), centroid = normalized mean of
/// the normalized members, k-means++ seeding under cosine distance. An empty
/// cluster is reseeded at the element farthest from its own centroid.
/// Throws when rows < k or a row has zero norm. M_M starts as identity.
KMeansResult kmeans_cluster(const Matrix& elements, const KMeansConfig& config);

/// Same iteration from caller-chosen initial centroids (k x n).
KMeansResult kmeans_from(const Matrix& elements, Matrix initial, std::size_t max_iter);

double kmeans_objective(const Matrix& elements, const Matrix& centroids, std::span<const std::size_t> assignment);

/// Context space checkpoint. Magic "W2CS"; JSON header {k, n, metadata};
/// blob is X (k*n f32) then M_M (k*k f32).
std::string serialize_space(const ContextSpace& space);
ContextSpace parse_space(std::string_view bytes, std::optional<std::size_t> expected_n = std::nullopt);
void save_space(const ContextSpace& space, const std::filesystem::path& path);
ContextSpace load_space(const std::filesystem::path& path, std::optional<std::size_t> expected_n = std::nullopt);

}  // namespace w2c
