#include "w2c/pipeline.hpp"

#include <algorithm>

#include "w2c/error.hpp"

namespace w2c {

std::vector<FeatureBatch> compute_features(const FeatureSource& source, std::span<const Sentence> sentences) {
  std::vector<FeatureBatch> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out.push_back({static_cast<std::uint64_t>(i), source.features(i, sentences[i])});
  }
  return out;
}

std::vector<Matrix> compute_elements(const MapperNet& mapper, const FeatureSource& source,
                                     std::span<const Sentence> sentences) {
  if (source.hidden() != mapper.hidden()) {
    throw ConfigMismatchError("encoder hidden size " + std::to_string(source.hidden()) +
                              " != mapper input size " + std::to_string(mapper.hidden()));
  }
  std::vector<Matrix> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out.push_back(map_forward(mapper, source.features(i, sentences[i])));
  }
  return out;
}

Matrix stack_elements(std::span<const Matrix> elements, std::size_t token_cap) {
  std::size_t total = 0;
  std::size_t cols = elements.empty() ? 0 : elements.front().cols();
  for (const auto& e : elements) total += e.rows();
  total = std::min(total, token_cap);
  Matrix out(total, cols);
  std::size_t r = 0;
  for (const auto& e : elements) {
    for (std::size_t i = 0; i < e.rows() && r < total; ++i, ++r) {
      std::copy_n(e.row(i).begin(), cols, out.row(r).begin());
    }
    if (r == total) break;
  }
  return out;
}

void snap_to_float(ContextSpace& space) {
  snap_to_float(space.centroids);
  snap_to_float(space.merge);
}

}  // namespace w2c
