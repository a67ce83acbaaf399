#include "w2c/interp.hpp"

#include <algorithm>
#include <numeric>

#include "w2c/error.hpp"

namespace w2c {

ContextRanking rank_from_affinities(std::vector<double> positive, std::vector<double> negative) {
  if (positive.size() != negative.size()) throw ShapeError("rank_from_affinities: length mismatch");
  ContextRanking r;
  r.positive_affinity = std::move(positive);
  r.negative_affinity = std::move(negative);
  r.order.resize(r.positive_affinity.size());
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return r.score(a) < r.score(b); });
  return r;
}

ContextRanking rank_contexts(const ContextSpace& space, std::span<const Matrix> elements,
                             std::span<const std::size_t> labels) {
  if (elements.size() != labels.size()) throw ShapeError("rank_contexts: elements/labels length mismatch");
  const std::size_t k = space.k();
  std::vector<double> pos(k, 0.0), neg(k, 0.0);
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t s = 0; s < elements.size(); ++s) {
    if (labels[s] > 1) throw Error("rank_contexts: labels must be 0 (negative) or 1 (positive)");
    const Matrix d = context_relative_distance(space, elements[s]);
    auto& acc = labels[s] == 1 ? pos : neg;
    (labels[s] == 1 ? n_pos : n_neg) += 1;
    for (std::size_t j = 0; j < k; ++j) {
      double pooled = 0.0;
      for (std::size_t i = 0; i < d.rows(); ++i) pooled += d(i, j);
      acc[j] += pooled / static_cast<double>(d.rows());
    }
  }
  if (n_pos == 0 || n_neg == 0) throw Error("rank_contexts: data must contain both sentiment classes");
  for (std::size_t j = 0; j < k; ++j) {
    pos[j] /= static_cast<double>(n_pos);
    neg[j] /= static_cast<double>(n_neg);
  }
  return rank_from_affinities(std::move(pos), std::move(neg));
}

ContextSpace reverse_context_space(const ContextSpace& space, const ContextRanking& ranking) {
  const std::size_t k = space.k();
  std::vector<std::size_t> sorted = ranking.order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted.size() != k || sorted[i] != i) throw Error("reverse_context_space: ranking is not a permutation of [0, k)");
  }
  ContextSpace out = space;
  for (std::size_t r = 0; r < k / 2; ++r) {
    const std::size_t a = ranking.order[r], b = ranking.order[k - 1 - r];
    auto ra = out.centroids.row(a);
    auto rb = out.centroids.row(b);
    std::swap_ranges(ra.begin(), ra.end(), rb.begin());
  }
  return out;
}

ReversalReport reversal_metrics(std::span<const std::size_t> original, std::span<const std::size_t> modified,
                                std::span<const std::size_t> labels) {
  if (original.size() != modified.size() || original.size() != labels.size()) {
    throw ShapeError("reversal_metrics: prediction/label lengths differ");
  }
  ReversalReport r;
  r.original_accuracy = evaluate_classification(original, labels);
  r.changed_accuracy = evaluate_classification(modified, labels);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < original.size(); ++i) flipped += original[i] != modified[i];
  r.reversed_ratio = 100.0 * static_cast<double>(flipped) / static_cast<double>(original.size());
  return r;
}

ReversalReport run_reversal(const ContextSpace& space, const TaskHead& head, std::span<const Matrix> elements,
                            std::span<const std::size_t> labels) {
  ContextRanking before = rank_contexts(space, elements, labels);
  const ContextSpace reversed = reverse_context_space(space, before);
  std::vector<std::size_t> original, modified;
  original.reserve(elements.size());
  modified.reserve(elements.size());
  for (const auto& c : elements) {
    original.push_back(predict_sequence(space, head, c));
    modified.push_back(predict_sequence(reversed, head, c));
  }
  ReversalReport report = reversal_metrics(original, modified, labels);
  report.before = std::move(before);
  report.after = rank_contexts(reversed, elements, labels);
  return report;
}

}  // namespace w2c
