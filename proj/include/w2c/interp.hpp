#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "w2c/contextspace.hpp"
#include "w2c/lmhead.hpp"

namespace w2c {

/// Sentiment affinity of every context and the contexts ordered from most
/// negative-affine to most positive-affine.
struct ContextRanking {
  std::vector<double> positive_affinity;
  std::vector<double> negative_affinity;
  /// order[r] = context index at rank r.
  std::vector<std::size_t> order;

  double score(std::size_t context) const { return positive_affinity[context] - negative_affinity[context]; }
};

/// Sorts contexts by (positive - negative) ascending, ties by index.
ContextRanking rank_from_affinities(std::vector<double> positive, std::vector<double> negative);

/// Affinity of context j to a class = mean over that class's sentences of the
/// mean-pooled D(., j). Labels: 1 positive, 0 negative. Throws unless both
/// classes are present.
ContextRanking rank_contexts(const ContextSpace& space, std::span<const Matrix> elements,
                             std::span<const std::size_t> labels);

/// Swaps the centroid at rank r with the one at rank k-1-r. M_M is untouched.
/// Applying it twice with the same ranking restores the space bitwise.
ContextSpace reverse_context_space(const ContextSpace& space, const ContextRanking& ranking);

struct ReversalReport {
  double original_accuracy = 0.0;  // OA
  double changed_accuracy = 0.0;   // CA
  double reversed_ratio = 0.0;     // RA, share of all sentences whose prediction flipped
  ContextRanking before;
  ContextRanking after;
};

/// OA, CA and RA in percent. Leaves the rankings empty.
ReversalReport reversal_metrics(std::span<const std::size_t> original, std::span<const std::size_t> modified,
                                std::span<const std::size_t> labels);

/// Full protocol over frozen artifacts: rank, reverse, re-predict, score.
ReversalReport run_reversal(const ContextSpace& space, const TaskHead& head, std::span<const Matrix> elements,
                            std::span<const std::size_t> labels);

}  // namespace w2c
