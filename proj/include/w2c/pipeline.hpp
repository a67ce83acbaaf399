#pragma once

#include <span>
#include <vector>

#include "w2c/contextspace.hpp"
#include "w2c/encoder.hpp"
#include "w2c/mapper.hpp"

namespace w2c {

std::vector<FeatureBatch> compute_features(const FeatureSource& source, std::span<const Sentence> sentences);

/// Word elements of every sentence through a frozen encoder source and mapper.
std::vector<Matrix> compute_elements(const MapperNet& mapper, const FeatureSource& source,
                                     std::span<const Sentence> sentences);

/// Stacks element rows until `token_cap` rows are collected.
Matrix stack_elements(std::span<const Matrix> elements, std::size_t token_cap);

/// Rounds centroids and merge matrix to f32, the precision they are stored at.
void snap_to_float(ContextSpace& space);

}  // namespace w2c
