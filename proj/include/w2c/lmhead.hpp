#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "w2c/autodiff.hpp"
#include "w2c/checkpoint.hpp"
#include "w2c/contextspace.hpp"
#include "w2c/corpus.hpp"

namespace w2c {

/// D(i,j) = cos(c_i, x_bar_j) over the merged contexts, d x k. With
/// `apply_merge` false the raw centroids are used. Throws
/// DegenerateInputError for a zero-norm merged context or element.
Matrix context_relative_distance(const ContextSpace& space, const Matrix& elements, bool apply_merge = true);

/// Differentiable D given the merge matrix and frozen centroids.
Var context_relative_distance(Var merge, Var centroids, Var elements);

/// Linear map from the k distance features to the task's outputs. The
/// sequence head mean-pools D over tokens first.
class TaskHead {
 public:
  TaskHead(Task task, std::size_t contexts, std::size_t outputs, std::uint64_t seed);

  Task task() const { return task_; }
  std::size_t contexts() const { return contexts_; }
  std::size_t outputs() const { return outputs_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Token task: d x V logits. Sequence task: 1 x classes logits.
  Var logits(Tape& tape, Var distance, bool trainable);
  Matrix logits(const Matrix& distance) const;

 private:
  Task task_;
  std::size_t contexts_;
  std::size_t outputs_;
  ParamStore params_;
};

/// Row-stochastic d x V matrix.
Matrix token_classify(const TaskHead& head, const Matrix& distance);
/// 1 x classes distribution.
Matrix sequence_classify(const TaskHead& head, const Matrix& distance);

std::vector<std::size_t> argmax_rows(const Matrix& m);

struct DownstreamConfig {
  std::size_t epochs = 10;
  double lr = 1e-2;
  std::uint64_t seed = 0;
};

struct DownstreamReport {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;  // training accuracy in percent, per epoch
};

/// Trains only the merge matrix of `space` and the head on cross-entropy.
/// `elements[i]` are the frozen word elements of `data[i]`. Centroids are not
/// touched. Trained values are rounded to f32 at the end.
DownstreamReport train_downstream(ContextSpace& space, TaskHead& head, std::span<const Matrix> elements,
                                  std::span<const LabeledExample> data, const DownstreamConfig& config);

/// Predicted class per sentence (sentiment) or token ids (correction).
std::size_t predict_sequence(const ContextSpace& space, const TaskHead& head, const Matrix& elements);
std::vector<std::size_t> predict_tokens(const ContextSpace& space, const TaskHead& head, const Matrix& elements);

/// Head checkpoint. Magic "W2CH"; header {task, contexts, outputs, layout, provenance}.
std::string serialize_head(const TaskHead& head, const json& provenance);
TaskHead parse_head(std::string_view bytes);
void save_head(const TaskHead& head, const json& provenance, const std::filesystem::path& path);
TaskHead load_head(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Metrics

struct PrfScores {
  double detection_precision = 0.0;
  double detection_recall = 0.0;
  double detection_f1 = 0.0;
  double correction_precision = 0.0;
  double correction_recall = 0.0;
  double correction_f1 = 0.0;
};

struct CorrectionMetrics {
  PrfScores word;
  PrfScores sentence;
};

/// Harmonic mean, 0 when both are 0.
double f1_score(double precision, double recall);

/// Percentages. Word level counts positions, sentence level counts sentences
/// (detected = exact set of changed positions matches the reference,
/// corrected = additionally every changed token equals the target). Precision
/// with no predicted edits is 0.
CorrectionMetrics evaluate_correction(std::span<const std::vector<std::size_t>> sources,
                                      std::span<const std::vector<std::size_t>> targets,
                                      std::span<const std::vector<std::size_t>> predictions);

/// 100 * correct / total. Throws on empty or mismatched input.
double evaluate_classification(std::span<const std::size_t> predictions, std::span<const std::size_t> references);

}  // namespace w2c
