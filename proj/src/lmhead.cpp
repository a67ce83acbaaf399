#include "w2c/lmhead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "w2c/binio.hpp"
#include "w2c/error.hpp"
#include "w2c/optim.hpp"
#include "w2c/random.hpp"

namespace w2c {

Matrix context_relative_distance(const ContextSpace& space, const Matrix& elements, bool apply_merge) {
  if (elements.cols() != space.n()) {
    throw ShapeError("context_relative_distance: elements have " + std::to_string(elements.cols()) +
                     " columns, space has n = " + std::to_string(space.n()));
  }
  const Matrix contexts = apply_merge ? merge_contexts(space) : space.centroids;
  std::vector<double> cnorm(contexts.rows());
  for (std::size_t j = 0; j < contexts.rows(); ++j) {
    cnorm[j] = norm(contexts.row(j));
    if (cnorm[j] == 0.0) throw DegenerateInputError("degenerate context: merged context " + std::to_string(j) + " has zero norm");
  }
  Matrix d(elements.rows(), contexts.rows());
  for (std::size_t i = 0; i < elements.rows(); ++i) {
    const double en = norm(elements.row(i));
    if (en == 0.0) throw DegenerateInputError("word element " + std::to_string(i) + " has zero norm");
    for (std::size_t j = 0; j < contexts.rows(); ++j) {
      const double c = dot(elements.row(i), contexts.row(j)) / (en * cnorm[j]);
      d(i, j) = std::clamp(c, -1.0, 1.0);
    }
  }
  return d;
}

Var context_relative_distance(Var merge, Var centroids, Var elements) {
  return cosine_matrix(elements, matmul(merge, centroids));
}

TaskHead::TaskHead(Task task, std::size_t contexts, std::size_t outputs, std::uint64_t seed)
    : task_(task), contexts_(contexts), outputs_(outputs) {
  if (contexts == 0 || outputs == 0) throw ShapeError("TaskHead: zero-sized head");
  Rng rng(seed);
  params_.add("w", fan_in_uniform(contexts, outputs, contexts, rng));
  params_.add("b", Matrix(1, outputs));
  params_.snap_to_float();
}

Var TaskHead::logits(Tape& tape, Var distance, bool trainable) {
  if (distance.cols() != contexts_) throw ShapeError("TaskHead: distance feature width != k");
  auto p = trainable ? bind_params(tape, params_) : freeze_params(tape, params_);
  Var x = task_ == Task::kSentiment ? mean_rows(distance) : distance;
  return add_row(matmul(x, p[0]), p[1]);
}

Matrix TaskHead::logits(const Matrix& distance) const {
  if (distance.cols() != contexts_) throw ShapeError("TaskHead: distance feature width != k");
  if (distance.rows() == 0) throw ShapeError("TaskHead: empty distance feature");
  Tape tape;
  auto p = freeze_params(tape, params_);
  Var x = tape.constant(distance);
  if (task_ == Task::kSentiment) x = mean_rows(x);
  return add_row(matmul(x, p[0]), p[1]).value();
}

Matrix token_classify(const TaskHead& head, const Matrix& distance) {
  if (head.task() != Task::kCorrection) throw Error("token_classify needs a correction head");
  return softmax_rows(head.logits(distance));
}

Matrix sequence_classify(const TaskHead& head, const Matrix& distance) {
  if (head.task() != Task::kSentiment) throw Error("sequence_classify needs a sentiment head");
  return softmax_rows(head.logits(distance));
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
  std::vector<std::size_t> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::size_t predict_sequence(const ContextSpace& space, const TaskHead& head, const Matrix& elements) {
  return argmax_rows(head.logits(context_relative_distance(space, elements)))[0];
}

std::vector<std::size_t> predict_tokens(const ContextSpace& space, const TaskHead& head, const Matrix& elements) {
  return argmax_rows(head.logits(context_relative_distance(space, elements)));
}

DownstreamReport train_downstream(ContextSpace& space, TaskHead& head, std::span<const Matrix> elements,
                                  std::span<const LabeledExample> data, const DownstreamConfig& config) {
  if (elements.size() != data.size()) throw ShapeError("train_downstream: elements/data count mismatch");
  if (head.contexts() != space.k()) throw ConfigMismatchError("train_downstream: head expects a different k");
  DownstreamReport report;
  if (config.epochs == 0 || data.empty()) return report;

  ParamStore merge_store;
  Parameter& merge = merge_store.add("merge", space.merge);
  Adam merge_opt(merge_store, {.lr = config.lr});
  Adam head_opt(head.params(), {.lr = config.lr});
  Rng rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    std::size_t correct = 0, counted = 0;
    for (std::size_t idx : order) {
      const auto& ex = data[idx];
      Tape tape;
      Var dist = context_relative_distance(tape.param(merge), tape.constant(space.centroids),
                                           tape.constant(elements[idx]));
      Var logits = head.logits(tape, dist, true);
      const std::size_t label = ex.label;
      std::span<const std::size_t> targets =
          head.task() == Task::kSentiment ? std::span<const std::size_t>(&label, 1) : std::span(ex.target);
      Var loss = softmax_cross_entropy(logits, targets);
      if (!std::isfinite(loss.scalar())) {
        throw NonFiniteError("train_downstream: non-finite loss at example " + std::to_string(idx));
      }
      const auto pred = argmax_rows(logits.value());
      for (std::size_t r = 0; r < pred.size(); ++r) correct += pred[r] == targets[r] ? 1 : 0;
      counted += pred.size();
      total += loss.scalar();
      tape.backward(loss);
      merge_opt.step();
      head_opt.step();
    }
    report.epoch_loss.push_back(total / static_cast<double>(data.size()));
    report.epoch_accuracy.push_back(100.0 * static_cast<double>(correct) / static_cast<double>(counted));
  }
  space.merge = merge.value;
  snap_to_float(space.merge);
  head.params().snap_to_float();
  return report;
}

// ---------------------------------------------------------------------------
// Head checkpoint

std::string serialize_head(const TaskHead& head, const json& provenance) {
  json header = {{"kind", "w2c-head"},
                 {"task", task_name(head.task())},
                 {"contexts", head.contexts()},
                 {"outputs", head.outputs()},
                 {"layout", describe_params(head.params())},
                 {"provenance", provenance}};
  std::vector<float> blob;
  append_params(blob, head.params());
  return encode_json_blob("W2CH", header, blob);
}

TaskHead parse_head(std::string_view bytes) {
  JsonBlob file = decode_json_blob("W2CH", bytes);
  try {
    TaskHead head(parse_task(file.header.at("task").get<std::string>()), file.header.at("contexts").get<std::size_t>(),
                  file.header.at("outputs").get<std::size_t>(), 0);
    std::size_t offset = 0;
    read_params(head.params(), file.header.at("layout"), file.blob, offset);
    if (offset != file.blob.size()) throw FormatError("head checkpoint has trailing parameters");
    return head;
  } catch (const json::exception& e) {
    throw FormatError(std::string("head checkpoint header: ") + e.what());
  }
}

void save_head(const TaskHead& head, const json& provenance, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_head(head, provenance));
}

TaskHead load_head(const std::filesystem::path& path) { return parse_head(read_file(path)); }

// ---------------------------------------------------------------------------
// Metrics

double f1_score(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

namespace {

double pct(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

PrfScores scores(std::size_t det_tp, std::size_t cor_tp, std::size_t predicted, std::size_t gold) {
  PrfScores s;
  s.detection_precision = pct(det_tp, predicted);
  s.detection_recall = pct(det_tp, gold);
  s.detection_f1 = f1_score(s.detection_precision, s.detection_recall);
  s.correction_precision = pct(cor_tp, predicted);
  s.correction_recall = pct(cor_tp, gold);
  s.correction_f1 = f1_score(s.correction_precision, s.correction_recall);
  return s;
}

}  // namespace

CorrectionMetrics evaluate_correction(std::span<const std::vector<std::size_t>> sources,
                                      std::span<const std::vector<std::size_t>> targets,
                                      std::span<const std::vector<std::size_t>> predictions) {
  if (sources.size() != targets.size() || sources.size() != predictions.size()) {
    throw ShapeError("evaluate_correction: source/target/prediction counts differ");
  }
  std::size_t w_pred = 0, w_gold = 0, w_det = 0, w_cor = 0;
  std::size_t s_pred = 0, s_gold = 0, s_det = 0, s_cor = 0;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& src = sources[s];
    const auto& tgt = targets[s];
    const auto& prd = predictions[s];
    if (src.size() != tgt.size() || src.size() != prd.size()) {
      throw ShapeError("evaluate_correction: sentence " + std::to_string(s) + " is misaligned");
    }
    bool any_pred = false, any_gold = false, same_positions = true, all_correct = true;
    for (std::size_t i = 0; i < src.size(); ++i) {
      const bool edited = prd[i] != src[i];
      const bool wrong = tgt[i] != src[i];
      w_pred += edited;
      w_gold += wrong;
      w_det += edited && wrong;
      w_cor += edited && wrong && prd[i] == tgt[i];
      any_pred = any_pred || edited;
      any_gold = any_gold || wrong;
      same_positions = same_positions && edited == wrong;
      all_correct = all_correct && (!edited || prd[i] == tgt[i]);
    }
    s_pred += any_pred;
    s_gold += any_gold;
    const bool detected = any_pred && same_positions;
    s_det += detected;
    s_cor += detected && all_correct;
  }
  return {scores(w_det, w_cor, w_pred, w_gold), scores(s_det, s_cor, s_pred, s_gold)};
}

double evaluate_classification(std::span<const std::size_t> predictions, std::span<const std::size_t> references) {
  if (predictions.size() != references.size()) throw ShapeError("evaluate_classification: length mismatch");
  if (predictions.empty()) throw Error("evaluate_classification: empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) correct += predictions[i] == references[i];
  return pct(correct, predictions.size());
}

}  // namespace w2c
