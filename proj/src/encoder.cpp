#include "w2c/encoder.hpp"

#include <cmath>
#include <numeric>

#include "w2c/binio.hpp"
#include "w2c/error.hpp"
#include "w2c/optim.hpp"
#include "w2c/random.hpp"

namespace w2c {

ToyEncoder::ToyEncoder(std::size_t vocab_size, std::size_t hidden, std::uint64_t seed)
    : vocab_size_(vocab_size), hidden_(hidden), seed_(seed) {
  if (vocab_size == 0 || hidden == 0) throw ShapeError("ToyEncoder: vocabulary and hidden size must be positive");
  Rng rng(seed);
  Matrix embed(vocab_size, hidden);
  for (double& v : embed.data()) v = rng.uniform(-1.0, 1.0);
  params_.add("embed", std::move(embed));
  params_.add("mix.w", fan_in_uniform(kToyMixWidth * hidden, hidden, kToyMixWidth * hidden, rng));
  params_.add("mix.b", Matrix(1, hidden));
  params_.snap_to_float();
}

namespace {

Var toy_apply(Var embedded, Var w, Var b) {
  return tanh(add(embedded, add_row(conv1d_same(embedded, w, kToyMixWidth), b)));
}

}  // namespace

Var ToyEncoder::forward(Tape& tape, std::span<const std::size_t> ids) {
  Var embed = tape.param(params_.at(0));
  Var w = tape.param(params_.at(1));
  Var b = tape.param(params_.at(2));
  return toy_apply(gather_rows(embed, ids), w, b);
}

Matrix ToyEncoder::encode(std::span<const std::size_t> ids) const {
  const Matrix& table = params_.at(0).value;
  Matrix rows(ids.size(), hidden_);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab_size_) throw ShapeError("toy_encode: token id " + std::to_string(ids[r]) + " out of range");
    auto src = table.row(ids[r]);
    std::copy(src.begin(), src.end(), rows.row(r).begin());
  }
  Tape tape;
  Matrix out = toy_apply(tape.constant(std::move(rows)), tape.constant(params_.at(1).value),
                         tape.constant(params_.at(2).value))
                   .value();
  snap_to_float(out);
  return out;
}

FeatureBatch toy_encode(const ToyEncoder& encoder, const Sentence& sentence, std::uint64_t sentence_id) {
  return FeatureBatch{sentence_id, encoder.encode(sentence.ids)};
}

FineTuneReport fine_tune_encoder(ToyEncoder& encoder, std::span<const LabeledExample> data, Task task,
                                 const FineTuneConfig& config) {
  FineTuneReport report;
  if (data.empty() || config.epochs == 0) return report;
  const std::size_t outputs = task == Task::kSentiment ? 2 : encoder.vocab_size();
  Rng rng(config.seed);
  ParamStore head;
  head.add("w", fan_in_uniform(encoder.hidden(), outputs, encoder.hidden(), rng));
  head.add("b", Matrix(1, outputs));
  Adam enc_opt(encoder.params(), {.lr = config.lr});
  Adam head_opt(head, {.lr = config.lr});

  auto logits_of = [&](Tape& tape, const LabeledExample& ex) {
    Var f = encoder.forward(tape, ex.sentence.ids);
    Var w = tape.param(head.at(0));
    Var b = tape.param(head.at(1));
    if (task == Task::kSentiment) f = mean_rows(f);
    return add_row(matmul(f, w), b);
  };

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t idx : order) {
      const auto& ex = data[idx];
      Tape tape;
      Var logits = logits_of(tape, ex);
      const std::size_t label = ex.label;
      Var loss = task == Task::kSentiment ? softmax_cross_entropy(logits, std::span(&label, 1))
                                          : softmax_cross_entropy(logits, ex.target);
      if (!std::isfinite(loss.scalar())) {
        throw NonFiniteError("fine_tune_encoder: non-finite loss at example " + std::to_string(idx));
      }
      total += loss.scalar();
      tape.backward(loss);
      enc_opt.step();
      head_opt.step();
    }
    report.epoch_loss.push_back(total / static_cast<double>(data.size()));
  }

  std::size_t correct = 0, total = 0;
  for (const auto& ex : data) {
    Tape tape;
    const Matrix p = logits_of(tape, ex).value();
    for (std::size_t r = 0; r < p.rows(); ++r) {
      auto row = p.row(r);
      const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      const std::size_t want = task == Task::kSentiment ? ex.label : ex.target[r];
      correct += pred == want ? 1 : 0;
      ++total;
    }
  }
  encoder.params().zero_grad();
  encoder.params().snap_to_float();
  report.train_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(total);
  return report;
}

// ---------------------------------------------------------------------------
// W2CE

std::string serialize_features(std::size_t hidden, std::span<const FeatureBatch> batches) {
  ByteWriter w;
  w.bytes("W2CE");
  w.u32(kFeatureFileVersion);
  w.u32(static_cast<std::uint32_t>(hidden));
  w.u64(batches.size());
  for (const auto& b : batches) {
    if (b.features.cols() != hidden) {
      throw ShapeError("serialize_features: batch " + std::to_string(b.sentence_id) + " has " +
                       std::to_string(b.features.cols()) + " columns, expected " + std::to_string(hidden));
    }
    w.u64(b.sentence_id);
    w.u32(static_cast<std::uint32_t>(b.features.rows()));
    for (double v : b.features.data()) w.f32(static_cast<float>(v));
  }
  return w.take();
}

void write_features(const std::filesystem::path& path, std::size_t hidden, std::span<const FeatureBatch> batches) {
  write_file_atomic(path, serialize_features(hidden, batches));
}

FeatureReader::FeatureReader(std::string bytes, std::optional<std::size_t> expected_hidden)
    : bytes_(std::move(bytes)) {
  ByteReader r(bytes_);
  if (r.bytes(4, "magic") != "W2CE") throw FormatError("not a W2CE feature file: bad magic at offset 0");
  const auto version = r.u32("version");
  if (version != kFeatureFileVersion) {
    throw FormatError("unsupported W2CE version " + std::to_string(version) + " at offset 4");
  }
  hidden_ = r.u32("hidden size");
  count_ = r.u64("sentence count");
  pos_ = r.offset();
  if (hidden_ == 0) throw FormatError("W2CE hidden size 0 at offset 8");
  if (expected_hidden && *expected_hidden != hidden_) {
    throw ConfigMismatchError("W2CE hidden size " + std::to_string(hidden_) + " != configured h " +
                              std::to_string(*expected_hidden));
  }
}

std::optional<FeatureBatch> FeatureReader::next() {
  if (read_ == count_) {
    if (pos_ != bytes_.size()) {
      throw FormatError("trailing bytes after last W2CE record at offset " + std::to_string(pos_));
    }
    return std::nullopt;
  }
  ByteReader r(std::string_view(bytes_).substr(pos_));
  const std::size_t base = pos_;
  FeatureBatch batch;
  try {
    batch.sentence_id = r.u64("sentence id");
    const auto d = r.u32("token count");
    if (d == 0) throw FormatError("zero-length record");
    if (static_cast<std::uint64_t>(d) * hidden_ * 4 > r.remaining()) {
      throw FormatError("record needs " + std::to_string(static_cast<std::uint64_t>(d) * hidden_ * 4) +
                        " bytes, " + std::to_string(r.remaining()) + " remain");
    }
    batch.features = Matrix(d, hidden_);
    for (double& v : batch.features.data()) {
      v = r.f32("features");
      if (!std::isfinite(v)) throw FormatError("non-finite feature value");
    }
  } catch (const FormatError& e) {
    throw FormatError("W2CE record " + std::to_string(read_) + " at offset " + std::to_string(base) + ": " +
                      e.what());
  }
  pos_ = base + r.offset();
  ++read_;
  return batch;
}

std::vector<FeatureBatch> read_features(const std::filesystem::path& path, std::optional<std::size_t> expected_hidden) {
  FeatureReader reader(read_file(path), expected_hidden);
  std::vector<FeatureBatch> out;
  while (auto b = reader.next()) out.push_back(std::move(*b));
  return out;
}

Matrix ToyFeatureSource::features(std::size_t, const Sentence& sentence) const {
  return encoder_->encode(sentence.ids);
}

FileFeatureSource::FileFeatureSource(std::size_t hidden, std::vector<FeatureBatch> batches)
    : hidden_(hidden), batches_(std::move(batches)) {
  for (const auto& b : batches_) {
    if (b.features.cols() != hidden_) throw ConfigMismatchError("feature batch width != h");
  }
}

Matrix FileFeatureSource::features(std::size_t index, const Sentence& sentence) const {
  if (index >= batches_.size()) {
    throw ConfigMismatchError("feature file has " + std::to_string(batches_.size()) + " records, sentence " +
                              std::to_string(index) + " requested");
  }
  const Matrix& f = batches_[index].features;
  if (f.rows() != sentence.ids.size()) {
    throw ConfigMismatchError("feature record " + std::to_string(index) + " has " + std::to_string(f.rows()) +
                              " tokens, sentence has " + std::to_string(sentence.ids.size()));
  }
  return f;
}

}  // namespace w2c
