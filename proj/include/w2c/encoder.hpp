#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "w2c/autodiff.hpp"
#include "w2c/corpus.hpp"

namespace w2c {

/// Per-token hidden states of one sentence, d x h.
struct FeatureBatch {
  std::uint64_t sentence_id = 0;
  Matrix features;
};

/// Deterministic stand-in for a pre-trained contextual encoder:
///   F = tanh(E + conv3(E) + b),  E = embedding rows of the sentence.
class ToyEncoder {
 public:
  ToyEncoder(std::size_t vocab_size, std::size_t hidden, std::uint64_t seed);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t hidden() const { return hidden_; }
  std::uint64_t seed() const { return seed_; }

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Trainable forward pass; parameters are bound on `tape`.
  Var forward(Tape& tape, std::span<const std::size_t> ids);
  /// Frozen forward pass. Output is rounded to f32 so in-memory features and
  /// features read back from a W2CE file are interchangeable.
  Matrix encode(std::span<const std::size_t> ids) const;

 private:
  std::size_t vocab_size_;
  std::size_t hidden_;
  std::uint64_t seed_;
  ParamStore params_;
};

inline constexpr std::size_t kToyMixWidth = 3;

FeatureBatch toy_encode(const ToyEncoder& encoder, const Sentence& sentence, std::uint64_t sentence_id = 0);

struct FineTuneConfig {
  std::size_t epochs = 3;
  double lr = 1e-2;
  std::uint64_t seed = 0;
};

struct FineTuneReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;  // percent, after the last epoch
};

/// Trains the encoder together with a throwaway linear head on the downstream
/// task (mean-pooled for sentiment, per token over the vocabulary for
/// correction). Throws NonFiniteError on a NaN/inf loss.
FineTuneReport fine_tune_encoder(ToyEncoder& encoder, std::span<const LabeledExample> data, Task task,
                                 const FineTuneConfig& config);

// ---------------------------------------------------------------------------
// W2CE interchange file, little-endian:
//   "W2CE" | version u32 | h u32 | count u64 |
//   count x (id u64 | d u32 | d*h f32 row-major)

inline constexpr std::uint32_t kFeatureFileVersion = 1;

std::string serialize_features(std::size_t hidden, std::span<const FeatureBatch> batches);
void write_features(const std::filesystem::path& path, std::size_t hidden, std::span<const FeatureBatch> batches);

/// Sequential reader over an in-memory W2CE image. A batch is only returned
/// once it has been read completely.
class FeatureReader {
 public:
  /// `expected_hidden`, when given, must equal the header's h.
  explicit FeatureReader(std::string bytes, std::optional<std::size_t> expected_hidden = std::nullopt);

  std::size_t hidden() const { return hidden_; }
  std::uint64_t count() const { return count_; }
  std::optional<FeatureBatch> next();

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
  std::size_t hidden_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t read_ = 0;
};

/// All batches of a W2CE file, or an exception; never a partial list.
std::vector<FeatureBatch> read_features(const std::filesystem::path& path,
                                        std::optional<std::size_t> expected_hidden = std::nullopt);

/// Where per-token features come from. Downstream stages only see this.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::size_t hidden() const = 0;
  /// Features of the `index`-th sentence of the dataset being processed.
  virtual Matrix features(std::size_t index, const Sentence& sentence) const = 0;
};

class ToyFeatureSource final : public FeatureSource {
 public:
  explicit ToyFeatureSource(const ToyEncoder& encoder) : encoder_(&encoder) {}
  std::size_t hidden() const override { return encoder_->hidden(); }
  Matrix features(std::size_t index, const Sentence& sentence) const override;

 private:
  const ToyEncoder* encoder_;
};

/// Features read from a W2CE file; record i belongs to sentence i.
class FileFeatureSource final : public FeatureSource {
 public:
  FileFeatureSource(std::size_t hidden, std::vector<FeatureBatch> batches);
  std::size_t hidden() const override { return hidden_; }
  Matrix features(std::size_t index, const Sentence& sentence) const override;

 private:
  std::size_t hidden_;
  std::vector<FeatureBatch> batches_;
};

}  // namespace w2c
