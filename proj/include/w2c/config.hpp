#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "w2c/checkpoint.hpp"
#include "w2c/corpus.hpp"
#include "w2c/error.hpp"

namespace w2c {

/// Every knob of a pipeline run. JSON keys match the long CLI flag names;
/// artifact paths live in the same flat object (see README).
inline constexpr std::size_t kSentimentContexts = 800;
inline constexpr std::size_t kCorrectionContexts = 1000;
inline constexpr std::size_t kSentimentDownstreamEpochs = 3;
inline constexpr std::size_t kCorrectionDownstreamEpochs = 10;

struct RunConfig {
  std::size_t n = 50;
  /// Defaults to kSentimentContexts or kCorrectionContexts when unset.
  std::size_t k = kSentimentContexts;
  std::size_t hidden = 16;
  double sr = 0.95;
  std::uint64_t seed = 42;
  std::size_t min_count = 1;
  std::string tokenizer = "cjk";
  std::string encoder = "toy";
  std::string task = "sentiment";

  std::size_t encoder_epochs = 3;
  double encoder_lr = 1e-2;
  std::size_t mapper_epochs = 3;
  double mapper_lr = 5e-3;
  std::size_t downstream_epochs = kSentimentDownstreamEpochs;
  double downstream_lr = 1e-5;

  std::size_t max_iter = 100;
  std::size_t sample_cap = 200000;

  /// Artifact paths keyed by role ("corpus", "akn", "mapper", ...).
  json paths = json::object();

  static RunConfig defaults() { return RunConfig{}; }
  /// Missing keys take their defaults. Throws ConfigError when a value is out of range.
  static RunConfig from_json(const json& j);
  json to_json() const;

  std::optional<std::filesystem::path> path(const std::string& role) const;
  TokenizeMode tokenize_mode() const;
  Task task_kind() const { return parse_task(task); }
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace w2c
