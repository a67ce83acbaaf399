#include "w2c/config.hpp"

namespace w2c {

namespace {

const char* const kScalarKeys[] = {"n",          "k",          "hidden",         "sr",
                                   "seed",       "min-count",  "tokenizer",      "encoder",
                                   "task",       "encoder-epochs", "encoder-lr", "mapper-epochs",
                                   "mapper-lr",  "downstream-epochs", "downstream-lr", "max-iter",
                                   "sample-cap"};

bool is_scalar_key(const std::string& key) {
  for (const char* k : kScalarKeys) {
    if (key == k) return true;
  }
  return false;
}

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config value \"") + key + "\" has the wrong type");
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  take(j, "n", c.n);
  take(j, "k", c.k);
  take(j, "hidden", c.hidden);
  take(j, "sr", c.sr);
  take(j, "seed", c.seed);
  take(j, "min-count", c.min_count);
  take(j, "tokenizer", c.tokenizer);
  take(j, "encoder", c.encoder);
  take(j, "task", c.task);
  take(j, "encoder-epochs", c.encoder_epochs);
  take(j, "encoder-lr", c.encoder_lr);
  take(j, "mapper-epochs", c.mapper_epochs);
  take(j, "mapper-lr", c.mapper_lr);
  if (!j.contains("downstream-epochs")) {
    c.downstream_epochs = c.task == "correction" ? kCorrectionDownstreamEpochs : kSentimentDownstreamEpochs;
  }
  take(j, "downstream-epochs", c.downstream_epochs);
  take(j, "downstream-lr", c.downstream_lr);
  if (!j.contains("k")) c.k = c.task == "correction" ? kCorrectionContexts : kSentimentContexts;
  take(j, "max-iter", c.max_iter);
  take(j, "sample-cap", c.sample_cap);
  for (const auto& [key, value] : j.items()) {
    if (is_scalar_key(key)) continue;
    if (!value.is_string()) throw ConfigError("config path \"" + key + "\" must be a string");
    c.paths[key] = value;
  }

  if (c.n < 2) throw ConfigError("n must be >= 2");
  if (c.k < 2) throw ConfigError("k must be >= 2");
  if (c.hidden == 0) throw ConfigError("hidden must be positive");
  if (!(c.sr > 0.0 && c.sr <= 1.0)) throw ConfigError("sr must lie in (0, 1]");
  if (c.encoder != "toy" && c.encoder != "file") throw ConfigError("encoder must be \"toy\" or \"file\"");
  if (c.tokenizer != "cjk" && c.tokenizer != "whitespace") {
    throw ConfigError("tokenizer must be \"cjk\" or \"whitespace\"");
  }
  if (c.task != "sentiment" && c.task != "correction") {
    throw ConfigError("task must be \"sentiment\" or \"correction\"");
  }
  if (c.encoder_lr < 0 || c.mapper_lr < 0 || c.downstream_lr < 0) throw ConfigError("learning rates must be >= 0");
  return c;
}

json RunConfig::to_json() const {
  json j = paths;
  j["n"] = n;
  j["k"] = k;
  j["hidden"] = hidden;
  j["sr"] = sr;
  j["seed"] = seed;
  j["min-count"] = min_count;
  j["tokenizer"] = tokenizer;
  j["encoder"] = encoder;
  j["task"] = task;
  j["encoder-epochs"] = encoder_epochs;
  j["encoder-lr"] = encoder_lr;
  j["mapper-epochs"] = mapper_epochs;
  j["mapper-lr"] = mapper_lr;
  j["downstream-epochs"] = downstream_epochs;
  j["downstream-lr"] = downstream_lr;
  j["max-iter"] = max_iter;
  j["sample-cap"] = sample_cap;
  return j;
}

std::optional<std::filesystem::path> RunConfig::path(const std::string& role) const {
  if (!paths.contains(role)) return std::nullopt;
  return std::filesystem::path(paths.at(role).get<std::string>());
}

TokenizeMode RunConfig::tokenize_mode() const {
  return tokenizer == "whitespace" ? TokenizeMode::kWhitespace : TokenizeMode::kCjkChars;
}

}  // namespace w2c
