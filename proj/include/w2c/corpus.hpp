#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace w2c {

enum class TokenizeMode {
  kCjkChars,    // CJK codepoints split per character, other runs on whitespace
  kWhitespace,  // whitespace only
};

std::vector<std::string> tokenize(std::string_view text, TokenizeMode mode = TokenizeMode::kCjkChars);

/// Bijective token <-> id map. Ids 0 and 1 are reserved for PAD and UNK.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocab();
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  /// UNK for unknown tokens.
  std::size_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::string serialize() const;
  static Vocab deserialize(std::string_view text);

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Frequency-ordered vocabulary (desc, ties by first occurrence). Tokens below
/// `min_count` are left out and map to UNK. Throws on an empty corpus.
Vocab build_vocab(std::span<const std::string> corpus, std::size_t min_count,
                  TokenizeMode mode = TokenizeMode::kCjkChars);

struct Sentence {
  std::vector<std::size_t> ids;
  std::string text;
};

Sentence encode(const Vocab& vocab, std::string_view text, TokenizeMode mode = TokenizeMode::kCjkChars);

enum class Task { kSentiment, kCorrection };

Task parse_task(std::string_view name);
const char* task_name(Task task);

struct LabeledExample {
  Sentence sentence;
  /// Class id, sentiment task.
  std::size_t label = 0;
  /// Per-token target ids, correction task; same length as sentence.ids.
  std::vector<std::size_t> target;
};

/// One sentence per non-empty line.
std::vector<std::string> read_corpus_lines(const std::filesystem::path& path);

/// Sentiment lines are `<label>\t<text>` with label in {0,1}; correction lines
/// are `<source>\t<target>` with equal token counts. Blank lines are skipped.
std::vector<LabeledExample> load_labeled_dataset(const std::filesystem::path& path, Task task,
                                                 const Vocab& vocab,
                                                 TokenizeMode mode = TokenizeMode::kCjkChars);
std::vector<LabeledExample> parse_labeled_dataset(std::string_view contents, Task task, const Vocab& vocab,
                                                  TokenizeMode mode = TokenizeMode::kCjkChars);

}  // namespace w2c
