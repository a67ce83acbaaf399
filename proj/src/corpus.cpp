#include "w2c/corpus.hpp"

#include <algorithm>
#include <map>

#include "w2c/binio.hpp"
#include "w2c/error.hpp"

namespace w2c {

namespace {

struct Codepoint {
  char32_t value;
  std::size_t length;  // bytes consumed
};

// Malformed sequences decode as a single byte so tokenize stays total.
Codepoint decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
    }
  }
  return {b0, 1};
}

bool is_cjk(char32_t c) {
  return (c >= 0x4E00 && c <= 0x9FFF) ||    // unified ideographs
         (c >= 0x3400 && c <= 0x4DBF) ||    // extension A
         (c >= 0x20000 && c <= 0x2EBEF) ||  // extensions B-F
         (c >= 0xF900 && c <= 0xFAFF) ||    // compatibility ideographs
         (c >= 0x2F800 && c <= 0x2FA1F) ||  // compatibility supplement
         (c >= 0x3001 && c <= 0x303F) ||    // CJK punctuation
         (c >= 0xFF01 && c <= 0xFFEF);      // fullwidth forms
}

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == 0x3000;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, TokenizeMode mode) {
  std::vector<std::string> out;
  std::string run;
  auto flush = [&] {
    if (!run.empty()) out.push_back(std::move(run));
    run.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const Codepoint cp = decode_utf8(text, i);
    const std::string_view bytes = text.substr(i, cp.length);
    i += cp.length;
    if (is_space(cp.value)) {
      flush();
    } else if (mode == TokenizeMode::kCjkChars && is_cjk(cp.value)) {
      flush();
      out.emplace_back(bytes);
    } else {
      run.append(bytes);
    }
  }
  flush();
  return out;
}

Vocab::Vocab() : Vocab(std::vector<std::string>{kPadToken, kUnkToken}) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[kPad] != kPadToken || tokens_[kUnk] != kUnkToken) {
    throw FormatError("vocabulary must start with <pad> and <unk>");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) throw FormatError("duplicate vocabulary token: " + tokens_[i]);
  }
}

std::size_t Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

const std::string& Vocab::token(std::size_t id) const {
  if (id >= tokens_.size()) throw ShapeError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::string Vocab::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocab Vocab::deserialize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    const auto stop = end == std::string_view::npos ? text.size() : end;
    tokens.emplace_back(text.substr(start, stop - start));
    start = stop + 1;
  }
  return Vocab(std::move(tokens));
}

Vocab build_vocab(std::span<const std::string> corpus, std::size_t min_count, TokenizeMode mode) {
  if (corpus.empty()) throw Error("build_vocab: empty corpus");
  struct Stat {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Stat> stats;
  std::size_t position = 0;
  for (const auto& line : corpus) {
    for (auto& tok : tokenize(line, mode)) {
      auto [it, inserted] = stats.try_emplace(std::move(tok));
      if (inserted) it->second.first = position;
      ++it->second.count;
      ++position;
    }
  }
  std::vector<std::pair<std::string, Stat>> ordered(stats.begin(), stats.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first < b.second.first;
  });
  std::vector<std::string> tokens{Vocab::kPadToken, Vocab::kUnkToken};
  for (auto& [tok, st] : ordered) {
    if (st.count < min_count) continue;
    if (tok == Vocab::kPadToken || tok == Vocab::kUnkToken) continue;
    tokens.push_back(tok);
  }
  return Vocab(std::move(tokens));
}

Sentence encode(const Vocab& vocab, std::string_view text, TokenizeMode mode) {
  Sentence s;
  s.text = std::string(text);
  for (const auto& tok : tokenize(text, mode)) s.ids.push_back(vocab.id(tok));
  return s;
}

Task parse_task(std::string_view name) {
  if (name == "sentiment") return Task::kSentiment;
  if (name == "correction") return Task::kCorrection;
  throw Error("unknown task: " + std::string(name));
}

const char* task_name(Task task) { return task == Task::kSentiment ? "sentiment" : "correction"; }

namespace {

std::vector<std::string_view> split_lines(std::string_view contents) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= contents.size()) {
    const auto end = contents.find('\n', start);
    auto line = contents.substr(start, (end == std::string_view::npos ? contents.size() : end) - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return lines;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

std::vector<std::string> read_corpus_lines(const std::filesystem::path& path) {
  const std::string contents = read_file(path);
  std::vector<std::string> out;
  for (auto line : split_lines(contents)) {
    if (!blank(line)) out.emplace_back(line);
  }
  return out;
}

std::vector<LabeledExample> parse_labeled_dataset(std::string_view contents, Task task, const Vocab& vocab,
                                                  TokenizeMode mode) {
  std::vector<LabeledExample> out;
  const auto lines = split_lines(contents);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = lines[n];
    if (blank(line)) continue;
    const std::string where = "line " + std::to_string(n + 1);
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw FormatError(where + ": expected a tab-separated pair");
    const auto left = line.substr(0, tab);
    const auto right = line.substr(tab + 1);
    LabeledExample ex;
    if (task == Task::kSentiment) {
      if (left == "0") {
        ex.label = 0;
      } else if (left == "1") {
        ex.label = 1;
      } else {
        throw FormatError(where + ": unknown label \"" + std::string(left) + "\"");
      }
      ex.sentence = encode(vocab, right, mode);
    } else {
      ex.sentence = encode(vocab, left, mode);
      const Sentence target = encode(vocab, right, mode);
      if (target.ids.size() != ex.sentence.ids.size()) {
        throw FormatError(where + ": source has " + std::to_string(ex.sentence.ids.size()) +
                          " tokens but target has " + std::to_string(target.ids.size()));
      }
      ex.target = target.ids;
    }
    if (ex.sentence.ids.empty()) throw FormatError(where + ": empty sentence");
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<LabeledExample> load_labeled_dataset(const std::filesystem::path& path, Task task,
                                                 const Vocab& vocab, TokenizeMode mode) {
  return parse_labeled_dataset(read_file(path), task, vocab, mode);
}

}  // namespace w2c
