#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "w2c/tensor.hpp"

namespace w2c {

inline constexpr double kDefaultShrinkRate = 0.95;

/// Associative knowledge network: symmetric, nonnegative co-occurrence scores
/// over a vocabulary. Each processed sentence first decays every score by the
/// shrink rate, then adds 1/|p - q| for every pair of positions p != q.
///
/// Scores are stored once per unordered pair (upper triangle) as raw values
/// times a shared scale factor, so the per-sentence decay is O(1).
class AssocNetwork {
 public:
  struct Triple {
    std::uint32_t i;
    std::uint32_t j;
    double score;
    friend bool operator==(const Triple&, const Triple&) = default;
  };

  explicit AssocNetwork(std::size_t vocab_size, double shrink_rate = kDefaultShrinkRate);

  /// Throws ShapeError on an id >= vocab_size; the network is left untouched.
  void update(std::span<const std::size_t> ids);

  double score(std::size_t i, std::size_t j) const;
  std::size_t vocab_size() const { return vocab_size_; }
  double shrink_rate() const { return shrink_rate_; }
  std::size_t entry_count() const { return raw_.size(); }
  std::uint64_t sentences_seen() const { return sentences_; }

  /// Nonzero entries with i <= j, sorted by (i, j).
  std::vector<Triple> triples() const;
  static AssocNetwork from_triples(std::size_t vocab_size, double shrink_rate, std::span<const Triple> triples);

  friend bool operator==(const AssocNetwork& a, const AssocNetwork& b);

 private:
  static std::uint64_t key(std::size_t i, std::size_t j);
  void renormalize();

  std::size_t vocab_size_;
  double shrink_rate_;
  double scale_ = 1.0;
  std::uint64_t sentences_ = 0;
  std::unordered_map<std::uint64_t, double> raw_;
};

/// Per-sentence associative matrix, d x d, entries in (-0.5, 0.5):
///   M(i,j) = sigmoid(A(s_i, s_j) / mean_k A(s_i, s_k)) - 0.5
/// A row whose mean is zero is all zeros.
Matrix sample_assoc_matrix(const AssocNetwork& net, std::span<const std::size_t> ids);

/// Binary layout, little-endian:
///   "W2CA" | version u32 | v u32 | SR f64 | count u64 | count x (i u32, j u32, score f64)
inline constexpr std::uint32_t kAknVersion = 1;

std::string serialize_akn(const AssocNetwork& net);
AssocNetwork parse_akn(std::string_view bytes);
void save_akn(const AssocNetwork& net, const std::filesystem::path& path);
AssocNetwork load_akn(const std::filesystem::path& path);

}  // namespace w2c
