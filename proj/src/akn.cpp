#include "w2c/akn.hpp"

#include <algorithm>
#include <cmath>

#include "w2c/binio.hpp"
#include "w2c/error.hpp"

namespace w2c {

namespace {
constexpr double kRenormalizeBelow = 1e-150;
}

AssocNetwork::AssocNetwork(std::size_t vocab_size, double shrink_rate)
    : vocab_size_(vocab_size), shrink_rate_(shrink_rate) {
  if (!(shrink_rate > 0.0 && shrink_rate <= 1.0)) {
    throw Error("shrink rate must lie in (0, 1], got " + std::to_string(shrink_rate));
  }
  if (vocab_size > 0xFFFFFFFFull) throw Error("vocabulary too large for the AKN format");
}

std::uint64_t AssocNetwork::key(std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

void AssocNetwork::renormalize() {
  for (auto& [k, v] : raw_) v *= scale_;
  scale_ = 1.0;
}

void AssocNetwork::update(std::span<const std::size_t> ids) {
  for (std::size_t id : ids) {
    if (id >= vocab_size_) {
      throw ShapeError("akn_update: token id " + std::to_string(id) + " >= vocabulary size " +
                       std::to_string(vocab_size_));
    }
  }
  ++sentences_;
  scale_ *= shrink_rate_;
  if (scale_ < kRenormalizeBelow) renormalize();
  const double inv_scale = 1.0 / scale_;
  for (std::size_t p = 0; p < ids.size(); ++p) {
    for (std::size_t q = p + 1; q < ids.size(); ++q) {
      raw_[key(ids[p], ids[q])] += inv_scale / static_cast<double>(q - p);
    }
  }
}

double AssocNetwork::score(std::size_t i, std::size_t j) const {
  auto it = raw_.find(key(i, j));
  return it == raw_.end() ? 0.0 : it->second * scale_;
}

std::vector<AssocNetwork::Triple> AssocNetwork::triples() const {
  std::vector<Triple> out;
  out.reserve(raw_.size());
  for (const auto& [k, v] : raw_) {
    out.push_back({static_cast<std::uint32_t>(k >> 32), static_cast<std::uint32_t>(k & 0xFFFFFFFFu), v * scale_});
  }
  std::sort(out.begin(), out.end(), [](const Triple& a, const Triple& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  return out;
}

AssocNetwork AssocNetwork::from_triples(std::size_t vocab_size, double shrink_rate, std::span<const Triple> triples) {
  AssocNetwork net(vocab_size, shrink_rate);
  for (const auto& t : triples) {
    if (t.i > t.j || t.j >= vocab_size) throw FormatError("AKN triple out of range");
    if (!(t.score >= 0.0) || !std::isfinite(t.score)) throw FormatError("AKN triple with invalid score");
    net.raw_[key(t.i, t.j)] = t.score;
  }
  return net;
}

bool operator==(const AssocNetwork& a, const AssocNetwork& b) {
  return a.vocab_size_ == b.vocab_size_ && a.shrink_rate_ == b.shrink_rate_ && a.triples() == b.triples();
}

Matrix sample_assoc_matrix(const AssocNetwork& net, std::span<const std::size_t> ids) {
  const std::size_t d = ids.size();
  Matrix scores(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    if (ids[i] >= net.vocab_size()) throw ShapeError("sample_assoc_matrix: token id out of range");
    for (std::size_t j = i; j < d; ++j) {
      const double s = net.score(ids[i], ids[j]);
      scores(i, j) = s;
      scores(j, i) = s;
    }
  }
  Matrix out(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    double avg = 0.0;
    for (double s : scores.row(i)) avg += s;
    avg /= static_cast<double>(d);
    if (avg == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) out(i, j) = sigmoid(scores(i, j) / avg) - 0.5;
  }
  return out;
}

std::string serialize_akn(const AssocNetwork& net) {
  const auto triples = net.triples();
  ByteWriter w;
  w.bytes("W2CA");
  w.u32(kAknVersion);
  w.u32(static_cast<std::uint32_t>(net.vocab_size()));
  w.f64(net.shrink_rate());
  w.u64(triples.size());
  for (const auto& t : triples) {
    w.u32(t.i);
    w.u32(t.j);
    w.f64(t.score);
  }
  return w.take();
}

AssocNetwork parse_akn(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(4, "magic") != "W2CA") throw FormatError("not an AKN file: bad magic");
  const auto version = r.u32("version");
  if (version != kAknVersion) throw FormatError("unsupported AKN version " + std::to_string(version));
  const auto v = r.u32("vocabulary size");
  const double sr = r.f64("shrink rate");
  if (!(sr > 0.0 && sr <= 1.0)) throw FormatError("AKN shrink rate out of range at offset 12");
  const auto count = r.u64("triple count");
  if (count > r.remaining() / 16 || r.remaining() != count * 16) {
    throw FormatError("AKN triple count " + std::to_string(count) + " disagrees with " +
                      std::to_string(r.remaining()) + " remaining bytes at offset " + std::to_string(r.offset()));
  }
  std::vector<AssocNetwork::Triple> triples;
  triples.reserve(count);
  for (std::uint64_t n = 0; n < count; ++n) {
    const std::size_t at = r.offset();
    AssocNetwork::Triple t{r.u32("i"), r.u32("j"), r.f64("score")};
    if (!triples.empty() && !(triples.back().i < t.i || (triples.back().i == t.i && triples.back().j < t.j))) {
      throw FormatError("AKN triples not strictly sorted at offset " + std::to_string(at));
    }
    if (t.i > t.j || t.j >= v || !(t.score >= 0.0) || !std::isfinite(t.score)) {
      throw FormatError("invalid AKN triple at offset " + std::to_string(at));
    }
    triples.push_back(t);
  }
  return AssocNetwork::from_triples(v, sr, triples);
}

void save_akn(const AssocNetwork& net, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_akn(net));
}

AssocNetwork load_akn(const std::filesystem::path& path) { return parse_akn(read_file(path)); }

}  // namespace w2c
