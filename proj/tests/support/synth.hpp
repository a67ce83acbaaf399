#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace w2c::test {

struct SynthExample {
  std::size_t label = 0;
  std::string text;
};

/// Two class-conditioned token distributions: every token is drawn from the
/// class's own pool with probability `signal`, otherwise from a shared pool.
std::vector<SynthExample> sentiment_corpus(std::size_t count, std::uint64_t seed, double signal = 0.5);

/// Sentences that use tokens of exactly one of two disjoint communities.
/// Community 0 tokens are "a0".."a9", community 1 tokens "b0".."b9".
std::vector<SynthExample> community_corpus(std::size_t count, std::uint64_t seed);

std::string as_corpus(const std::vector<SynthExample>& data);
std::string as_labeled(const std::vector<SynthExample>& data);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace w2c::test
