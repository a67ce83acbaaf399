#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "w2c/autodiff.hpp"

namespace w2c {

using json = nlohmann::json;

/// Container shared by the mapper, context-space and head checkpoints:
///   magic[4] | version u32 | header length u32 | JSON header | f32 blob
/// All integers and floats little-endian.
struct JsonBlob {
  json header;
  std::vector<float> blob;
};

inline constexpr std::uint32_t kJsonBlobVersion = 1;

std::string encode_json_blob(std::string_view magic, const json& header, std::span<const float> blob);
JsonBlob decode_json_blob(std::string_view magic, std::string_view bytes);

/// [{"name", "rows", "cols"}...] in store order.
json describe_params(const ParamStore& params);
void append_params(std::vector<float>& blob, const ParamStore& params);
void append_matrix(std::vector<float>& blob, const Matrix& m);

/// Reads parameters in `layout` order from `blob` starting at `offset` into
/// a store that already declares them with matching shapes.
void read_params(ParamStore& params, const json& layout, std::span<const float> blob, std::size_t& offset);
Matrix read_matrix(std::size_t rows, std::size_t cols, std::span<const float> blob, std::size_t& offset);

}  // namespace w2c
