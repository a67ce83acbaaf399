#include "w2c/checkpoint.hpp"

#include "w2c/binio.hpp"
#include "w2c/error.hpp"

namespace w2c {

std::string encode_json_blob(std::string_view magic, const json& header, std::span<const float> blob) {
  ByteWriter w;
  w.bytes(magic);
  w.u32(kJsonBlobVersion);
  const std::string text = header.dump();
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  w.u64(blob.size());
  for (float v : blob) w.f32(v);
  return w.take();
}

JsonBlob decode_json_blob(std::string_view magic, std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(4, "magic") != magic) {
    throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
  }
  const auto version = r.u32("version");
  if (version != kJsonBlobVersion) {
    throw FormatError("unsupported version " + std::to_string(version) + " at offset 4");
  }
  const auto len = r.u32("header length");
  const std::size_t header_at = r.offset();
  JsonBlob out;
  try {
    out.header = json::parse(r.bytes(len, "header"));
  } catch (const json::parse_error& e) {
    throw FormatError("malformed JSON header at offset " + std::to_string(header_at) + ": " + e.what());
  }
  const auto count = r.u64("blob length");
  if (r.remaining() != count * 4) {
    throw FormatError("blob length " + std::to_string(count) + " floats disagrees with " +
                      std::to_string(r.remaining()) + " remaining bytes at offset " +
                      std::to_string(r.offset()));
  }
  out.blob.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) out.blob.push_back(r.f32("blob"));
  return out;
}

json describe_params(const ParamStore& params) {
  json layout = json::array();
  for (const auto& p : params) {
    layout.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  return layout;
}

void append_matrix(std::vector<float>& blob, const Matrix& m) {
  for (double v : m.data()) blob.push_back(static_cast<float>(v));
}

void append_params(std::vector<float>& blob, const ParamStore& params) {
  for (const auto& p : params) append_matrix(blob, p.value);
}

Matrix read_matrix(std::size_t rows, std::size_t cols, std::span<const float> blob, std::size_t& offset) {
  if (blob.size() - offset < rows * cols) throw FormatError("parameter blob too short");
  Matrix m(rows, cols);
  for (double& v : m.data()) v = blob[offset++];
  return m;
}

void read_params(ParamStore& params, const json& layout, std::span<const float> blob, std::size_t& offset) {
  if (!layout.is_array() || layout.size() != params.size()) {
    throw FormatError("parameter layout does not match the network definition");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.at(i);
    const auto& entry = layout[i];
    const auto rows = entry.at("rows").get<std::size_t>();
    const auto cols = entry.at("cols").get<std::size_t>();
    if (entry.at("name").get<std::string>() != p.name || rows != p.value.rows() || cols != p.value.cols()) {
      throw ConfigMismatchError("parameter " + p.name + " shape/name mismatch in checkpoint");
    }
    p.value = read_matrix(rows, cols, blob, offset);
    p.grad = Matrix(rows, cols);
  }
}

}  // namespace w2c
