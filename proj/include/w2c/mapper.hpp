#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "w2c/akn.hpp"
#include "w2c/autodiff.hpp"
#include "w2c/checkpoint.hpp"
#include "w2c/corpus.hpp"
#include "w2c/encoder.hpp"

namespace w2c {

struct ConvBlockConfig {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<std::size_t> widths{1, 3, 5};
  /// Channels of each convolution bank before the projection to `out`.
  std::size_t channels = 0;
};

/// out = act(LN(proj(sum_w conv_w(x)) + res(x))). The mapping network uses
/// tanh, the reconstruction network is linear after the norm.
class ConvResidualBlock {
 public:
  ConvResidualBlock(ConvBlockConfig config, bool tanh_output, std::uint64_t seed);

  const ConvBlockConfig& config() const { return config_; }
  std::size_t in() const { return config_.in; }
  std::size_t out() const { return config_.out; }

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  Var forward(Tape& tape, Var x);
  Matrix apply(const Matrix& x) const;

 private:
  Var build(Tape& tape, Var x, const std::vector<Var>& p) const;

  ConvBlockConfig config_;
  bool tanh_output_;
  ParamStore params_;
};

/// Maps d x h encoder features to d x n word elements in (-1, 1).
class MapperNet : public ConvResidualBlock {
 public:
  MapperNet(std::size_t hidden, std::size_t coords, std::uint64_t seed,
            std::vector<std::size_t> widths = {1, 3, 5}, std::size_t channels = 0);
  std::size_t hidden() const { return in(); }
  std::size_t coords() const { return out(); }
};

/// Mirror of MapperNet, n -> h.
class ReconNet : public ConvResidualBlock {
 public:
  ReconNet(std::size_t coords, std::size_t hidden, std::uint64_t seed,
           std::vector<std::size_t> widths = {1, 3, 5}, std::size_t channels = 0);
};

/// Word elements C for one sentence. Throws ShapeError when fb.cols() != h.
Matrix map_forward(const MapperNet& net, const Matrix& fb);

/// (cos(c_i, c_j) - M_S(i,j))^2 for every position pair.
Matrix alignment_indicator(const Matrix& elements, const Matrix& assoc);

struct MapperLossValues {
  double total = 0.0;
  double alignment = 0.0;       // L_MS, mean over all d*d indicator entries
  double reconstruction = 0.0;  // L_Rec, mean |recon - fb|
};

MapperLossValues mapper_loss(const Matrix& elements, const Matrix& assoc, const Matrix& recon, const Matrix& fb);

struct MapperLossVars {
  Var total;
  Var alignment;
  Var reconstruction;
};

MapperLossVars mapper_loss(Var elements, const Matrix& assoc, Var recon, Var fb);

struct MapperTrainConfig {
  std::size_t epochs = 3;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct MapperEpoch {
  double total = 0.0;
  double alignment = 0.0;
  double reconstruction = 0.0;
};

/// Trains both networks on L_M = L_MS + L_Rec, one Adam step per sentence in
/// a seeded shuffled order. `features[i]` belongs to `sentences[i]`. Throws
/// NonFiniteError naming the sentence id. Parameters are rounded to f32 at the end.
std::vector<MapperEpoch> train_mapper(MapperNet& net, ReconNet& recon, std::span<const Sentence> sentences,
                                      std::span<const FeatureBatch> features, const AssocNetwork& akn,
                                      const MapperTrainConfig& config);

/// Mapper checkpoint: both networks plus the toy encoder they were trained on
/// (absent when features came from a W2CE file). Magic "W2CM".
struct MapperBundle {
  MapperNet mapper;
  ReconNet recon;
  std::optional<ToyEncoder> encoder;
  std::uint64_t seed = 0;
  json provenance = json::object();
};

std::string serialize_mapper(const MapperBundle& bundle);
MapperBundle parse_mapper(std::string_view bytes);
void save_mapper(const MapperBundle& bundle, const std::filesystem::path& path);
MapperBundle load_mapper(const std::filesystem::path& path);

}  // namespace w2c
