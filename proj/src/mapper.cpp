#include "w2c/mapper.hpp"

#include <cmath>
#include <numeric>

#include "w2c/binio.hpp"
#include "w2c/error.hpp"
#include "w2c/optim.hpp"
#include "w2c/random.hpp"

namespace w2c {

ConvResidualBlock::ConvResidualBlock(ConvBlockConfig config, bool tanh_output, std::uint64_t seed)
    : config_(std::move(config)), tanh_output_(tanh_output) {
  if (config_.in == 0 || config_.out == 0) throw ShapeError("ConvResidualBlock: zero width");
  if (config_.widths.empty()) throw ShapeError("ConvResidualBlock: no filter widths");
  if (config_.channels == 0) config_.channels = config_.out;
  Rng rng(seed);
  const std::size_t m = config_.channels;
  for (std::size_t w : config_.widths) {
    if (w % 2 == 0) throw ShapeError("ConvResidualBlock: filter widths must be odd");
    const std::string name = "conv" + std::to_string(w);
    params_.add(name + ".w", fan_in_uniform(w * config_.in, m, w * config_.in, rng));
    params_.add(name + ".b", Matrix(1, m));
  }
  params_.add("proj.w", fan_in_uniform(m, config_.out, m, rng));
  params_.add("proj.b", Matrix(1, config_.out));
  params_.add("res.w", fan_in_uniform(config_.in, config_.out, config_.in, rng));
  params_.add("res.b", Matrix(1, config_.out));
  params_.add("ln.gain", Matrix(1, config_.out, 1.0));
  params_.add("ln.bias", Matrix(1, config_.out));
  params_.snap_to_float();
}

Var ConvResidualBlock::build(Tape& tape, Var x, const std::vector<Var>& p) const {
  (void)tape;
  if (x.cols() != config_.in) {
    throw ShapeError("network expects " + std::to_string(config_.in) + " input columns, got " +
                     std::to_string(x.cols()));
  }
  std::size_t k = 0;
  Var banks;
  for (std::size_t w : config_.widths) {
    Var y = add_row(conv1d_same(x, p[k], w), p[k + 1]);
    banks = k == 0 ? y : add(banks, y);
    k += 2;
  }
  Var proj = add_row(matmul(banks, p[k]), p[k + 1]);
  Var res = add_row(matmul(x, p[k + 2]), p[k + 3]);
  Var normed = layer_norm(add(proj, res), p[k + 4], p[k + 5]);
  return tanh_output_ ? tanh(normed) : normed;
}

Var ConvResidualBlock::forward(Tape& tape, Var x) { return build(tape, x, bind_params(tape, params_)); }

Matrix ConvResidualBlock::apply(const Matrix& x) const {
  Tape tape;
  auto p = freeze_params(tape, params_);
  return build(tape, tape.constant(x), p).value();
}

MapperNet::MapperNet(std::size_t hidden, std::size_t coords, std::uint64_t seed, std::vector<std::size_t> widths,
                     std::size_t channels)
    : ConvResidualBlock({hidden, coords, std::move(widths), channels}, true, seed) {}

ReconNet::ReconNet(std::size_t coords, std::size_t hidden, std::uint64_t seed, std::vector<std::size_t> widths,
                   std::size_t channels)
    : ConvResidualBlock({coords, hidden, std::move(widths), channels}, false, seed) {}

Matrix map_forward(const MapperNet& net, const Matrix& fb) { return net.apply(fb); }

Matrix alignment_indicator(const Matrix& elements, const Matrix& assoc) {
  const std::size_t d = elements.rows();
  if (assoc.rows() != d || assoc.cols() != d) {
    throw ShapeError("alignment_indicator: associative matrix is " + std::to_string(assoc.rows()) + "x" +
                     std::to_string(assoc.cols()) + ", sentence has " + std::to_string(d) + " elements");
  }
  Matrix out(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = cosine_similarity(elements.row(i), elements.row(j)) - assoc(i, j);
      out(i, j) = diff * diff;
    }
  }
  return out;
}

MapperLossVars mapper_loss(Var elements, const Matrix& assoc, Var recon, Var fb) {
  Tape& tape = *elements.tape();
  if (assoc.rows() != elements.rows() || assoc.cols() != elements.rows()) {
    throw ShapeError("mapper_loss: associative matrix does not match sentence length");
  }
  Var align = mse(cosine_matrix(elements, elements), tape.constant(assoc));
  Var rec = mae(recon, fb);
  return {add(align, rec), align, rec};
}

MapperLossValues mapper_loss(const Matrix& elements, const Matrix& assoc, const Matrix& recon, const Matrix& fb) {
  Tape tape;
  auto v = mapper_loss(tape.constant(elements), assoc, tape.constant(recon), tape.constant(fb));
  return {v.total.scalar(), v.alignment.scalar(), v.reconstruction.scalar()};
}

std::vector<MapperEpoch> train_mapper(MapperNet& net, ReconNet& recon, std::span<const Sentence> sentences,
                                      std::span<const FeatureBatch> features, const AssocNetwork& akn,
                                      const MapperTrainConfig& config) {
  if (sentences.size() != features.size()) throw ShapeError("train_mapper: sentence/feature count mismatch");
  if (features.empty()) throw Error("train_mapper: no features");
  if (recon.in() != net.coords() || recon.out() != net.hidden()) {
    throw ConfigMismatchError("train_mapper: reconstruction network shape does not mirror the mapper");
  }
  std::vector<MapperEpoch> trace;
  if (config.epochs == 0) return trace;

  // Associative matrices depend only on the frozen AKN
  std::vector<Matrix> assoc;
  assoc.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (features[i].features.rows() != sentences[i].ids.size()) {
      throw ShapeError("train_mapper: sentence " + std::to_string(features[i].sentence_id) +
                       " feature rows != token count");
    }
    assoc.push_back(sample_assoc_matrix(akn, sentences[i].ids));
  }

  Adam map_opt(net.params(), {.lr = config.lr});
  Adam rec_opt(recon.params(), {.lr = config.lr});
  Rng rng(config.seed);
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    MapperEpoch sum;
    for (std::size_t idx : order) {
      Tape tape;
      Var fb = tape.constant(features[idx].features);
      Var c = net.forward(tape, fb);
      Var r = recon.forward(tape, c);
      auto loss = mapper_loss(c, assoc[idx], r, fb);
      if (!std::isfinite(loss.total.scalar())) {
        throw NonFiniteError("train_mapper: non-finite loss at sentence " + std::to_string(features[idx].sentence_id));
      }
      sum.total += loss.total.scalar();
      sum.alignment += loss.alignment.scalar();
      sum.reconstruction += loss.reconstruction.scalar();
      tape.backward(loss.total);
      map_opt.step();
      rec_opt.step();
    }
    const double n = static_cast<double>(order.size());
    trace.push_back({sum.total / n, sum.alignment / n, sum.reconstruction / n});
  }
  net.params().snap_to_float();
  recon.params().snap_to_float();
  return trace;
}

// ---------------------------------------------------------------------------
// Checkpoint

std::string serialize_mapper(const MapperBundle& bundle) {
  const auto& cfg = bundle.mapper.config();
  json header = {
      {"kind", "w2c-mapper"},
      {"h", cfg.in},
      {"n", cfg.out},
      {"widths", cfg.widths},
      {"channels", cfg.channels},
      {"recon_channels", bundle.recon.config().channels},
      {"seed", bundle.seed},
      {"mapper_layout", describe_params(bundle.mapper.params())},
      {"recon_layout", describe_params(bundle.recon.params())},
      {"provenance", bundle.provenance},
  };
  std::vector<float> blob;
  append_params(blob, bundle.mapper.params());
  append_params(blob, bundle.recon.params());
  if (bundle.encoder) {
    header["encoder"] = {{"kind", "toy"},
                         {"vocab_size", bundle.encoder->vocab_size()},
                         {"hidden", bundle.encoder->hidden()},
                         {"seed", bundle.encoder->seed()},
                         {"layout", describe_params(bundle.encoder->params())}};
    append_params(blob, bundle.encoder->params());
  } else {
    header["encoder"] = {{"kind", "file"}, {"hidden", cfg.in}};
  }
  return encode_json_blob("W2CM", header, blob);
}

MapperBundle parse_mapper(std::string_view bytes) {
  JsonBlob file = decode_json_blob("W2CM", bytes);
  const json& h = file.header;
  try {
    const auto hidden = h.at("h").get<std::size_t>();
    const auto n = h.at("n").get<std::size_t>();
    const auto widths = h.at("widths").get<std::vector<std::size_t>>();
    const auto channels = h.at("channels").get<std::size_t>();
    const auto seed = h.at("seed").get<std::uint64_t>();
    MapperBundle bundle{MapperNet(hidden, n, 0, widths, channels),
                        ReconNet(n, hidden, 0, widths, h.at("recon_channels").get<std::size_t>()),
                        std::nullopt, seed, h.value("provenance", json::object())};
    std::size_t offset = 0;
    read_params(bundle.mapper.params(), h.at("mapper_layout"), file.blob, offset);
    read_params(bundle.recon.params(), h.at("recon_layout"), file.blob, offset);
    const json& enc = h.at("encoder");
    if (enc.at("kind") == "toy") {
      bundle.encoder.emplace(enc.at("vocab_size").get<std::size_t>(), enc.at("hidden").get<std::size_t>(),
                             enc.at("seed").get<std::uint64_t>());
      read_params(bundle.encoder->params(), enc.at("layout"), file.blob, offset);
    }
    if (offset != file.blob.size()) throw FormatError("mapper checkpoint has trailing parameters");
    return bundle;
  } catch (const json::exception& e) {
    throw FormatError(std::string("mapper checkpoint header: ") + e.what());
  }
}

void save_mapper(const MapperBundle& bundle, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_mapper(bundle));
}

MapperBundle load_mapper(const std::filesystem::path& path) { return parse_mapper(read_file(path)); }

}  // namespace w2c
