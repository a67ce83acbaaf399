#include "w2c/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "w2c/akn.hpp"
#include "w2c/binio.hpp"
#include "w2c/config.hpp"
#include "w2c/contextspace.hpp"
#include "w2c/encoder.hpp"
#include "w2c/interp.hpp"
#include "w2c/lmhead.hpp"
#include "w2c/mapper.hpp"
#include "w2c/pipeline.hpp"
#include "w2c/random.hpp"

namespace w2c {

namespace {

namespace fs = std::filesystem;

class MissingInputError : public Error {
 public:
  using Error::Error;
};

struct Request {
  json overrides = json::object();
  std::map<std::string, std::string> paths;
  std::string config_file;
};

void add_common(CLI::App* cmd, Request& req) {
  cmd->add_option("--config", req.config_file, "JSON run config; flags override its values");
  auto num = [&](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<std::size_t>(flag, [&req, key](std::size_t v) { req.overrides[key] = v; }, help);
  };
  auto real = [&](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<double>(flag, [&req, key](double v) { req.overrides[key] = v; }, help);
  };
  auto text = [&](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<std::string>(flag, [&req, key](const std::string& v) { req.overrides[key] = v; },
                                          help);
  };
  num("--n", "n", "word element dimensions");
  num("--k", "k", "number of contexts");
  num("--hidden", "hidden", "toy encoder hidden size");
  real("--sr", "sr", "AKN shrink rate in (0, 1]");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&req](std::uint64_t v) { req.overrides["seed"] = v; }, "master seed");
  num("--min-count", "min-count", "minimum token count kept in the vocabulary");
  text("--tokenizer", "tokenizer", "cjk | whitespace");
  text("--encoder", "encoder", "toy | file");
  text("--task", "task", "sentiment | correction");
  num("--encoder-epochs", "encoder-epochs", "toy encoder fine-tuning epochs");
  real("--encoder-lr", "encoder-lr", "toy encoder fine-tuning learning rate");
  num("--mapper-epochs", "mapper-epochs", "mapper training epochs");
  real("--mapper-lr", "mapper-lr", "mapper learning rate");
  num("--downstream-epochs", "downstream-epochs", "merge matrix and head epochs");
  real("--downstream-lr", "downstream-lr", "merge matrix and head learning rate");
  num("--max-iter", "max-iter", "k-means iteration cap");
  num("--sample-cap", "sample-cap", "maximum word elements fed to k-means");
}

void add_path(CLI::App* cmd, Request& req, const std::string& flag, const std::string& role, const char* help) {
  cmd->add_option_function<std::string>(flag, [&req, role](const std::string& v) { req.paths[role] = v; }, help);
}

RunConfig resolve(const Request& req) {
  json merged = json::object();
  if (!req.config_file.empty()) {
    if (!fs::exists(req.config_file)) throw MissingInputError("config file not found: " + req.config_file);
    json file;
    try {
      file = json::parse(read_file(req.config_file));
    } catch (const json::exception& e) {
      throw ConfigError("config file " + req.config_file + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config file " + req.config_file + " must hold a JSON object");
    merged.merge_patch(file);
  }
  merged.merge_patch(req.overrides);
  for (const auto& [role, p] : req.paths) merged[role] = p;
  return RunConfig::from_json(merged);
}

/// Inputs are checked up front so no stage starts with an unresolved path.
class Context {
 public:
  Context(std::string command, RunConfig cfg) : command_(std::move(command)), cfg_(std::move(cfg)) {}

  const RunConfig& cfg() const { return cfg_; }

  fs::path input(const std::string& role) {
    auto p = cfg_.path(role);
    if (!p) throw MissingInputError(command_ + ": missing input --" + role);
    if (!fs::exists(*p)) throw MissingInputError(command_ + ": input " + role + " not found: " + p->string());
    inputs_[role] = fingerprint(read_file(*p));
    return *p;
  }

  std::optional<fs::path> optional_input(const std::string& role) {
    if (!cfg_.path(role)) return std::nullopt;
    return input(role);
  }

  fs::path output(const std::string& role, const std::string& flag) const {
    auto p = cfg_.path(role);
    if (!p) throw ConfigError(command_ + ": missing output flag " + flag);
    return *p;
  }

  json provenance() const {
    json inputs = json::object();
    for (const auto& [role, fp] : inputs_) inputs[role] = fp;
    return {{"command", command_}, {"config", cfg_.to_json()}, {"inputs", inputs}};
  }

  std::uint64_t seed(std::string_view stage) const { return derive_seed(cfg_.seed, stage); }

 private:
  std::string command_;
  RunConfig cfg_;
  std::map<std::string, std::string> inputs_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

Vocab load_vocab(const fs::path& path) { return Vocab::deserialize(read_file(path)); }

std::vector<Sentence> load_corpus(const fs::path& path, const Vocab& vocab, TokenizeMode mode) {
  std::vector<Sentence> out;
  for (const auto& line : read_corpus_lines(path)) out.push_back(encode(vocab, line, mode));
  return out;
}

struct Loaded {
  MapperBundle bundle;
  Vocab vocab;
};

Loaded load_mapper_and_vocab(Context& ctx) {
  Loaded l{load_mapper(ctx.input("mapper")), load_vocab(ctx.input("vocab"))};
  const auto& cfg = ctx.cfg();
  if (l.bundle.mapper.coords() != cfg.n) {
    throw ConfigMismatchError("mapper has n=" + std::to_string(l.bundle.mapper.coords()) +
                              " but the run config has n=" + std::to_string(cfg.n));
  }
  if (l.bundle.mapper.hidden() != cfg.hidden) {
    throw ConfigMismatchError("mapper has h=" + std::to_string(l.bundle.mapper.hidden()) +
                              " but the run config has hidden=" + std::to_string(cfg.hidden));
  }
  const bool toy = l.bundle.encoder.has_value();
  if (toy != (cfg.encoder == "toy")) {
    throw ConfigMismatchError(std::string("mapper was trained with the ") + (toy ? "toy" : "file") +
                              " encoder but the run config selects " + cfg.encoder);
  }
  if (toy && l.bundle.encoder->vocab_size() != l.vocab.size()) {
    throw ConfigMismatchError("toy encoder vocabulary size " + std::to_string(l.bundle.encoder->vocab_size()) +
                              " != vocabulary file size " + std::to_string(l.vocab.size()));
  }
  return l;
}

std::unique_ptr<FeatureSource> feature_source(Context& ctx, const MapperBundle& bundle,
                                              const std::string& features_role) {
  if (bundle.encoder) return std::make_unique<ToyFeatureSource>(*bundle.encoder);
  const auto h = bundle.mapper.hidden();
  return std::make_unique<FileFeatureSource>(h, read_features(ctx.input(features_role), h));
}

std::vector<Matrix> elements_of(const MapperNet& mapper, const FeatureSource& source,
                                std::span<const LabeledExample> data) {
  if (source.hidden() != mapper.hidden()) {
    throw ConfigMismatchError("feature hidden size " + std::to_string(source.hidden()) +
                              " != mapper input size " + std::to_string(mapper.hidden()));
  }
  std::vector<Matrix> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.push_back(map_forward(mapper, source.features(i, data[i].sentence)));
  }
  return out;
}

std::vector<LabeledExample> load_data(Context& ctx, const std::string& role, const Vocab& vocab) {
  const auto& cfg = ctx.cfg();
  return load_labeled_dataset(ctx.input(role), cfg.task_kind(), vocab, cfg.tokenize_mode());
}

std::vector<std::size_t> labels_of(std::span<const LabeledExample> data) {
  std::vector<std::size_t> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(ex.label);
  return out;
}

std::size_t head_outputs(Task task, const Vocab& vocab) { return task == Task::kSentiment ? 2 : vocab.size(); }

void check_head(const ContextSpace& space, const TaskHead& head, const RunConfig& cfg, const Vocab& vocab) {
  if (head.task() != cfg.task_kind()) {
    throw ConfigMismatchError(std::string("head was trained for ") + task_name(head.task()) +
                              " but the run config selects " + cfg.task);
  }
  if (head.contexts() != space.k()) {
    throw ConfigMismatchError("head expects k=" + std::to_string(head.contexts()) + " but the space has k=" +
                              std::to_string(space.k()));
  }
  if (head.outputs() != head_outputs(head.task(), vocab)) {
    throw ConfigMismatchError("head has " + std::to_string(head.outputs()) + " outputs, expected " +
                              std::to_string(head_outputs(head.task(), vocab)));
  }
}

ContextSpace load_checked_space(Context& ctx, const std::string& role, const MapperBundle& bundle) {
  ContextSpace space = load_space(ctx.input(role), bundle.mapper.coords());
  if (space.k() != ctx.cfg().k) {
    throw ConfigMismatchError("space has k=" + std::to_string(space.k()) + " but the run config has k=" +
                              std::to_string(ctx.cfg().k));
  }
  return space;
}

// ---------------------------------------------------------------------------

int cmd_build_akn(Context& ctx, std::ostream& out) {
  const auto& cfg = ctx.cfg();
  const auto corpus_path = ctx.input("corpus");
  const auto akn_path = ctx.output("akn", "--out");
  const auto vocab_path = cfg.path("vocab").value_or(fs::path(akn_path.string() + ".vocab"));

  const auto lines = read_corpus_lines(corpus_path);
  Vocab vocab = build_vocab(lines, cfg.min_count, cfg.tokenize_mode());
  AssocNetwork net(vocab.size(), cfg.sr);
  for (const auto& line : lines) net.update(encode(vocab, line, cfg.tokenize_mode()).ids);

  const std::string akn_bytes = serialize_akn(net);
  const std::string vocab_bytes = vocab.serialize();
  json prov = ctx.provenance();
  prov["outputs"] = {{"akn", fingerprint(akn_bytes)}, {"vocab", fingerprint(vocab_bytes)}};
  prov["summary"] = {{"sentences", net.sentences_seen()}, {"vocab_size", vocab.size()},
                     {"entries", net.entry_count()}, {"sr", net.shrink_rate()}};

  write_file_atomic(vocab_path, vocab_bytes);
  write_file_atomic(akn_path, akn_bytes);
  write_file_atomic(akn_path.string() + ".provenance.json", dump(prov));
  out << "build-akn: " << net.sentences_seen() << " sentences, vocab " << vocab.size() << ", "
      << net.entry_count() << " pairs, sr " << net.shrink_rate() << " -> " << akn_path.string() << "\n";
  return kExitOk;
}

int cmd_train_mapper(Context& ctx, std::ostream& out) {
  const auto& cfg = ctx.cfg();
  const auto out_path = ctx.output("mapper", "--out");
  Vocab vocab = load_vocab(ctx.input("vocab"));
  AssocNetwork akn = load_akn(ctx.input("akn"));
  if (akn.vocab_size() != vocab.size()) {
    throw ConfigMismatchError("AKN vocabulary size " + std::to_string(akn.vocab_size()) +
                              " != vocabulary file size " + std::to_string(vocab.size()));
  }
  const auto all = load_corpus(ctx.input("corpus"), vocab, cfg.tokenize_mode());

  std::optional<ToyEncoder> encoder;
  std::unique_ptr<FeatureSource> source;
  json finetune = nullptr;
  if (cfg.encoder == "toy") {
    encoder.emplace(vocab.size(), cfg.hidden, ctx.seed("encoder"));
    if (cfg.encoder_epochs > 0 && cfg.path("finetune-data")) {
      auto data = load_data(ctx, "finetune-data", vocab);
      auto rep = fine_tune_encoder(*encoder, data, cfg.task_kind(),
                                   {cfg.encoder_epochs, cfg.encoder_lr, ctx.seed("finetune")});
      finetune = {{"epoch_loss", rep.epoch_loss}, {"train_accuracy", rep.train_accuracy}};
    }
    source = std::make_unique<ToyFeatureSource>(*encoder);
  } else {
    source = std::make_unique<FileFeatureSource>(cfg.hidden, read_features(ctx.input("corpus-features"), cfg.hidden));
  }

  std::vector<Sentence> sentences;
  std::vector<FeatureBatch> features;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].ids.empty()) continue;
    features.push_back({i, source->features(i, all[i])});
    sentences.push_back(all[i]);
  }
  if (sentences.empty()) throw DegenerateInputError("train-mapper: corpus has no tokens");

  MapperNet mapper(cfg.hidden, cfg.n, ctx.seed("mapper"));
  ReconNet recon(cfg.n, cfg.hidden, ctx.seed("recon"));
  auto trace = train_mapper(mapper, recon, sentences, features, akn,
                            {cfg.mapper_epochs, cfg.mapper_lr, ctx.seed("mapper-train")});

  json prov = ctx.provenance();
  json epochs = json::array();
  for (const auto& e : trace) {
    epochs.push_back({{"total", e.total}, {"alignment", e.alignment}, {"reconstruction", e.reconstruction}});
  }
  prov["training"] = {{"epochs", epochs}, {"sentences", sentences.size()}};
  if (!finetune.is_null()) prov["finetune"] = finetune;
  MapperBundle bundle{std::move(mapper), std::move(recon), std::move(encoder), cfg.seed, prov};
  save_mapper(bundle, out_path);

  out << "train-mapper: " << sentences.size() << " sentences, " << trace.size() << " epochs";
  if (!trace.empty()) {
    out << ", L_MS " << fixed(trace.front().alignment) << " -> " << fixed(trace.back().alignment) << ", L_Rec "
        << fixed(trace.back().reconstruction);
  }
  out << " -> " << out_path.string() << "\n";
  return kExitOk;
}

Matrix parse_points(const std::string& text, const std::string& where) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    while (fields >> tok) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw FormatError(where + ":" + std::to_string(line_no) + ": not a number: " + tok);
      }
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(where + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(rows.front().size()) + " values, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(where + ": no points");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  return m;
}

int cmd_cluster(Context& ctx, std::ostream& out) {
  const auto& cfg = ctx.cfg();
  const auto out_path = ctx.output("space", "--out");
  Matrix points;
  std::string source_kind;
  if (auto elements_path = ctx.optional_input("elements")) {
    points = parse_points(read_file(*elements_path), elements_path->string());
    source_kind = "points";
  } else {
    auto loaded = load_mapper_and_vocab(ctx);
    const auto all = load_corpus(ctx.input("corpus"), loaded.vocab, cfg.tokenize_mode());
    auto source = feature_source(ctx, loaded.bundle, "corpus-features");
    std::vector<Matrix> elements;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i].ids.empty()) continue;
      elements.push_back(map_forward(loaded.bundle.mapper, source->features(i, all[i])));
    }
    points = stack_elements(elements, cfg.sample_cap);
    source_kind = "corpus";
  }

  KMeansResult res = kmeans_cluster(points, {cfg.k, cfg.max_iter, ctx.seed("cluster")});
  snap_to_float(res.space);
  json prov = ctx.provenance();
  prov["clustering"] = {{"source", source_kind},           {"points", points.rows()},
                        {"objective", res.objective()},    {"objective_trace", res.objective_trace},
                        {"iterations", res.iterations},    {"converged", res.converged}};
  res.space.metadata = prov;
  save_space(res.space, out_path);
  out << "cluster: " << points.rows() << " elements, k " << res.space.k() << ", objective " << fixed(res.objective(), 6)
      << ", " << res.iterations << " iterations" << (res.converged ? "" : " (not converged)") << " -> "
      << out_path.string() << "\n";
  return kExitOk;
}

int cmd_train(Context& ctx, std::ostream& out) {
  const auto& cfg = ctx.cfg();
  const auto space_out = ctx.output("model-space", "--space-out");
  const auto head_out = ctx.output("head", "--head-out");
  auto loaded = load_mapper_and_vocab(ctx);
  ContextSpace space = load_checked_space(ctx, "space", loaded.bundle);
  auto data = load_data(ctx, "train-data", loaded.vocab);
  auto source = feature_source(ctx, loaded.bundle, "train-features");
  auto elements = elements_of(loaded.bundle.mapper, *source, data);

  TaskHead head(cfg.task_kind(), space.k(), head_outputs(cfg.task_kind(), loaded.vocab), ctx.seed("head"));
  auto rep = train_downstream(space, head, elements, data,
                              {cfg.downstream_epochs, cfg.downstream_lr, ctx.seed("downstream")});

  json prov = ctx.provenance();
  prov["training"] = {{"epoch_loss", rep.epoch_loss}, {"epoch_accuracy", rep.epoch_accuracy},
                      {"examples", data.size()}};
  json space_meta = prov;
  space_meta["clustering"] = space.metadata.value("clustering", json::object());
  space.metadata = space_meta;
  save_space(space, space_out);
  save_head(head, prov, head_out);

  out << "train: " << data.size() << " examples, " << rep.epoch_loss.size() << " epochs";
  if (!rep.epoch_loss.empty()) {
    out << ", loss " << fixed(rep.epoch_loss.back()) << ", train accuracy " << fixed(rep.epoch_accuracy.back(), 2);
  }
  out << " -> " << space_out.string() << ", " << head_out.string() << "\n";
  return kExitOk;
}

json prf_json(const PrfScores& s) {
  return {{"detection_precision", s.detection_precision}, {"detection_recall", s.detection_recall},
          {"detection_f1", s.detection_f1},               {"correction_precision", s.correction_precision},
          {"correction_recall", s.correction_recall},     {"correction_f1", s.correction_f1}};
}

int cmd_eval(Context& ctx, std::ostream& out) {
  const auto& cfg = ctx.cfg();
  const auto report_path = ctx.output("eval-report", "--report");
  auto loaded = load_mapper_and_vocab(ctx);
  ContextSpace space = load_checked_space(ctx, "model-space", loaded.bundle);
  TaskHead head = load_head(ctx.input("head"));
  check_head(space, head, cfg, loaded.vocab);
  auto data = load_data(ctx, "test-data", loaded.vocab);
  auto source = feature_source(ctx, loaded.bundle, "test-features");
  auto elements = elements_of(loaded.bundle.mapper, *source, data);

  json metrics;
  std::string summary;
  if (head.task() == Task::kSentiment) {
    std::vector<std::size_t> pred;
    for (const auto& e : elements) pred.push_back(predict_sequence(space, head, e));
    const double acc = evaluate_classification(pred, labels_of(data));
    metrics = {{"accuracy", acc}};
    summary = "accuracy " + fixed(acc, 2);
  } else {
    std::vector<std::vector<std::size_t>> src, tgt, pred;
    for (std::size_t i = 0; i < data.size(); ++i) {
      src.push_back(data[i].sentence.ids);
      tgt.push_back(data[i].target);
      pred.push_back(predict_tokens(space, head, elements[i]));
    }
    auto m = evaluate_correction(src, tgt, pred);
    metrics = {{"word", prf_json(m.word)}, {"sentence", prf_json(m.sentence)}};
    summary = "sentence correction F1 " + fixed(m.sentence.correction_f1, 2) + ", word correction F1 " +
              fixed(m.word.correction_f1, 2);
  }
  json report = ctx.provenance();
  report["examples"] = data.size();
  report["metrics"] = metrics;
  write_file_atomic(report_path, dump(report));
  out << "eval: " << data.size() << " examples, " << summary << " -> " << report_path.string() << "\n";
  return kExitOk;
}

json ranking_json(const ContextRanking& r) {
  return {{"positive_affinity", r.positive_affinity}, {"negative_affinity", r.negative_affinity}, {"order", r.order}};
}

int cmd_interpret(Context& ctx, std::ostream& out) {
  const auto& cfg = ctx.cfg();
  if (cfg.task_kind() != Task::kSentiment) throw ConfigError("interpret: only the sentiment task is supported");
  const auto report_path = ctx.output("interpret-report", "--report");
  auto loaded = load_mapper_and_vocab(ctx);
  ContextSpace space = load_checked_space(ctx, "model-space", loaded.bundle);
  TaskHead head = load_head(ctx.input("head"));
  check_head(space, head, cfg, loaded.vocab);
  auto data = load_data(ctx, "test-data", loaded.vocab);
  auto source = feature_source(ctx, loaded.bundle, "test-features");
  auto elements = elements_of(loaded.bundle.mapper, *source, data);

  ReversalReport rep = run_reversal(space, head, elements, labels_of(data));
  json report = ctx.provenance();
  report["examples"] = data.size();
  report["metrics"] = {{"OA", rep.original_accuracy}, {"CA", rep.changed_accuracy}, {"RA", rep.reversed_ratio}};
  report["ranking_before"] = ranking_json(rep.before);
  report["ranking_after"] = ranking_json(rep.after);

  std::optional<std::string> csv;
  if (auto csv_path = cfg.path("interpret-csv")) {
    const std::size_t k = rep.before.order.size();
    std::vector<std::size_t> rank(k);
    for (std::size_t r = 0; r < k; ++r) rank[rep.before.order[r]] = r;
    std::ostringstream os;
    os << std::setprecision(17) << "context,rank,swapped_with,positive_affinity,negative_affinity,score\n";
    for (std::size_t j = 0; j < k; ++j) {
      os << j << ',' << rank[j] << ',' << rep.before.order[k - 1 - rank[j]] << ',' << rep.before.positive_affinity[j]
         << ',' << rep.before.negative_affinity[j] << ',' << rep.before.score(j) << '\n';
    }
    write_file_atomic(*csv_path, os.str());
  }
  write_file_atomic(report_path, dump(report));
  out << "interpret: OA " << fixed(rep.original_accuracy, 2) << ", CA " << fixed(rep.changed_accuracy, 2) << ", RA "
      << fixed(rep.reversed_ratio, 2) << " -> " << report_path.string() << "\n";
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Word-context space pipeline: association network, mapping, contexts, heads"};
  app.name("w2c");
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    std::function<int(Context&, std::ostream&)> run;
    std::vector<std::tuple<std::string, std::string, const char*>> paths;
  };
  const std::vector<Command> commands = {
      {"build-akn", "Build the vocabulary and association network from a corpus", cmd_build_akn,
       {{"--corpus", "corpus", "corpus, one sentence per line"},
        {"--out", "akn", "output W2CA file"},
        {"--vocab", "vocab", "output vocabulary (default <out>.vocab)"}}},
      {"train-mapper", "Train the word-context mapping network", cmd_train_mapper,
       {{"--corpus", "corpus", "corpus, one sentence per line"},
        {"--akn", "akn", "W2CA file"},
        {"--vocab", "vocab", "vocabulary file"},
        {"--corpus-features", "corpus-features", "W2CE features of the corpus (file encoder)"},
        {"--finetune-data", "finetune-data", "labeled data for toy encoder fine-tuning (skipped when absent)"},
        {"--out", "mapper", "output W2CM file"}}},
      {"cluster", "Cluster word elements into contexts", cmd_cluster,
       {{"--elements", "elements", "points file, one vector per line"},
        {"--mapper", "mapper", "W2CM file"},
        {"--vocab", "vocab", "vocabulary file"},
        {"--corpus", "corpus", "corpus, one sentence per line"},
        {"--corpus-features", "corpus-features", "W2CE features of the corpus (file encoder)"},
        {"--space", "space", "output W2CS file"},
        {"--out", "space", "alias of --space"}}},
      {"train", "Train the merge matrix and the task head", cmd_train,
       {{"--mapper", "mapper", "W2CM file"},
        {"--vocab", "vocab", "vocabulary file"},
        {"--space", "space", "clustered W2CS file"},
        {"--train-data", "train-data", "labeled training data"},
        {"--train-features", "train-features", "W2CE features of the training data (file encoder)"},
        {"--space-out", "model-space", "output W2CS file with the trained merge matrix"},
        {"--head-out", "head", "output W2CH file"}}},
      {"eval", "Evaluate a trained model", cmd_eval,
       {{"--mapper", "mapper", "W2CM file"},
        {"--vocab", "vocab", "vocabulary file"},
        {"--model-space", "model-space", "trained W2CS file"},
        {"--head", "head", "W2CH file"},
        {"--test-data", "test-data", "labeled test data"},
        {"--test-features", "test-features", "W2CE features of the test data (file encoder)"},
        {"--report", "eval-report", "output JSON report"}}},
      {"interpret", "Run the context reversal protocol", cmd_interpret,
       {{"--mapper", "mapper", "W2CM file"},
        {"--vocab", "vocab", "vocabulary file"},
        {"--model-space", "model-space", "trained W2CS file"},
        {"--head", "head", "W2CH file"},
        {"--test-data", "test-data", "labeled test data"},
        {"--test-features", "test-features", "W2CE features of the test data (file encoder)"},
        {"--report", "interpret-report", "output JSON report"},
        {"--csv", "interpret-csv", "output per-context CSV"}}},
  };

  std::vector<Request> requests(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].name, commands[i].help);
    add_common(sub, requests[i]);
    for (const auto& [flag, role, help] : commands[i].paths) add_path(sub, requests[i], flag, role, help);
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const std::string name = commands[i].name;
    try {
      Context ctx(name, resolve(requests[i]));
      return commands[i].run(ctx, out);
    } catch (const ConfigError& e) {
      err << name << ": config error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const MissingInputError& e) {
      err << e.what() << "\n";
      return kExitMissingInput;
    } catch (const ConfigMismatchError& e) {
      err << name << ": config mismatch: " << e.what() << "\n";
      return kExitMismatch;
    } catch (const FormatError& e) {
      err << name << ": malformed input: " << e.what() << "\n";
      return kExitFormat;
    } catch (const NonFiniteError& e) {
      err << name << ": training diverged: " << e.what() << "\n";
      return kExitNonFinite;
    } catch (const std::exception& e) {
      err << name << ": error: " << e.what() << "\n";
      return kExitFailure;
    }
  }
  return kExitUsage;
}

}  // namespace w2c
