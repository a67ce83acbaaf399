#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "w2c/akn.hpp"
#include "w2c/cli.hpp"
#include "w2c/contextspace.hpp"
#include "w2c/corpus.hpp"
#include "w2c/interp.hpp"
#include "w2c/lmhead.hpp"

namespace py = pybind11;
using namespace w2c;

namespace {

using Rows = std::vector<std::vector<double>>;

Rows to_rows(const Matrix& m) {
  Rows out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

Matrix from_rows(const Rows& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw ShapeError("ragged matrix: row " + std::to_string(r));
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

TokenizeMode mode_of(const std::string& name) {
  if (name == "cjk") return TokenizeMode::kCjkChars;
  if (name == "whitespace") return TokenizeMode::kWhitespace;
  throw py::value_error("tokenizer must be \"cjk\" or \"whitespace\"");
}

py::dict prf_dict(const PrfScores& s) {
  py::dict d;
  d["detection_precision"] = s.detection_precision;
  d["detection_recall"] = s.detection_recall;
  d["detection_f1"] = s.detection_f1;
  d["correction_precision"] = s.correction_precision;
  d["correction_recall"] = s.correction_recall;
  d["correction_f1"] = s.correction_f1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_w2cspace, m) {
  m.doc() = "Word-context space pipeline: association network, clustering, metrics.";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ConfigMismatchError>(m, "ConfigMismatchError", PyExc_ValueError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);

  m.def(
      "tokenize", [](const std::string& text, const std::string& mode) { return tokenize(text, mode_of(mode)); },
      py::arg("text"), py::arg("mode") = "cjk");

  py::class_<Vocab>(m, "Vocab")
      .def(py::init<std::vector<std::string>>(), py::arg("tokens"))
      .def("__len__", &Vocab::size)
      .def("id", [](const Vocab& v, const std::string& t) { return v.id(t); })
      .def("token", &Vocab::token)
      .def("__contains__", [](const Vocab& v, const std::string& t) { return v.contains(t); })
      .def_property_readonly("tokens", &Vocab::tokens)
      .def("encode",
           [](const Vocab& v, const std::string& text, const std::string& mode) {
             return encode(v, text, mode_of(mode)).ids;
           },
           py::arg("text"), py::arg("mode") = "cjk");

  m.def(
      "build_vocab",
      [](const std::vector<std::string>& corpus, std::size_t min_count, const std::string& mode) {
        return build_vocab(corpus, min_count, mode_of(mode));
      },
      py::arg("corpus"), py::arg("min_count") = 1, py::arg("mode") = "cjk");

  py::class_<AssocNetwork>(m, "AssocNetwork")
      .def(py::init<std::size_t, double>(), py::arg("vocab_size"), py::arg("shrink_rate") = kDefaultShrinkRate)
      .def("update", [](AssocNetwork& n, const std::vector<std::size_t>& ids) { n.update(ids); })
      .def("score", &AssocNetwork::score)
      .def_property_readonly("vocab_size", &AssocNetwork::vocab_size)
      .def_property_readonly("shrink_rate", &AssocNetwork::shrink_rate)
      .def_property_readonly("sentences_seen", &AssocNetwork::sentences_seen)
      .def("__len__", &AssocNetwork::entry_count)
      .def("to_bytes", [](const AssocNetwork& n) { return py::bytes(serialize_akn(n)); })
      .def_static("from_bytes", [](const py::bytes& b) { return parse_akn(std::string(b)); });

  m.def(
      "sample_assoc_matrix",
      [](const AssocNetwork& n, const std::vector<std::size_t>& ids) { return to_rows(sample_assoc_matrix(n, ids)); },
      py::arg("network"), py::arg("ids"));

  m.def(
      "cosine_similarity",
      [](const std::vector<double>& a, const std::vector<double>& b) { return cosine_similarity(a, b); },
      py::arg("a"), py::arg("b"));

  m.def(
      "kmeans",
      [](const Rows& points, std::size_t k, std::size_t max_iter, std::uint64_t seed) {
        auto res = kmeans_cluster(from_rows(points), {k, max_iter, seed});
        py::dict d;
        d["centroids"] = to_rows(res.space.centroids);
        d["assignment"] = res.assignment;
        d["objective"] = res.objective();
        d["objective_trace"] = res.objective_trace;
        d["iterations"] = res.iterations;
        d["converged"] = res.converged;
        return d;
      },
      py::arg("points"), py::arg("k"), py::arg("max_iter") = 100, py::arg("seed") = 0);

  m.def("f1_score", &f1_score, py::arg("precision"), py::arg("recall"));
  m.def(
      "evaluate_classification",
      [](const std::vector<std::size_t>& p, const std::vector<std::size_t>& r) { return evaluate_classification(p, r); },
      py::arg("predictions"), py::arg("references"));
  m.def(
      "evaluate_correction",
      [](const std::vector<std::vector<std::size_t>>& src, const std::vector<std::vector<std::size_t>>& tgt,
         const std::vector<std::vector<std::size_t>>& pred) {
        auto r = evaluate_correction(src, tgt, pred);
        py::dict d;
        d["word"] = prf_dict(r.word);
        d["sentence"] = prf_dict(r.sentence);
        return d;
      },
      py::arg("sources"), py::arg("targets"), py::arg("predictions"));

  py::class_<ReversalReport>(m, "ReversalReport")
      .def_readonly("original_accuracy", &ReversalReport::original_accuracy)
      .def_readonly("changed_accuracy", &ReversalReport::changed_accuracy)
      .def_readonly("reversed_ratio", &ReversalReport::reversed_ratio);
  m.def(
      "reversal_metrics",
      [](const std::vector<std::size_t>& o, const std::vector<std::size_t>& mod, const std::vector<std::size_t>& l) {
        return reversal_metrics(o, mod, l);
      },
      py::arg("original"), py::arg("modified"), py::arg("labels"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = dispatch(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one w2c command in-process; returns (exit_code, stdout, stderr).");
}
