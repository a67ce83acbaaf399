#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "w2c/tensor.hpp"

namespace w2c {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Named trainable tensors with gradient accumulators. Insertion order is
/// the declared order used by checkpoints.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Matrix init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  Parameter& at(std::size_t i) { return params_[i]; }
  const Parameter& at(std::size_t i) const { return params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  std::size_t scalar_count() const;
  void snap_to_float();

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  // deque keeps Parameter addresses stable while the tape holds pointers
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are recorded in evaluation order; backward()
/// walks them in reverse and accumulates into bound Parameters.
class Tape {
 public:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void(Tape&)> backward;
  };

  Var constant(Matrix value);
  Var param(Parameter& p);

  void backward(Var loss);

  Node& node(std::size_t id) { return nodes_[id]; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  /// Records an op result. `backward` runs only when the result requires grad.
  Var push(Matrix value, bool requires_grad, std::function<void(Tape&)> backward);
  /// Gradient buffer of a node, allocated on first use.
  Matrix& grad_of(std::size_t id);

 private:
  std::deque<Node> nodes_;
};

// Differentiable ops. Shapes are checked eagerly and ShapeError thrown.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// a (r x c) + row (1 x c) broadcast over rows.
Var add_row(Var a, Var row);
/// Same-padded 1-D convolution along rows. x: d x cin, w: (width*cin) x cout.
Var conv1d_same(Var x, Var w, std::size_t width);
Var tanh(Var a);
Var sigmoid(Var a);
Var layer_norm(Var x, Var gain, Var bias);
/// Pairwise cosine similarity of rows: out(i,j) = cos(a_i, b_j).
Var cosine_matrix(Var a, Var b);
/// Mean of all entries, 1 x 1.
Var mean(Var a);
/// Mean over rows, 1 x c.
Var mean_rows(Var a);
Var mae(Var a, Var b);
Var mse(Var a, Var b);
/// Rows of a parameter table selected by index.
Var gather_rows(Var table, std::span<const std::size_t> ids);
/// Mean softmax cross-entropy of each row of logits against its target column.
Var softmax_cross_entropy(Var logits, std::span<const std::size_t> targets);

Matrix softmax_rows(const Matrix& logits);

/// Binds every parameter as a trainable leaf, in store order.
std::vector<Var> bind_params(Tape& tape, ParamStore& params);
/// Records every parameter value as a constant, in store order.
std::vector<Var> freeze_params(Tape& tape, const ParamStore& params);

}  // namespace w2c
