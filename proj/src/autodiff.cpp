#include "w2c/autodiff.hpp"

#include <cmath>
#include <string>

namespace w2c {

// ---------------------------------------------------------------------------
// ParamStore

Parameter& ParamStore::add(const std::string& name, Matrix init) {
  if (contains(name)) throw Error("duplicate parameter name: " + name);
  Matrix grad(init.rows(), init.cols());
  index_[name] = params_.size();
  params_.push_back(Parameter{name, std::move(init), std::move(grad)});
  return params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter: " + name);
  return params_[it->second];
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::snap_to_float() {
  for (auto& p : params_) w2c::snap_to_float(p.value);
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.at(i).name != b.at(i).name || !(a.at(i).value == b.at(i).value)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Var / Tape

const Matrix& Var::value() const { return tape_->node(id_).value; }
const Matrix& Var::grad() const { return tape_->node(id_).grad; }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("Var::scalar on non-scalar node");
  return v(0, 0);
}

Var Tape::push(Matrix value, bool requires_grad, std::function<void(Tape&)> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::param(Parameter& p) {
  Var v = push(p.value, true, nullptr);
  nodes_[v.id()].param = &p;
  return v;
}

Matrix& Tape::grad_of(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw Error("backward: loss belongs to another tape");
  if (loss.value().size() != 1) throw ShapeError("backward: loss must be 1x1");
  if (!std::isfinite(loss.scalar())) throw NonFiniteError("backward: non-finite loss");
  grad_of(loss.id())(0, 0) += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this);
    if (n.param != nullptr) {
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

// ---------------------------------------------------------------------------
// Ops

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw Error("vars from different tapes");
  return *a.tape();
}

bool needs(Tape& t, Var v) { return t.node(v.id()).requires_grad; }

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Matrix out = matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  std::size_t self = t.size();
  return t.push(std::move(out), needs(t, a) || needs(t, b), [ia, ib, self](Tape& t) {
    const Matrix& g = t.node(self).grad;
    if (t.node(ia).requires_grad) {
      Matrix ga = matmul(g, t.node(ib).value.transpose());
      auto dst = t.grad_of(ia).data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += ga.data()[k];
    }
    if (t.node(ib).requires_grad) {
      Matrix gb = matmul(t.node(ia).value.transpose(), g);
      auto dst = t.grad_of(ib).data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += gb.data()[k];
    }
  });
}

namespace {

Var add_scaled(Var a, Var b, double sb, const char* name) {
  Tape& t = same_tape(a, b);
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(name) + ": " + shape_str(a.value()) + " vs " + shape_str(b.value()));
  }
  Matrix out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] += sb * bv[k];
  const std::size_t ia = a.id(), ib = b.id(), self = t.size();
  return t.push(std::move(out), needs(t, a) || needs(t, b), [ia, ib, sb, self](Tape& t) {
    const auto g = t.node(self).grad.data();
    if (t.node(ia).requires_grad) {
      auto dst = t.grad_of(ia).data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
    }
    if (t.node(ib).requires_grad) {
      auto dst = t.grad_of(ib).data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += sb * g[k];
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return add_scaled(a, b, 1.0, "add"); }
Var sub(Var a, Var b) { return add_scaled(a, b, -1.0, "sub"); }

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  Matrix out = a.value();
  for (double& v : out.data()) v *= s;
  const std::size_t ia = a.id(), self = t.size();
  return t.push(std::move(out), needs(t, a), [ia, s, self](Tape& t) {
    const auto g = t.node(self).grad.data();
    auto dst = t.grad_of(ia).data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += s * g[k];
  });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row);
  if (row.value().rows() != 1 || row.value().cols() != a.value().cols()) {
    throw ShapeError("add_row: " + shape_str(a.value()) + " + " + shape_str(row.value()));
  }
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto o = out.row(r);
    auto b = row.value().row(0);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] += b[c];
  }
  const std::size_t ia = a.id(), ib = row.id(), self = t.size();
  return t.push(std::move(out), needs(t, a) || needs(t, row), [ia, ib, self](Tape& t) {
    const Matrix& g = t.node(self).grad;
    if (t.node(ia).requires_grad) {
      auto dst = t.grad_of(ia).data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g.data()[k];
    }
    if (t.node(ib).requires_grad) {
      auto dst = t.grad_of(ib).row(0);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto gr = g.row(r);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += gr[c];
      }
    }
  });
}

Var conv1d_same(Var x, Var w, std::size_t width) {
  Tape& t = same_tape(x, w);
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  if (width == 0 || width % 2 == 0) throw ShapeError("conv1d_same: width must be odd");
  const std::size_t cin = xv.cols();
  if (wv.rows() != width * cin) {
    throw ShapeError("conv1d_same: weight " + shape_str(wv) + " does not match width " +
                     std::to_string(width) + " x cin " + std::to_string(cin));
  }
  const std::size_t d = xv.rows(), cout = wv.cols();
  const long half = static_cast<long>(width / 2);
  Matrix out(d, cout);
  for (std::size_t pos = 0; pos < d; ++pos) {
    auto o = out.row(pos);
    for (std::size_t s = 0; s < width; ++s) {
      const long src = static_cast<long>(pos) + static_cast<long>(s) - half;
      if (src < 0 || src >= static_cast<long>(d)) continue;
      auto xr = xv.row(static_cast<std::size_t>(src));
      for (std::size_t c = 0; c < cin; ++c) {
        const double xval = xr[c];
        auto wr = wv.row(s * cin + c);
        for (std::size_t oc = 0; oc < cout; ++oc) o[oc] += xval * wr[oc];
      }
    }
  }
  const std::size_t ix = x.id(), iw = w.id(), self = t.size();
  return t.push(std::move(out), needs(t, x) || needs(t, w), [=](Tape& t) {
    const Matrix& g = t.node(self).grad;
    const Matrix& xv = t.node(ix).value;
    const Matrix& wv = t.node(iw).value;
    const bool gx = t.node(ix).requires_grad, gw = t.node(iw).requires_grad;
    Matrix* dx = gx ? &t.grad_of(ix) : nullptr;
    Matrix* dw = gw ? &t.grad_of(iw) : nullptr;
    for (std::size_t pos = 0; pos < d; ++pos) {
      auto gr = g.row(pos);
      for (std::size_t s = 0; s < width; ++s) {
        const long src = static_cast<long>(pos) + static_cast<long>(s) - half;
        if (src < 0 || src >= static_cast<long>(d)) continue;
        const auto srow = static_cast<std::size_t>(src);
        for (std::size_t c = 0; c < cin; ++c) {
          auto wr = wv.row(s * cin + c);
          if (dx != nullptr) {
            double acc = 0.0;
            for (std::size_t oc = 0; oc < cout; ++oc) acc += gr[oc] * wr[oc];
            (*dx)(srow, c) += acc;
          }
          if (dw != nullptr) {
            const double xval = xv(srow, c);
            auto dwr = dw->row(s * cin + c);
            for (std::size_t oc = 0; oc < cout; ++oc) dwr[oc] += gr[oc] * xval;
          }
        }
      }
    }
  });
}

Var tanh(Var a) {
  Tape& t = *a.tape();
  Matrix out = a.value();
  for (double& v : out.data()) v = std::tanh(v);
  const std::size_t ia = a.id(), self = t.size();
  return t.push(std::move(out), needs(t, a), [ia, self](Tape& t) {
    const auto g = t.node(self).grad.data();
    const auto y = t.node(self).value.data();
    auto dst = t.grad_of(ia).data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k] * (1.0 - y[k] * y[k]);
  });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape();
  Matrix out = a.value();
  for (double& v : out.data()) v = w2c::sigmoid(v);
  const std::size_t ia = a.id(), self = t.size();
  return t.push(std::move(out), needs(t, a), [ia, self](Tape& t) {
    const auto g = t.node(self).grad.data();
    const auto y = t.node(self).value.data();
    auto dst = t.grad_of(ia).data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k] * y[k] * (1.0 - y[k]);
  });
}

Var layer_norm(Var x, Var gain, Var bias) {
  Tape& t = same_tape(x, gain);
  const Matrix& xv = x.value();
  const std::size_t n = xv.cols();
  if (gain.value().rows() != 1 || bias.value().rows() != 1) {
    throw ShapeError("layer_norm: gain/bias must be row vectors");
  }
  Matrix out = layer_norm(xv, gain.value().row(0), bias.value().row(0));
  // normalized values and inverse std per row, needed for the backward pass
  Matrix xhat(xv.rows(), n);
  std::vector<double> inv(xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto in = xv.row(r);
    double mu = 0.0;
    for (double v : in) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : in) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    inv[r] = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t c = 0; c < n; ++c) xhat(r, c) = (in[c] - mu) * inv[r];
  }
  const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id(), self = t.size();
  const bool rg = needs(t, x) || needs(t, gain) || needs(t, bias);
  return t.push(std::move(out), rg,
                [ix, ig, ib, self, n, xhat = std::move(xhat), inv = std::move(inv)](Tape& t) {
                  const Matrix& g = t.node(self).grad;
                  auto gv = t.node(ig).value.row(0);
                  const double dn = static_cast<double>(n);
                  if (t.node(ig).requires_grad || t.node(ib).requires_grad) {
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      for (std::size_t c = 0; c < n; ++c) {
                        if (t.node(ig).requires_grad) t.grad_of(ig)(0, c) += g(r, c) * xhat(r, c);
                        if (t.node(ib).requires_grad) t.grad_of(ib)(0, c) += g(r, c);
                      }
                    }
                  }
                  if (!t.node(ix).requires_grad) return;
                  Matrix& dx = t.grad_of(ix);
                  std::vector<double> dxhat(n);
                  for (std::size_t r = 0; r < g.rows(); ++r) {
                    double sum = 0.0, sum_x = 0.0;
                    for (std::size_t c = 0; c < n; ++c) {
                      dxhat[c] = g(r, c) * gv[c];
                      sum += dxhat[c];
                      sum_x += dxhat[c] * xhat(r, c);
                    }
                    for (std::size_t c = 0; c < n; ++c) {
                      dx(r, c) += inv[r] / dn * (dn * dxhat[c] - sum - xhat(r, c) * sum_x);
                    }
                  }
                });
}

Var cosine_matrix(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw ShapeError("cosine_matrix: " + shape_str(av) + " vs " + shape_str(bv));
  }
  std::vector<double> na(av.rows()), nb(bv.rows());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    na[i] = norm(av.row(i));
    if (na[i] == 0.0) throw DegenerateInputError("cosine_matrix: zero-norm row " + std::to_string(i) + " in left operand");
  }
  for (std::size_t j = 0; j < bv.rows(); ++j) {
    nb[j] = norm(bv.row(j));
    if (nb[j] == 0.0) throw DegenerateInputError("cosine_matrix: zero-norm row " + std::to_string(j) + " in right operand");
  }
  Matrix out(av.rows(), bv.rows());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < bv.rows(); ++j) out(i, j) = dot(av.row(i), bv.row(j)) / (na[i] * nb[j]);
  const std::size_t ia = a.id(), ib = b.id(), self = t.size();
  return t.push(std::move(out), needs(t, a) || needs(t, b),
                [ia, ib, self, na = std::move(na), nb = std::move(nb)](Tape& t) {
                  const Matrix& g = t.node(self).grad;
                  const Matrix& y = t.node(self).value;
                  const Matrix& av = t.node(ia).value;
                  const Matrix& bv = t.node(ib).value;
                  const bool ga = t.node(ia).requires_grad, gb = t.node(ib).requires_grad;
                  const std::size_t n = av.cols();
                  for (std::size_t i = 0; i < av.rows(); ++i) {
                    for (std::size_t j = 0; j < bv.rows(); ++j) {
                      const double gij = g(i, j);
                      if (gij == 0.0) continue;
                      const double inv_ab = 1.0 / (na[i] * nb[j]);
                      if (ga) {
                        const double ca = y(i, j) / (na[i] * na[i]);
                        auto dst = t.grad_of(ia).row(i);
                        for (std::size_t c = 0; c < n; ++c) dst[c] += gij * (bv(j, c) * inv_ab - ca * av(i, c));
                      }
                      if (gb) {
                        const double cb = y(i, j) / (nb[j] * nb[j]);
                        auto dst = t.grad_of(ib).row(j);
                        for (std::size_t c = 0; c < n; ++c) dst[c] += gij * (av(i, c) * inv_ab - cb * bv(j, c));
                      }
                    }
                  }
                });
}

Var mean(Var a) {
  Tape& t = *a.tape();
  if (a.value().empty()) throw ShapeError("mean: empty input");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const double inv = 1.0 / static_cast<double>(a.value().size());
  const std::size_t ia = a.id(), self = t.size();
  return t.push(Matrix(1, 1, s * inv), needs(t, a), [ia, inv, self](Tape& t) {
    const double g = t.node(self).grad(0, 0);
    for (double& v : t.grad_of(ia).data()) v += g * inv;
  });
}

Var mean_rows(Var a) {
  Tape& t = *a.tape();
  const Matrix& av = a.value();
  if (av.rows() == 0) throw ShapeError("mean_rows: no rows");
  Matrix out(1, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c) out(0, c) += av(r, c);
  const double inv = 1.0 / static_cast<double>(av.rows());
  for (double& v : out.data()) v *= inv;
  const std::size_t ia = a.id(), self = t.size();
  return t.push(std::move(out), needs(t, a), [ia, inv, self](Tape& t) {
    auto g = t.node(self).grad.row(0);
    Matrix& dst = t.grad_of(ia);
    for (std::size_t r = 0; r < dst.rows(); ++r)
      for (std::size_t c = 0; c < dst.cols(); ++c) dst(r, c) += g[c] * inv;
  });
}

Var mae(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (!a.value().same_shape(b.value())) {
    throw ShapeError("mae: " + shape_str(a.value()) + " vs " + shape_str(b.value()));
  }
  if (a.value().empty()) throw ShapeError("mae: empty input");
  const auto av = a.value().data();
  const auto bv = b.value().data();
  double s = 0.0;
  for (std::size_t k = 0; k < av.size(); ++k) s += std::abs(av[k] - bv[k]);
  const double inv = 1.0 / static_cast<double>(av.size());
  const std::size_t ia = a.id(), ib = b.id(), self = t.size();
  return t.push(Matrix(1, 1, s * inv), needs(t, a) || needs(t, b), [ia, ib, inv, self](Tape& t) {
    const double g = t.node(self).grad(0, 0) * inv;
    const auto av = t.node(ia).value.data();
    const auto bv = t.node(ib).value.data();
    const bool ga = t.node(ia).requires_grad, gb = t.node(ib).requires_grad;
    for (std::size_t k = 0; k < av.size(); ++k) {
      const double diff = av[k] - bv[k];
      const double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      if (ga) t.grad_of(ia).data()[k] += g * sgn;
      if (gb) t.grad_of(ib).data()[k] -= g * sgn;
    }
  });
}

Var mse(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (!a.value().same_shape(b.value())) {
    throw ShapeError("mse: " + shape_str(a.value()) + " vs " + shape_str(b.value()));
  }
  if (a.value().empty()) throw ShapeError("mse: empty input");
  const auto av = a.value().data();
  const auto bv = b.value().data();
  double s = 0.0;
  for (std::size_t k = 0; k < av.size(); ++k) s += (av[k] - bv[k]) * (av[k] - bv[k]);
  const double inv = 1.0 / static_cast<double>(av.size());
  const std::size_t ia = a.id(), ib = b.id(), self = t.size();
  return t.push(Matrix(1, 1, s * inv), needs(t, a) || needs(t, b), [ia, ib, inv, self](Tape& t) {
    const double g = t.node(self).grad(0, 0) * inv;
    const auto av = t.node(ia).value.data();
    const auto bv = t.node(ib).value.data();
    const bool ga = t.node(ia).requires_grad, gb = t.node(ib).requires_grad;
    for (std::size_t k = 0; k < av.size(); ++k) {
      const double d2 = 2.0 * (av[k] - bv[k]);
      if (ga) t.grad_of(ia).data()[k] += g * d2;
      if (gb) t.grad_of(ib).data()[k] -= g * d2;
    }
  });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  Tape& t = *table.tape();
  const Matrix& tv = table.value();
  Matrix out(ids.size(), tv.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= tv.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[r]) + " out of range " + std::to_string(tv.rows()));
    }
    auto src = tv.row(ids[r]);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] = src[c];
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  const std::size_t it = table.id(), self = t.size();
  return t.push(std::move(out), needs(t, table), [it, self, idv = std::move(idv)](Tape& t) {
    const Matrix& g = t.node(self).grad;
    Matrix& dst = t.grad_of(it);
    for (std::size_t r = 0; r < idv.size(); ++r) {
      auto gr = g.row(r);
      auto dr = dst.row(idv[r]);
      for (std::size_t c = 0; c < gr.size(); ++c) dr[c] += gr[c];
    }
  });
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    double mx = in.empty() ? 0.0 : in[0];
    for (double v : in) mx = v > mx ? v : mx;
    double z = 0.0;
    auto out = p.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - mx);
      z += out[c];
    }
    for (double& v : out) v /= z;
  }
  return p;
}

Var softmax_cross_entropy(Var logits, std::span<const std::size_t> targets) {
  Tape& t = *logits.tape();
  const Matrix& lv = logits.value();
  if (targets.size() != lv.rows()) throw ShapeError("softmax_cross_entropy: target count != rows");
  if (lv.rows() == 0) throw ShapeError("softmax_cross_entropy: no rows");
  Matrix p = softmax_rows(lv);
  double loss = 0.0;
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    if (targets[r] >= lv.cols()) throw ShapeError("softmax_cross_entropy: target out of range");
    loss -= std::log(std::max(p(r, targets[r]), 1e-300));
  }
  const double inv = 1.0 / static_cast<double>(lv.rows());
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  const std::size_t il = logits.id(), self = t.size();
  return t.push(Matrix(1, 1, loss * inv), needs(t, logits),
                [il, self, inv, p = std::move(p), tg = std::move(tg)](Tape& t) {
                  const double g = t.node(self).grad(0, 0) * inv;
                  Matrix& dst = t.grad_of(il);
                  for (std::size_t r = 0; r < p.rows(); ++r) {
                    for (std::size_t c = 0; c < p.cols(); ++c) {
                      dst(r, c) += g * (p(r, c) - (c == tg[r] ? 1.0 : 0.0));
                    }
                  }
                });
}

std::vector<Var> bind_params(Tape& tape, ParamStore& params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (auto& p : params) out.push_back(tape.param(p));
  return out;
}

std::vector<Var> freeze_params(Tape& tape, const ParamStore& params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(tape.constant(p.value));
  return out;
}

}  // namespace w2c
