#include "w2c/optim.hpp"

#include <algorithm>
#include <cmath>

namespace w2c {

Adam::Adam(ParamStore& params, AdamConfig config) : params_(&params), config_(config) {
  for (const auto& p : params) {
    m_.emplace_back(p.value.rows(), p.value.cols());
    v_.emplace_back(p.value.rows(), p.value.cols());
  }
}

void Adam::step() {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_->size(); ++i) {
    Parameter& p = params_->at(i);
    auto val = p.value.data();
    auto g = p.grad.data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < val.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      val[k] -= config_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.eps);
    }
    p.grad.fill(0.0);
  }
}

namespace {

double eval_loss(const LossFn& loss, const char* where) {
  Tape tape;
  const double v = loss(tape).scalar();
  if (!std::isfinite(v)) throw NonFiniteError(std::string("grad_check: non-finite loss at ") + where);
  return v;
}

}  // namespace

GradCheckResult grad_check(const LossFn& loss, ParamStore& params, double step) {
  if (!(step > 0.0)) throw Error("grad_check: step must be positive");
  params.zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    if (!std::isfinite(l.scalar())) throw NonFiniteError("grad_check: non-finite loss");
    tape.backward(l);
  }
  GradCheckResult result;
  for (auto& p : params) {
    auto val = p.value.data();
    for (std::size_t k = 0; k < val.size(); ++k) {
      const double orig = val[k];
      auto at = [&](double offset, const char* where) {
        val[k] = orig + offset;
        return eval_loss(loss, where);
      };
      const double up = at(step, "+step"), down = at(-step, "-step");
      const double up2 = at(2.0 * step, "+2step"), down2 = at(-2.0 * step, "-2step");
      val[k] = orig;
      // fourth-order central stencil
      const double numeric = (8.0 * (up - down) - (up2 - down2)) / (12.0 * step);
      const double analytic = p.grad.data()[k];
      const double abs_err = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      result.max_rel_error = std::max(result.max_rel_error, abs_err / denom);
      ++result.checked;
    }
  }
  params.zero_grad();
  return result;
}

}  // namespace w2c
