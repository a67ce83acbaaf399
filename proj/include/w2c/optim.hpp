#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "w2c/autodiff.hpp"

namespace w2c {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over every parameter of one ParamStore. Zeroes gradients after each step.
class Adam {
 public:
  Adam(ParamStore& params, AdamConfig config);

  void step();
  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  ParamStore* params_;
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t t_ = 0;
};

/// Builds a scalar loss on the given tape from parameters bound with Tape::param.
using LossFn = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients of `loss` against fourth-order central differences for
/// every scalar in `params`. Relative error is |a - n| / max(|a|, |n|, 1e-7).
/// Leaves parameter values as they were; clears gradients.
GradCheckResult grad_check(const LossFn& loss, ParamStore& params, double step);

}  // namespace w2c
