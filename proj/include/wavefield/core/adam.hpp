// Adam with a geometric (exponential) learning-rate schedule:
//   lr(t) = lr_init * (lr_final / lr_init)^(t / total_steps)
// evaluated at the 0-based step index before each update, so the first step
// uses exactly lr_init and the midpoint uses the geometric mean.
//
// Parameters live wherever the model keeps them; a ParamRefs list of
// (name, matrix pointer, gradient pointer) binds them to optimizer slots in
// a fixed registration order, which also fixes the checkpoint layout.
#pragma once

#include <string>
#include <vector>

#include "wavefield/common.hpp"

namespace wavefield::core {

struct ParamRef {
  std::string name;
  Mat* value = nullptr;
  Mat* grad = nullptr;
};

using ParamRefs = std::vector<ParamRef>;

struct AdamConfig {
  double lr_init = 5e-4;
  double lr_final = 5e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::int64_t step = 0;        // completed updates
  std::int64_t total_steps = 0; // schedule horizon
  std::vector<Mat> m, v;        // first/second moments, one per parameter

  void reset(const ParamRefs& params, const AdamConfig& c, std::int64_t total);
  // Current scheduled learning rate (for logging / curve output).
  double current_lr() const;
};

// One in-place update over all parameters. Gradients are left untouched.
void adam_step(const ParamRefs& params, AdamState& st);

}  // namespace wavefield::core
