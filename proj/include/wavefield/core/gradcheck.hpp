// Central-difference gradient verification.
//
// Given a scalar-valued function over a parameter set and the analytic
// gradients already stored alongside each parameter, perturb every entry by
// +/- h, evaluate, and report the worst relative disagreement
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// The bound is meaningful only away from activation kinks (ReLU); callers
// that randomize inputs should keep pre-activations clear of zero by a
// margin of a few h.
#pragma once

#include <functional>

#include "wavefield/core/adam.hpp"

namespace wavefield::core {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_row = 0, worst_col = 0;
};

// `loss` must recompute the scalar objective from the current parameter
// values. Analytic gradients are read from the ParamRefs' grad matrices and
// must correspond to the unperturbed parameter point.
GradCheckResult finite_difference_check(const ParamRefs& params,
                                        const std::function<double()>& loss,
                                        double h = 1e-5);

}  // namespace wavefield::core
