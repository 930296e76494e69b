#include "wavefield/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace wavefield::core {

GradCheckResult finite_difference_check(const ParamRefs& params,
                                        const std::function<double()>& loss,
                                        double h) {
  GradCheckResult res;
  for (const auto& p : params) {
    Mat& w = *p.value;
    const Mat& g = *p.grad;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double orig = w(r, c);
        w(r, c) = orig + h;
        const double lp = loss();
        w(r, c) = orig - h;
        const double lm = loss();
        w(r, c) = orig;
        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic = g(r, c);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        const double rel = std::abs(analytic - numeric) / denom;
        if (rel > res.max_rel_err) {
          res.max_rel_err = rel;
          res.worst_param = p.name;
          res.worst_row = static_cast<int>(r);
          res.worst_col = static_cast<int>(c);
        }
      }
    }
  }
  return res;
}

}  // namespace wavefield::core
