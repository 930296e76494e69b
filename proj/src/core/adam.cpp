#include "wavefield/core/adam.hpp"

#include <cmath>

namespace wavefield::core {

void AdamState::reset(const ParamRefs& params, const AdamConfig& c,
                      std::int64_t total) {
  cfg = c;
  step = 0;
  total_steps = total;
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
    v.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
  }
}

double AdamState::current_lr() const {
  if (total_steps <= 0) return cfg.lr_init;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return cfg.lr_init * std::pow(cfg.lr_final / cfg.lr_init, frac);
}

void adam_step(const ParamRefs& params, AdamState& st) {
  if (params.size() != st.m.size())
    throw TrainingError("adam_step: state/parameter count mismatch");
  const double lr = st.current_lr();
  const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
  const double t = static_cast<double>(st.step + 1);
  const double bc1 = 1.0 - std::pow(b1, t);
  const double bc2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat& g = *params[i].grad;
    Mat& mm = st.m[i];
    Mat& vv = st.v[i];
    mm = b1 * mm + (1.0 - b1) * g;
    vv = b2 * vv.array().matrix() + (1.0 - b2) * g.cwiseProduct(g);
    const Mat mhat = mm / bc1;
    const Mat vhat = vv / bc2;
    params[i].value->array() -=
        lr * mhat.array() / (vhat.array().sqrt() + st.cfg.eps);
  }
  ++st.step;
}

}  // namespace wavefield::core
