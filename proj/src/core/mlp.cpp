#include "wavefield/core/mlp.hpp"

#include <cmath>

namespace wavefield::core {

Mat apply_act(Act act, const Mat& z) {
  switch (act) {
    case Act::Identity:
      return z;
    case Act::Relu:
      return z.cwiseMax(0.0);
    case Act::Sigmoid:
      return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    case Act::Softplus:
      // log(1+e^z), stable form
      return z.unaryExpr([](double v) {
        return v > 30.0 ? v : std::log1p(std::exp(v));
      });
  }
  return z;
}

Mat act_grad_from_output(Act act, const Mat& a, const Mat& z) {
  switch (act) {
    case Act::Identity:
      return Mat::Ones(a.rows(), a.cols());
    case Act::Relu:
      return a.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Act::Sigmoid:
      return a.array() * (1.0 - a.array());
    case Act::Softplus:
      return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
  return Mat::Ones(a.rows(), a.cols());
}

MlpBlock::MlpBlock(const std::vector<int>& dims, Act last,
                   std::optional<std::pair<int, int>> residual_span) {
  if (dims.size() < 2) throw ConfigError("MlpBlock needs at least one layer");
  const int n = static_cast<int>(dims.size()) - 1;
  layers_.resize(n);
  for (int k = 0; k < n; ++k) {
    layers_[k].w = Mat::Zero(dims[k + 1], dims[k]);
    layers_[k].b = Mat::Zero(dims[k + 1], 1);
    layers_[k].act = (k == n - 1) ? last : Act::Relu;
  }
  if (residual_span) {
    auto [i, j] = *residual_span;
    if (i < 1 || j > n || i > j)
      throw ConfigError("residual span out of range");
    if (dims[i - 1] != dims[j])
      throw ConfigError("residual span endpoints have mismatched widths");
    span_ = residual_span;
  }
}

void MlpBlock::init(Rng& rng) {
  for (auto& l : layers_) {
    const double bound = std::sqrt(1.0 / static_cast<double>(l.w.cols()));
    for (Eigen::Index i = 0; i < l.w.rows(); ++i)
      for (Eigen::Index j = 0; j < l.w.cols(); ++j)
        l.w(i, j) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < l.b.rows(); ++i)
      l.b(i, 0) = rng.uniform(-bound, bound);
  }
}

void MlpBlock::zero_last_layer() {
  layers_.back().w.setZero();
  layers_.back().b.setZero();
}

Mat MlpBlock::forward(const Mat& x, MlpTape* tape, const Mat* per_layer_add,
                      const Mat* first_preact_add) const {
  const int n = static_cast<int>(layers_.size());
  if (x.cols() != layers_.front().w.cols())
    throw InputError("MlpBlock forward: input width mismatch");
  if (tape) {
    tape->inputs.assign(n, Mat());
    tape->outputs.assign(n, Mat());
    tape->preacts.assign(n, Mat());
    tape->injected.assign(n, 0);
    tape->inject_width = per_layer_add ? static_cast<int>(per_layer_add->cols()) : 0;
    tape->block_input = x;
  }
  Mat cur = x;
  Mat residual_src;  // input of layer span_->first, captured pre-injection
  for (int k = 0; k < n; ++k) {
    const auto& l = layers_[k];
    if (span_ && span_->first == k + 1) residual_src = cur;
    Mat in = cur;
    const bool inject_here = per_layer_add && in.cols() == per_layer_add->cols();
    if (inject_here) {
      in += *per_layer_add;
      if (tape) tape->injected[k] = 1;
    }
    Mat z = (in * l.w.transpose()).rowwise() + l.b.col(0).transpose();
    if (k == 0 && first_preact_add) {
      if (z.cols() != first_preact_add->cols())
        throw InputError("first_preact_add width mismatch");
      z += *first_preact_add;
    }
    Mat a = apply_act(l.act, z);
    if (span_ && span_->second == k + 1) a += residual_src;
    if (tape) {
      tape->inputs[k] = in;
      tape->outputs[k] = a;
      if (l.act == Act::Softplus) tape->preacts[k] = z;
    }
    cur = std::move(a);
  }
  return cur;
}

MlpGrads MlpBlock::backward(const MlpTape& tape, const Mat& dy,
                            bool had_per_layer_add,
                            bool had_first_preact_add) const {
  const int n = static_cast<int>(layers_.size());
  MlpGrads g;
  g.dw.resize(n);
  g.db.resize(n);
  if (had_per_layer_add)
    g.d_per_layer_add = Mat::Zero(dy.rows(), tape.inject_width);

  Mat d_out = dy;           // gradient w.r.t. layer k's post-residual output
  Mat d_residual_src;       // pending gradient for the residual source
  for (int k = n - 1; k >= 0; --k) {
    const auto& l = layers_[k];
    if (span_ && span_->second == k + 1) d_residual_src = d_out;
    const Mat& a_pre_res = tape.outputs[k];
    // outputs[] stores post-residual activations; the activation derivative
    // for ReLU/Sigmoid needs the pre-residual value. Recover it by
    // subtracting the residual source where applicable.
    Mat a = a_pre_res;
    if (span_ && span_->second == k + 1) {
      // residual source = input of layer span_->first (pre-injection)
      const Mat& src = (span_->first - 1 == 0) ? tape.block_input
                                               : tape.outputs[span_->first - 2];
      a -= src;
    }
    Mat dz = d_out.cwiseProduct(act_grad_from_output(l.act, a, tape.preacts[k]));
    g.dw[k].noalias() = dz.transpose() * tape.inputs[k];
    g.db[k] = dz.colwise().sum().transpose();
    if (k == 0 && had_first_preact_add) g.d_first_preact_add = dz;
    Mat d_in = dz * l.w;  // gradient w.r.t. layer input (post-injection)
    if (had_per_layer_add && tape.injected[k]) g.d_per_layer_add += d_in;
    if (span_ && span_->first == k + 1 && d_residual_src.size() > 0) {
      d_in += d_residual_src;
      d_residual_src.resize(0, 0);
    }
    d_out = std::move(d_in);
  }
  // A residual source at layer 1 feeds the block input directly.
  if (d_residual_src.size() > 0) d_out += d_residual_src;
  g.dx = std::move(d_out);
  return g;
}

}  // namespace wavefield::core
