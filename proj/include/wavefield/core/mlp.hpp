// Minimal dense-network engine: batched MLP blocks with an explicit tape for
// reverse-mode gradients.
//
// A block is a stack of linear layers with per-layer activations and one
// optional residual connection: the input of layer `span.first` is added to
// the (post-activation) output of layer `span.second`. Two additive side
// inputs cover the conditioning paths used by the acoustic field:
//   * per_layer_input_add  — a per-row vector added to the input of every
//     layer whose input width matches (direction-embedding injection);
//   * first_preact_add     — a per-row vector added to layer 1's
//     pre-activation (visual-embedding "add input" fusion).
// Rows of the batch are independent samples; gradients accumulate in fixed
// order, so results are bit-deterministic.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wavefield/common.hpp"

namespace wavefield::core {

enum class Act { Identity, Relu, Sigmoid, Softplus };

Mat apply_act(Act act, const Mat& z);
// Derivative expressed through the activation output a (and z for softplus).
Mat act_grad_from_output(Act act, const Mat& a, const Mat& z);

struct DenseLayer {
  Mat w;  // out x in
  Mat b;  // out x 1
  Act act = Act::Relu;
};

// Which layers a per-row additive side input feeds. kAllMatching adds the
// vector to every layer input whose width equals the vector's width.
enum class InjectMode { kNone, kAllMatching, kFirstPreact };

struct MlpTape {
  std::vector<Mat> inputs;   // input to each layer, side inputs already added
  std::vector<Mat> outputs;  // post-activation output of each layer (post-residual)
  std::vector<Mat> preacts;  // pre-activation (kept only for softplus layers)
  Mat block_input;           // raw block input (pre-injection)
  std::vector<char> injected;  // 1 where per_layer_add was applied
  int inject_width = 0;        // width of per_layer_add, 0 if none
};

struct MlpGrads {
  std::vector<Mat> dw;
  std::vector<Mat> db;  // out x 1 each
  Mat dx;                 // gradient w.r.t. the raw block input
  Mat d_per_layer_add;    // gradient w.r.t. the per-layer additive input (rows x width)
  Mat d_first_preact_add; // gradient w.r.t. the layer-1 pre-activation addend
};

class MlpBlock {
 public:
  MlpBlock() = default;

  // dims = {in, h1, ..., out}; hidden activations ReLU, last layer `last`.
  // residual_span uses 1-based layer indices (i, j), i <= j: input of layer i
  // is added to the activated output of layer j (widths must match).
  MlpBlock(const std::vector<int>& dims, Act last,
           std::optional<std::pair<int, int>> residual_span = std::nullopt);

  // Uniform init in [-sqrt(1/fan_in), sqrt(1/fan_in)], layer by layer.
  void init(Rng& rng);
  // Zero the final layer (weights and bias); used for mask heads so a fresh
  // model starts at the activation's zero point.
  void zero_last_layer();

  Mat forward(const Mat& x, MlpTape* tape = nullptr,
              const Mat* per_layer_add = nullptr,
              const Mat* first_preact_add = nullptr) const;

  // dy: gradient w.r.t. the block output. Side-input gradients are filled
  // only when the corresponding side input was passed to forward().
  MlpGrads backward(const MlpTape& tape, const Mat& dy,
                    bool had_per_layer_add = false,
                    bool had_first_preact_add = false) const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  const std::optional<std::pair<int, int>>& residual_span() const { return span_; }
  int in_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().w.cols()); }
  int out_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().w.rows()); }

 private:
  std::vector<DenseLayer> layers_;
  std::optional<std::pair<int, int>> span_;
};

}  // namespace wavefield::core
