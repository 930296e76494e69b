// Visual conditioning path for the acoustic field: a frozen random
// convolutional encoder turns rendered RGB and depth views into fixed
// feature vectors, and a small trainable MLP ("the mapper") projects the
// concatenated pair into the embedding e that the acoustic field fuses into
// its first network.
//
// The encoder's weights are drawn once from a seed and never trained — its
// job is to be a fixed, deterministic, information-preserving image
// summary, not a learned one. The mapper's output layer starts at zero, so
// a fresh audio-visual model is exactly the vision-free model.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wavefield/common.hpp"
#include "wavefield/core/adam.hpp"
#include "wavefield/core/mlp.hpp"
#include "wavefield/io/png.hpp"

namespace wavefield::avmap {

// The encoder's fixed input resolution and per-image feature size
// (32 channels over a 4x4 grid after four pooling stages).
inline constexpr int kEncoderInput = 64;
inline constexpr int kFeatureDim = 512;

// Four stages of 3x3 convolution (zero padding) + ReLU + 2x2 average
// pooling: channels 3 -> 8 -> 16 -> 32 -> 32, resolution 64 -> 4.
class FrozenEncoder {
 public:
  explicit FrozenEncoder(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  // rgb: kEncoderInput square, 3 channels. Values in [0,1].
  Vec encode_rgb(const io::Image& rgb) const;
  // depth: kEncoderInput square, 1 channel, already normalized to [0,1];
  // the channel is broadcast to the 3-channel stack input.
  Vec encode_depth(const io::Image& depth) const;

 private:
  struct ConvStage {
    int in_ch = 0, out_ch = 0;
    std::vector<Mat> k;  // out_ch * in_ch kernels, 3x3, row-major pairing
    Vec b;               // out_ch
  };

  Vec run(std::vector<Mat> chans) const;

  std::uint64_t seed_ = 0;
  std::vector<ConvStage> stages_;
};

// Encode one rendered view pair. `depth` carries meters; it is divided by
// `scene_diameter` (then clamped to [0,1]) before encoding so features are
// scale-free. Images must already be resized to kEncoderInput square
// (io::resize_bilinear).
std::pair<Vec, Vec> encode_views(const FrozenEncoder& enc,
                                 const io::Image& rgb, const io::Image& depth,
                                 double scene_diameter);

struct AvMapperConfig {
  int width = 128;              // c: must equal the acoustic field's width
  int feature_dim = kFeatureDim;  // per-modality feature size

  int input_dim() const { return 2 * feature_dim; }
  void validate() const;
};

struct MapperParamGrads {
  std::vector<Mat> w, b;
};

// 3-layer MLP, input 2*feature_dim (rgb ⊕ depth), ReLU hidden layers,
// linear c-dimensional output e.
class AvMapper {
 public:
  AvMapper() = default;
  // Hidden layers random from `seed`; when zero_output (the default) the
  // final layer is zeroed, making the initial embedding exactly 0.
  AvMapper(const AvMapperConfig& cfg, std::uint64_t seed,
           bool zero_output = true);

  const AvMapperConfig& config() const { return cfg_; }

  // feats: B x input_dim rows of [rgb_feat ⊕ depth_feat] -> B x width.
  Mat map(const Mat& feats, core::MlpTape* tape = nullptr) const;
  Vec map_one(const Vec& rgb_feat, const Vec& depth_feat) const;

  // d_e: B x width gradient of the loss w.r.t. the embedding rows.
  core::MlpGrads backward(const core::MlpTape& tape, const Mat& d_e) const;

  // Fixed-order parameter registry (also the checkpoint array order).
  core::ParamRefs bind_parameters(MapperParamGrads* grads = nullptr);

  std::vector<std::pair<std::string, Mat>> export_arrays() const;
  void import_arrays(const std::vector<std::pair<std::string, Mat>>& arrays);

 private:
  AvMapperConfig cfg_;
  core::MlpBlock mlp_;
};

}  // namespace wavefield::avmap
