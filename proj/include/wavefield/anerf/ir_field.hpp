// Impulse-response variant of the acoustic field. Instead of per-frequency
// masks over a source spectrogram, the first network maps PE(x,y) (+) PE(t/T)
// to a feature only, and the second network (with the same direction fusion
// as the mask model) emits the two channels' IR sample at that time query:
//
//   mlp1: PE(x,y) (+) PE(t_norm) -> width-c feature
//   mlp2: feature (+ direction)  -> (h_l(t), h_r(t)), identity outputs
//
// Querying t in {0..T-1} yields a two-channel time-domain impulse response.
// Training compares STFT magnitudes of predicted and reference responses, so
// an all-zero prediction is a stationary point (the magnitude's derivative
// vanishes at the origin); keep the random output initialization for
// training and use zero_output only to pin down the constant-output case.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wavefield/anerf/anerf.hpp"
#include "wavefield/common.hpp"
#include "wavefield/core/mlp.hpp"
#include "wavefield/enc/encoding.hpp"
#include "wavefield/io/wav.hpp"
#include "wavefield/pose.hpp"

namespace wavefield::anerf {

struct IrConfig {
  int width = 128;       // feature width c
  int ir_length = 2048;  // T samples per impulse response
  int pe_frequencies = 10;
  bool coordinate_transform = true;
  DirectionFusion direction_fusion = DirectionFusion::kPerLayerAdd;
  std::array<double, 2> bounds_min{{-1.0, -1.0}};
  std::array<double, 2> bounds_max{{1.0, 1.0}};

  int scalar_dim() const { return 2 * pe_frequencies + 1; }
  int mlp1_in() const { return 3 * scalar_dim(); }
  int mlp2_in() const {
    return width + (direction_fusion == DirectionFusion::kConcat ? width : 0);
  }
  void validate() const;
};

struct IrTape {
  core::MlpTape t1, t2;
  Mat feature;  // R x c
};

class IrField {
 public:
  IrField() = default;
  IrField(const IrConfig& cfg, std::uint64_t seed);

  const IrConfig& config() const { return cfg_; }

  // Zero the output layer: the field then answers a constant all-zero
  // response everywhere. Not a useful training start (see header comment).
  void zero_output();

  // One row per (pose, time query); reuses the mask model's batch layout
  // with time standing in for frequency. av_rows stays empty.
  FieldBatch make_batch(const std::vector<Pose>& poses,
                        const std::array<double, 2>& source) const;

  // R x 2 sample values (left, right), identity activation.
  Mat forward(const FieldBatch& batch, IrTape* tape) const;
  FieldGrads backward(const FieldBatch& batch, const IrTape& tape,
                      const Mat& d_out) const;

  // Query every t in {0..T-1} for one pose: a two-channel IR of length T.
  io::Audio predict_ir(const Pose& pose, const std::array<double, 2>& source,
                       int sample_rate = 22050) const;

  core::ParamRefs bind_parameters(FieldParamGrads* grads = nullptr);
  std::vector<std::pair<std::string, Mat>> export_arrays() const;
  void import_arrays(const std::vector<std::pair<std::string, Mat>>& arrays);

  // Normalized time query 2t/(T-1) - 1 for every sample index.
  Vec default_queries() const;

 private:
  IrConfig cfg_;
  core::MlpBlock mlp1_;  // -> c feature
  core::MlpBlock mlp2_;  // -> 2 raw outputs (left, right)
  enc::DirectionEmbedding dir_;
};

}  // namespace wavefield::anerf
