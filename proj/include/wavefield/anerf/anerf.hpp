// The acoustic field. Maps a listener pose and one query per frequency bin to
// a mixture mask m_m in [0,1] (overall magnitude change) and a difference
// mask m_d in [-1,1] (left/right channel split):
//
//   mlp1: PE(x,y) (+) PE(f_norm)  ->  sigmoid head m_m, plus a width-c feature
//   mlp2: feature (+ direction)   ->  m_d = 2*sigmoid - 1
//
// Direction enters only the second network, as a learnable 4-row embedding
// interpolated at the listener-relative source angle; the default fusion adds
// it to the input of every mlp2 layer, with concatenation behind a flag. An
// optional visual embedding conditions mlp1 ("add input" default). Binaural
// spectrograms compose as s_m = m_m.*|S|, s_d = m_d.*s_m, s_l/r = s_m +- s_d
// and invert with the source's phase.
//
// Batches are row-aligned: each pose occupies a contiguous block of
// queries-per-pose rows, so per-pose conditioning vectors are replicated
// across the block and per-pose gradients are block sums.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wavefield/common.hpp"
#include "wavefield/core/adam.hpp"
#include "wavefield/core/mlp.hpp"
#include "wavefield/dsp/stft.hpp"
#include "wavefield/enc/encoding.hpp"
#include "wavefield/io/wav.hpp"
#include "wavefield/pose.hpp"

namespace wavefield::anerf {

enum class DirectionFusion { kPerLayerAdd, kConcat };
enum class AvFusion { kAddInput, kConcat, kAddAll };

std::string to_string(DirectionFusion f);
std::string to_string(AvFusion f);
DirectionFusion direction_fusion_from_string(const std::string& s);
AvFusion av_fusion_from_string(const std::string& s);

struct AnerfConfig {
  int width = 128;     // feature width c
  int num_bins = 257;  // F, from the STFT configuration
  int pe_frequencies = 10;
  bool coordinate_transform = true;
  DirectionFusion direction_fusion = DirectionFusion::kPerLayerAdd;
  AvFusion av_fusion = AvFusion::kAddInput;
  bool use_av = false;  // whether the model conditions on a visual embedding
  bool refine = false;  // learned 3x3 refinement of the composed channels
  std::array<double, 2> bounds_min{{-1.0, -1.0}};
  std::array<double, 2> bounds_max{{1.0, 1.0}};

  int scalar_dim() const { return 2 * pe_frequencies + 1; }
  int mlp1_in() const {
    return 3 * scalar_dim() +
           (use_av && av_fusion == AvFusion::kConcat ? width : 0);
  }
  int mlp2_in() const {
    return width + (direction_fusion == DirectionFusion::kConcat ? width : 0);
  }
  void validate() const;
};

struct MaskPair {
  Vec m_m;  // F, in [0,1]
  Vec m_d;  // F, in [-1,1]
};

// Encoded inputs for a forward pass; rows = poses x queries_per_pose.
struct FieldBatch {
  Mat enc_in;       // R x mlp1_in
  Mat dir_rows;     // R x c, interpolated direction embedding per row
  Mat dir_weights;  // R x 4: (row_lo, w_lo, row_hi, w_hi)
  Mat av_rows;      // R x c for additive visual fusion, else empty
  int queries_per_pose = 0;
  int rows() const { return static_cast<int>(enc_in.rows()); }
};

struct FieldTape {
  core::MlpTape t1, t2;
  Mat m_m, m_d;  // R x 1 post-activation
  Mat feature;   // R x c
  bool has_av = false;
};

struct FieldGrads {
  core::MlpGrads g1, g2;
  Mat d_dir_table;  // 4 x c
  Mat d_av_rows;    // R x c (empty when the batch carried no visual rows)
};

// Gradient buffers mirroring one field's parameters; bind_parameters sizes
// them and pairs each with its value matrix in fixed (checkpoint) order.
struct FieldParamGrads {
  std::vector<Mat> w1, b1, w2, b2;
  Mat dir_table;
  Mat refine_l, refine_r;
};

class AcousticField {
 public:
  AcousticField() = default;
  AcousticField(const AnerfConfig& cfg, std::uint64_t seed);

  const AnerfConfig& config() const { return cfg_; }

  // Zero the two mask heads: a fresh model answers m_m = 0.5, m_d = 0
  // everywhere (each activation's zero point). Feature rows keep their
  // random init so the second network is informative from the first step.
  void zero_heads();

  // Encode poses against one source. `embeddings` must be one row per pose
  // (width c) exactly when the model was built with use_av. `queries` are
  // already-normalized scalars fed to the positional encoding (the mask
  // model queries every bin's f_norm; pass an empty pointer for that
  // default).
  FieldBatch make_batch(const std::vector<Pose>& poses,
                        const std::array<double, 2>& source,
                        const Mat* embeddings = nullptr,
                        const Vec* queries = nullptr) const;

  void forward(const FieldBatch& batch, FieldTape* tape, Vec* m_m,
               Vec* m_d) const;
  FieldGrads backward(const FieldBatch& batch, const FieldTape& tape,
                      const Vec& d_mm, const Vec& d_md) const;

  MaskPair predict_masks(const Pose& pose, const std::array<double, 2>& source,
                         const Vec* visual_embedding = nullptr) const;

  // Fixed-order parameter registry; also defines the checkpoint array order.
  // Passing null grads binds value pointers only (save/load paths).
  core::ParamRefs bind_parameters(FieldParamGrads* grads = nullptr);

  std::vector<std::pair<std::string, Mat>> export_arrays() const;
  void import_arrays(const std::vector<std::pair<std::string, Mat>>& arrays);

  const Mat& refine_kernel_l() const { return refine_l_; }
  const Mat& refine_kernel_r() const { return refine_r_; }

  // Normalized f in [-1,1] for every bin: 2f/(F-1) - 1.
  Vec default_queries() const;

 private:
  AnerfConfig cfg_;
  core::MlpBlock mlp1_;  // -> 1 + c raw outputs (identity; head split here)
  core::MlpBlock mlp2_;  // -> 1 raw output
  enc::DirectionEmbedding dir_;
  Mat refine_l_, refine_r_;  // 3x3, identity-initialized
};

// Shared pose/query encoder used by both field variants: expands each pose
// into one row per query scalar, filling the positional-encoding block
// (columns [0, 3*(2*pe_frequencies+1))), the interpolated direction rows, and
// the interpolation weights. `enc_cols` sizes enc_in; any extra columns are
// left for the caller (visual concatenation).
FieldBatch encode_pose_queries(const std::vector<Pose>& poses,
                               const std::array<double, 2>& source,
                               const Vec& queries, int pe_frequencies,
                               bool coordinate_transform,
                               const std::array<double, 2>& bounds_min,
                               const std::array<double, 2>& bounds_max,
                               const enc::DirectionEmbedding& dir,
                               int enc_cols);

// ---- composition and loss -------------------------------------------------

struct BinauralSpec {
  Mat s_m, s_l, s_r;  // magnitudes, F x W
};

// Zero-padded "same" 2D convolution and its pieces (used by the refinement
// kernels and their gradients).
Mat conv2d_same(const Mat& x, const Mat& k);
Mat conv2d_same_adjoint(const Mat& dy, const Mat& k);
Mat conv2d_kernel_grad(const Mat& x, const Mat& dy, int kh, int kw);

BinauralSpec compose_binaural(const Mat& source_mag, const MaskPair& masks,
                              const Mat* kernel_l = nullptr,
                              const Mat* kernel_r = nullptr);

// Sum of three per-element mean squared distances (mixture, left, right).
double acoustic_loss(const BinauralSpec& pred, const BinauralSpec& target);
// d(loss)/d(pred) with the same mean reduction.
BinauralSpec acoustic_loss_grad(const BinauralSpec& pred,
                                const BinauralSpec& target);

// One pose's loss and its gradient w.r.t. the mask vectors (and, when
// refinement kernels are supplied, w.r.t. the kernels). target.s_m is the
// caller's mixture target, conventionally (t_l + t_r) / 2.
struct PoseLossGrad {
  double loss = 0.0;
  Vec d_mm, d_md;
  Mat d_kernel_l, d_kernel_r;  // empty without refinement
};
PoseLossGrad pose_loss_grad(const MaskPair& masks, const Mat& source_mag,
                            const BinauralSpec& target,
                            const Mat* kernel_l = nullptr,
                            const Mat* kernel_r = nullptr);

// stft -> masks -> compose -> per-channel istft with the source phase.
io::Audio synthesize(const AcousticField& model, const Pose& pose,
                     const io::Audio& source,
                     const std::array<double, 2>& source_pos,
                     const dsp::StftConfig& stft_cfg,
                     const Vec* visual_embedding = nullptr);

// ---- multiple sources -------------------------------------------------

std::vector<MaskPair> multi_source_masks(
    const std::vector<const AcousticField*>& models, const Pose& pose,
    const std::vector<std::array<double, 2>>& sources,
    const std::vector<const Vec*>* embeddings = nullptr);

// All sources emit `source`; per-source composed channel magnitudes sum and
// invert with the shared clip's phase.
io::Audio synthesize_multi(const std::vector<const AcousticField*>& models,
                           const Pose& pose, const io::Audio& source,
                           const std::vector<std::array<double, 2>>& sources,
                           const dsp::StftConfig& stft_cfg,
                           const std::vector<const Vec*>* embeddings = nullptr);

}  // namespace wavefield::anerf
