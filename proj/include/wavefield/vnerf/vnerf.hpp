// The radiance field. Maps 3D points and view directions to density and
// color through two networks,
//
//   mlp1: PE(x,y,z)            ->  sigma = softplus(raw + bias), plus feature
//   mlp2: feature (+) PE(th,ph) ->  rgb = sigmoid
//
// and renders rays by stratified quadrature of the volume-rendering
// integral: the span [t_near, t_far] splits into n equal bins of width
// delta, one sample per bin (jittered by an optional generator, midpoint
// otherwise), and
//
//   C = sum_i T_i (1 - e^{-sigma_i delta}) c_i,   T_i = e^{-sum_{j<i} sigma_j delta}.
//
// Depth uses the same weights with c_i replaced by the sample position t_i.
// Using the bin width (not inter-sample spacing) as delta makes the
// homogeneous-medium opacity exact by telescoping, jitter or not. Rays that
// accumulate no weight render as black with zero depth; that convention is
// part of the data format.
//
// Rendering accepts any Field, so analytic test fields drive the same
// quadrature as the learned model.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wavefield/common.hpp"
#include "wavefield/core/adam.hpp"
#include "wavefield/core/mlp.hpp"
#include "wavefield/enc/encoding.hpp"
#include "wavefield/io/png.hpp"
#include "wavefield/pose.hpp"

namespace wavefield::vnerf {

struct Ray {
  Eigen::Vector3d origin{0, 0, 0};
  Eigen::Vector3d direction{1, 0, 0};  // unit within 1e-9
  double t_near = 0.05;
  double t_far = 10.0;

  void validate() const;  // throws InputError on a degenerate ray
};

// Anything that answers density and color at world points. `points` and
// `dirs` are row-aligned N x 3 (directions unit); outputs are sigma (N,
// non-negative) and rgb (N x 3, in the unit cube).
class Field {
 public:
  virtual ~Field() = default;
  virtual void query(const Mat& points, const Mat& dirs, Vec* sigma,
                     Mat* rgb) const = 0;
};

struct VnerfConfig {
  int width = 64;          // hidden width of both networks
  int pos_frequencies = 10;
  int dir_frequencies = 4;
  // World box the spatial encoding normalizes against; samples outside
  // clamp. Matches the room extent for enclosed scenes.
  std::array<double, 3> bounds_min{{-4.0, -4.0, 0.0}};
  std::array<double, 3> bounds_max{{4.0, 4.0, 3.0}};
  // Added to the raw density before softplus; a negative start renders the
  // fresh field mostly transparent, which trains faster against sparse
  // geometry.
  double density_bias = -2.0;

  int pos_in() const { return 3 * (2 * pos_frequencies + 1); }
  int dir_in() const { return 2 * (2 * dir_frequencies + 1); }
  void validate() const;  // throws ConfigError
};

struct RadianceTape {
  core::MlpTape t1, t2;
  Mat raw1;   // N x (1 + width): col 0 = raw density, rest = feature
  Vec sigma;  // N, post softplus(raw + bias)
  Mat rgb;    // N x 3
};

struct RadianceGrads {
  core::MlpGrads g1, g2;
};

// Gradient buffers mirroring the field's parameters; bind_parameters sizes
// them and pairs each with its value matrix in fixed (checkpoint) order.
struct RadianceParamGrads {
  std::vector<Mat> w1, b1, w2, b2;
};

class RadianceField final : public Field {
 public:
  RadianceField() = default;
  RadianceField(const VnerfConfig& cfg, std::uint64_t seed);

  const VnerfConfig& config() const { return cfg_; }

  // Make the density exactly zero everywhere: the sigma row of the last
  // density layer is cleared and its bias driven far enough negative that
  // softplus underflows to 0.0. Every ray then renders as background with
  // zero depth, exactly. (Training from this state is pointless - the
  // density gradient underflows with it - so trainers keep the random
  // init.)
  void zero_density();

  // Encode world points/directions and run both networks. `dirs` rows must
  // be unit; points clamp to the configured box.
  void forward(const Mat& points, const Mat& dirs, RadianceTape* tape,
               Vec* sigma, Mat* rgb) const;
  void query(const Mat& points, const Mat& dirs, Vec* sigma,
             Mat* rgb) const override;

  // d_sigma / d_rgb are gradients w.r.t. the activated outputs.
  RadianceGrads backward(const RadianceTape& tape, const Vec& d_sigma,
                         const Mat& d_rgb) const;

  // Fixed registration order: density w0/b0..w3/b3, color w0/b0..w2/b2.
  core::ParamRefs bind_parameters(RadianceParamGrads* grads = nullptr);
  std::vector<std::pair<std::string, Mat>> export_arrays() const;
  void import_arrays(const std::vector<std::pair<std::string, Mat>>& arrays);

  core::MlpBlock& density_mlp() { return mlp1_; }
  core::MlpBlock& color_mlp() { return mlp2_; }

 private:
  VnerfConfig cfg_;
  core::MlpBlock mlp1_;  // PE(xyz) -> 1 + width   (Identity head)
  core::MlpBlock mlp2_;  // feature ++ PE(dir) -> 3 (Sigmoid head)
};

// ---- quadrature ---------------------------------------------------------

// One stratified sample per bin: t_i = t_near + (i + u_i) * delta with
// u_i ~ U[0,1) from `rng`, or u_i = 1/2 (midpoint rule) when rng is null.
Vec sample_ts(const Ray& ray, int n_samples, Rng* rng);

struct RayRender {
  Eigen::Vector3d color{0, 0, 0};
  double depth = 0.0;
  double opacity = 0.0;  // sum of weights = 1 - final transmittance
  double delta = 0.0;    // bin width the quadrature used
  Vec t;                 // sample positions
  Vec sigma;             // sampled densities
  Vec weights;           // T_i * (1 - e^{-sigma_i delta})
  Vec transmittance;     // T_i before each sample (starts at 1)
};

// Quadrature given already-sampled densities/colors at positions `t` with
// common bin width `delta`. The building block under every render call.
RayRender integrate_ray(const Vec& t, double delta, const Vec& sigma,
                        const Mat& rgb);

// Reverse-mode step through integrate_ray: gradients of a scalar loss
// w.r.t. the per-sample densities and colors, given its gradients w.r.t.
// the rendered color and depth. `rgb` must be the N x 3 sample colors the
// forward pass saw. Appends nothing; outputs are overwritten.
void integrate_ray_backward(const RayRender& rr, const Mat& rgb,
                            const Eigen::Vector3d& d_color, double d_depth,
                            Vec* d_sigma, Mat* d_rgb);

// Sample the field along the ray and integrate. n_samples >= 2.
RayRender render_ray(const Field& field, const Ray& ray, int n_samples,
                     Rng* rng = nullptr);
Eigen::Vector3d render_color(const Field& field, const Ray& ray,
                             int n_samples, Rng* rng = nullptr);
double render_depth(const Field& field, const Ray& ray, int n_samples,
                    Rng* rng = nullptr);

// Pinhole render on the analytic renderer's pixel grid (row 0 = top, pixel
// centers, vertical field of view). One batched field query covers the
// whole image. Outputs: rgb 3-channel, depth 1-channel, row-major.
void render_image(const Field& field, const Pose& pose, int width, int height,
                  double fov_deg, int n_samples, double t_near, double t_far,
                  io::Image* rgb, io::Image* depth, Rng* rng = nullptr);

// Mean over rays of the squared color error, summed over channels; both
// matrices are R x 3.
double color_loss(const Mat& pred, const Mat& target);

}  // namespace wavefield::vnerf
