// Fits a radiance field to a scene's analytic renders: sample camera poses,
// render ground truth, minimize the per-ray squared color error with Adam
// over random ray batches, report the held-out PSNR.
#pragma once

#include <cstdint>
#include <vector>

#include "wavefield/core/adam.hpp"
#include "wavefield/sim/scene.hpp"
#include "wavefield/vnerf/vnerf.hpp"

namespace wavefield::train {

struct VnerfTrainConfig {
  int n_poses = 20;       // cameras sampled in the scene's clear interior
  int image_size = 32;    // square ground-truth renders
  double fov_deg = 60.0;
  int n_samples = 64;     // quadrature samples per ray
  int epochs = 10;
  // 512 rays x 64 samples keeps step activations under the allocator's
  // 32 MiB mmap cap, so the big per-step buffers recycle through the heap.
  int batch_rays = 512;
  double val_fraction = 0.2;  // held-out poses for the PSNR report
  double t_near = 0.05;
  double t_far = 0.0;         // <= 0: use the scene diameter
  core::AdamConfig adam;
  std::uint64_t seed = 0;

  VnerfTrainConfig() {
    adam.lr_init = 5e-3;
    adam.lr_final = 5e-4;
  }
  void validate() const;  // throws ConfigError
};

struct VnerfTrainResult {
  std::vector<double> epoch_loss;  // mean per-ray color loss, one per epoch
  double val_psnr = 0.0;           // dB over held-out renders (midpoint rule)
  int n_train_poses = 0;
  int n_val_poses = 0;
};

// Trains in place. Throws TrainingError when the loss turns non-finite.
VnerfTrainResult train_vnerf(vnerf::RadianceField& field,
                             const sim::SceneSpec& scene,
                             const VnerfTrainConfig& cfg);

}  // namespace wavefield::train
