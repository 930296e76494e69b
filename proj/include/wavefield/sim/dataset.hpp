// Dataset generation: pose sampling in the free region, per-pose source
// clips, oracle targets, optional analytic renders and impulse responses,
// deterministic train/val split, manifests on disk.
#pragma once

#include <cstdint>
#include <string>

#include "wavefield/dsp/stft.hpp"
#include "wavefield/io/wav.hpp"
#include "wavefield/pose.hpp"
#include "wavefield/sim/scene.hpp"

namespace wavefield::sim {

struct DatasetParams {
  int n_poses = 500;
  std::uint64_t seed = 0;
  double split_ratio = 0.8;
  double clip_seconds = 1.0;
  dsp::StftConfig stft;
  bool write_images = true;  // effective only when the scene has a room
  int image_size = 64;
  bool write_ir = false;
};

// One pose uniform over the listener rectangle with uniform heading;
// rejects poses closer than min_source_distance to any source, inside a
// primitive, or where the summed source gain would exceed the mixture
// mask's [0,1] range. Throws ConfigError when rejection cannot terminate.
Pose sample_pose(const SceneSpec& scene, Rng& rng);

// Seeded one-second-scale mono clip: "noise" (broadband), "sine_mix"
// (five log-spaced partials), or a WAV path (first channel, resampled and
// tiled to length).
io::Audio make_source_clip(const std::string& kind, double seconds,
                           int sample_rate, Rng& rng);

// Writes <out_dir>/{scene.json, train.json, val.json, audio/, img/, ir/}.
// Bitwise deterministic for identical (scene, params).
void generate_dataset(const SceneSpec& scene, const DatasetParams& params,
                      const std::string& out_dir);

}  // namespace wavefield::sim
