#include "wavefield/sim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "wavefield/io/manifest.hpp"
#include "wavefield/io/png.hpp"
#include "wavefield/sim/render.hpp"
#include "wavefield/sim/simulate.hpp"

namespace wavefield::sim {

namespace fs = std::filesystem;

namespace {

std::string sample_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%05d", i);
  return buf;
}

bool inside_primitives(const SceneSpec& scene, double x, double y, double z,
                       double margin) {
  if (!scene.room) return false;
  for (const auto& s : scene.room->spheres) {
    const double dx = x - s.center[0], dy = y - s.center[1], dz = z - s.center[2];
    if (dx * dx + dy * dy + dz * dz <
        (s.radius + margin) * (s.radius + margin))
      return true;
  }
  for (const auto& b : scene.room->boxes) {
    if (x > b.min[0] - margin && x < b.max[0] + margin &&
        y > b.min[1] - margin && y < b.max[1] + margin &&
        z > b.min[2] - margin && z < b.max[2] + margin)
      return true;
  }
  return false;
}

}  // namespace

Pose sample_pose(const SceneSpec& scene, Rng& rng) {
  constexpr int kMaxTries = 100000;
  constexpr double kMargin = 0.1;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    Pose p;
    p.x = rng.uniform(scene.bounds_min[0], scene.bounds_max[0]);
    p.y = rng.uniform(scene.bounds_min[1], scene.bounds_max[1]);
    p.z = scene.listener_height;
    p.theta = rng.uniform(0.0, 2.0 * kPi);
    p.phi = 0.0;

    bool ok = true;
    double gain_sum = 0.0;
    for (const auto& src : scene.sources) {
      const double d = std::hypot(src.x - p.x, src.y - p.y);
      if (d < scene.min_source_distance) {
        ok = false;
        break;
      }
      gain_sum += 1.0 / std::max(d, scene.d_min);
    }
    // The mixture mask lives in [0,1]; keep the oracle inside it.
    if (!ok || gain_sum > 1.0 + 1e-12) continue;
    if (scene.room) {
      const auto& r = *scene.room;
      if (p.x < r.min[0] + kMargin || p.x > r.max[0] - kMargin ||
          p.y < r.min[1] + kMargin || p.y > r.max[1] - kMargin ||
          p.z < r.min[2] + kMargin || p.z > r.max[2] - kMargin)
        continue;
      if (inside_primitives(scene, p.x, p.y, p.z, kMargin)) continue;
    }
    return p;
  }
  throw ConfigError(
      "pose sampling: no admissible pose found; the free region is empty "
      "or nearly so");
}

io::Audio make_source_clip(const std::string& kind, double seconds,
                           int sample_rate, Rng& rng) {
  const int n = std::max(1, static_cast<int>(std::lround(seconds * sample_rate)));
  io::Audio clip;
  clip.sample_rate = sample_rate;
  if (kind == "noise") {
    clip.samples = Mat(1, n);
    for (int i = 0; i < n; ++i) clip.samples(0, i) = 0.15 * rng.normal();
    return clip;
  }
  if (kind == "sine_mix") {
    clip.samples = Mat::Zero(1, n);
    const double lo = std::log(80.0);
    const double hi = std::log(std::min(8000.0, 0.45 * sample_rate));
    for (int k = 0; k < 5; ++k) {
      const double freq = std::exp(rng.uniform(lo, hi));
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      const double amp = 1.0 / (k + 1);
      for (int i = 0; i < n; ++i)
        clip.samples(0, i) +=
            amp * std::sin(2.0 * kPi * freq * i / sample_rate + phase);
    }
    const double peak = clip.samples.cwiseAbs().maxCoeff();
    if (peak > 0) clip.samples *= 0.5 / peak;
    return clip;
  }
  // Anything else is a path to a WAV file used as clip material.
  io::Audio src = io::read_wav(kind);
  if (src.sample_rate != sample_rate) src = io::resample_linear(src, sample_rate);
  clip.samples = Mat(1, n);
  const int m = src.length();
  if (m < 1) throw InputError("source clip file is empty: " + kind);
  for (int i = 0; i < n; ++i) clip.samples(0, i) = src.samples(0, i % m);
  return clip;
}

void generate_dataset(const SceneSpec& scene, const DatasetParams& params,
                      const std::string& out_dir) {
  scene.validate();
  params.stft.validate();
  if (params.n_poses < 10)
    throw ConfigError("generate_dataset: need at least 10 poses");
  if (params.split_ratio <= 0.0 || params.split_ratio >= 1.0)
    throw ConfigError("generate_dataset: split_ratio must lie in (0,1)");
  for (const auto& src : scene.sources)
    if (src.audio != scene.sources.front().audio)
      throw ConfigError(
          "generate_dataset: all sources must share one audio kind (they "
          "emit the same clip; magnitudes mix additively)");

  const int fs = params.stft.sample_rate;
  const bool images = params.write_images && scene.room.has_value();
  fs::create_directories(fs::path(out_dir) / "audio");
  if (images) fs::create_directories(fs::path(out_dir) / "img");
  if (params.write_ir) fs::create_directories(fs::path(out_dir) / "ir");

  const double diameter = scene_diameter(scene);
  double ir_peak = 0.0;
  std::vector<io::SampleRecord> records(params.n_poses);
  for (int i = 0; i < params.n_poses; ++i) {
    Rng pose_rng(seed_stream(params.seed, 0x100000ULL + i));
    Rng clip_rng(seed_stream(params.seed, 0x200000ULL + i));
    const Pose pose = sample_pose(scene, pose_rng);
    const io::Audio clip = make_source_clip(scene.sources.front().audio,
                                            params.clip_seconds, fs, clip_rng);
    const io::Audio target = simulate_binaural(scene, pose, clip, params.stft);

    io::SampleRecord& rec = records[i];
    rec.id = sample_id(i);
    rec.pose = pose;
    rec.source_audio = "audio/" + rec.id + "_src.wav";
    rec.target_audio = "audio/" + rec.id + "_tgt.wav";
    io::write_wav((fs::path(out_dir) / rec.source_audio).string(), clip);
    io::write_wav((fs::path(out_dir) / rec.target_audio).string(), target);

    if (images) {
      io::Image rgb, depth;
      render_analytic(scene, pose, params.image_size, params.image_size,
                      &rgb, &depth);
      for (auto& v : depth.data)
        v = std::clamp(v / static_cast<float>(diameter), 0.0f, 1.0f);
      rec.rgb = "img/" + rec.id + "_rgb.png";
      rec.depth = "img/" + rec.id + "_depth.png";
      io::write_png((fs::path(out_dir) / rec.rgb).string(), rgb);
      io::write_png((fs::path(out_dir) / rec.depth).string(), depth);
    }
    if (params.write_ir) {
      const io::Audio ir = simulate_ir(scene, pose, fs);
      ir_peak = std::max(ir_peak, ir.samples.cwiseAbs().maxCoeff());
      rec.ir = "ir/" + rec.id + "_ir.wav";
      io::write_wav((fs::path(out_dir) / rec.ir).string(), ir);
    }
  }

  std::vector<int> order(params.n_poses);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(seed_stream(params.seed, 0x53504C49ULL));
  split_rng.shuffle(order);
  const int n_train =
      static_cast<int>(std::floor(params.n_poses * params.split_ratio));
  if (n_train < 1 || n_train >= params.n_poses)
    throw ConfigError("generate_dataset: split leaves an empty subset");

  const auto make_manifest = [&](std::vector<int> idx, const char* split) {
    std::sort(idx.begin(), idx.end());
    io::DatasetManifest m;
    m.split = split;
    m.sample_rate = fs;
    m.bounds_min = scene.bounds_min;
    m.bounds_max = scene.bounds_max;
    for (const auto& src : scene.sources) m.sources.push_back({src.x, src.y});
    m.scene = scene_to_json(scene);
    m.stft = io::stft_to_json(params.stft);
    m.has_images = images;
    m.has_ir = params.write_ir;
    m.ir_length = params.write_ir ? scene.ir.length : 0;
    m.ir_norm = params.write_ir ? 1.05 * std::max(ir_peak, 1e-12) : 1.0;
    for (int i : idx) m.samples.push_back(records[i]);
    return m;
  };

  save_manifest((fs::path(out_dir) / "train.json").string(),
                make_manifest({order.begin(), order.begin() + n_train}, "train"));
  save_manifest((fs::path(out_dir) / "val.json").string(),
                make_manifest({order.begin() + n_train, order.end()}, "val"));
  save_scene((fs::path(out_dir) / "scene.json").string(), scene);
}

}  // namespace wavefield::sim
