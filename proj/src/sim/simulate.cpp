#include "wavefield/sim/simulate.hpp"

#include <cmath>

#include "wavefield/enc/encoding.hpp"
#include "wavefield/sim/render.hpp"

namespace wavefield::sim {

namespace {

struct SourceGeometry {
  double dist;
  double g;    // 1/max(d, d_min)
  double rho;  // ild_alpha * sin(theta')
};

SourceGeometry source_geometry(const SceneSpec& scene, const Pose& pose,
                               const SourceSpec& src) {
  const double dx = src.x - pose.x, dy = src.y - pose.y;
  const double dist = std::hypot(dx, dy);
  const double theta_rel =
      enc::relative_direction(pose.x, pose.y, pose.theta, src.x, src.y);
  return {dist, 1.0 / std::max(dist, scene.d_min),
          scene.ild_alpha * std::sin(theta_rel)};
}

}  // namespace

double material_view_factor(const SceneSpec& scene, const Pose& pose) {
  if (scene.material.strength <= 0.0 || !scene.room) return 1.0;
  const int n = scene.material.rays;
  const double fov = scene.material.fov_deg * kPi / 180.0;
  const Eigen::Vector3d origin(pose.x, pose.y, pose.z);
  double weight = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = pose.theta - 0.5 * fov + (i + 0.5) * fov / n;
    const Eigen::Vector3d dir(std::cos(a), std::sin(a), 0.0);
    const RayHit hit = trace_scene(scene, origin, dir);
    if (hit.hit) weight += hit.absorption;
  }
  return 1.0 - scene.material.strength * (weight / n);
}

OracleMasks oracle_masks(const SceneSpec& scene, const Pose& pose,
                         int num_bins) {
  if (num_bins < 2) throw InputError("oracle_masks: need at least two bins");
  const double view = material_view_factor(scene, pose);
  Vec mix = Vec::Zero(num_bins);   // sum_i g_i A_i(f)
  Vec diff = Vec::Zero(num_bins);  // sum_i g_i A_i(f) rho_i
  for (const auto& src : scene.sources) {
    const SourceGeometry geo = source_geometry(scene, pose, src);
    for (int f = 0; f < num_bins; ++f) {
      const double f_norm = static_cast<double>(f) / (num_bins - 1);
      const double air = std::exp(-scene.air_absorption * f_norm * geo.dist);
      mix[f] += geo.g * air;
      diff[f] += geo.g * air * geo.rho;
    }
  }
  OracleMasks out;
  out.m_m = view * mix;
  out.m_d = (diff.array() / mix.array().max(1e-300)).matrix();
  return out;
}

io::Audio simulate_binaural(const SceneSpec& scene, const Pose& pose,
                            const io::Audio& source,
                            const dsp::StftConfig& cfg) {
  if (source.channels() < 1 || source.length() < cfg.win_length)
    throw InputError("simulate_binaural: source clip too short");
  const Vec mono = source.samples.row(0).transpose();
  const dsp::Spectrogram spec = dsp::stft(mono, cfg);
  const OracleMasks masks = oracle_masks(scene, pose, cfg.num_bins());

  const Mat s_m = masks.m_m.asDiagonal() * spec.magnitude;
  const Mat s_d = masks.m_d.asDiagonal() * s_m;
  const Mat left = s_m + s_d;
  const Mat right = s_m - s_d;

  io::Audio out;
  out.sample_rate = cfg.sample_rate;
  out.samples = Mat(2, source.length());
  out.samples.row(0) =
      dsp::istft(left, spec.phase, cfg, source.length()).transpose();
  out.samples.row(1) =
      dsp::istft(right, spec.phase, cfg, source.length()).transpose();
  return out;
}

io::Audio simulate_ir(const SceneSpec& scene, const Pose& pose,
                      int sample_rate) {
  const int T = scene.ir.length;
  const double beta = 3.0 * std::log(10.0) / scene.ir.t60;

  // Tail amplitude calibrated so full-length tail energy is tail_to_direct
  // times the unit-distance direct energy; geometric series in closed form.
  const double r = std::exp(-2.0 * beta / sample_rate);
  const double series = (1.0 - std::pow(r, T)) / (1.0 - r);
  const double tail_scale = std::sqrt(scene.ir.tail_to_direct / series);

  Mat h = Mat::Zero(2, T);
  int first_arrival = T;
  double wsum = 0.0, wleft = 0.0, wright = 0.0;
  for (const auto& src : scene.sources) {
    const SourceGeometry geo = source_geometry(scene, pose, src);
    const long n0 = std::lround(sample_rate * geo.dist / scene.ir.speed);
    if (n0 >= T)
      throw GeometryError("simulate_ir: direct delay exceeds the IR length");
    h(0, n0) += (1.0 + geo.rho) * geo.g;
    h(1, n0) += (1.0 - geo.rho) * geo.g;
    first_arrival = std::min(first_arrival, static_cast<int>(n0));
    const double w = geo.g * geo.g;
    wsum += w;
    wleft += w * (1.0 + geo.rho);
    wright += w * (1.0 - geo.rho);
  }
  wleft /= wsum;
  wright /= wsum;

  Rng noise(seed_stream(scene.seed, 0x7461696cULL));  // per-scene tail
  const int start = first_arrival + 1;
  for (int i = 0; start + i < T; ++i) {
    const double sample =
        tail_scale * noise.normal() * std::exp(-beta * i / sample_rate);
    h(0, start + i) += wleft * sample;
    h(1, start + i) += wright * sample;
  }

  io::Audio out;
  out.sample_rate = sample_rate;
  out.samples = std::move(h);
  return out;
}

}  // namespace wavefield::sim
