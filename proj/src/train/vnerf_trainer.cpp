#include "wavefield/train/vnerf_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wavefield/sim/render.hpp"

namespace wavefield::train {

void VnerfTrainConfig::validate() const {
  if (n_poses < 2) throw ConfigError("vnerf train: need at least 2 poses");
  if (image_size < 1) throw ConfigError("vnerf train: bad image size");
  if (!(fov_deg > 0.0) || !(fov_deg < 180.0))
    throw ConfigError("vnerf train: field of view must be in (0, 180)");
  if (n_samples < 2) throw ConfigError("vnerf train: need >= 2 samples");
  if (epochs < 0) throw ConfigError("vnerf train: negative epochs");
  if (batch_rays < 1) throw ConfigError("vnerf train: bad batch size");
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw ConfigError("vnerf train: val_fraction must be in [0, 1)");
  if (t_near < 0.0) throw ConfigError("vnerf train: negative t_near");
}

namespace {

// Camera position rejected when it sits inside or hugs solid geometry.
// Interior objects get a larger clearance than walls: a camera a few
// centimeters from a surface sees one flat color at a range the quadrature
// cannot resolve, which is useless supervision and a hopeless held-out view.
bool pose_clear(const sim::SceneSpec& scene, double x, double y, double z) {
  if (!scene.room) return true;
  const auto& room = *scene.room;
  const double wall_margin = 0.2;
  const double clearance = 0.8;
  if (x < room.min[0] + wall_margin || x > room.max[0] - wall_margin ||
      y < room.min[1] + wall_margin || y > room.max[1] - wall_margin ||
      z < room.min[2] + wall_margin || z > room.max[2] - wall_margin)
    return false;
  for (const auto& s : room.spheres) {
    const double dx = x - s.center[0], dy = y - s.center[1],
                 dz = z - s.center[2];
    const double keep = s.radius + clearance;
    if (dx * dx + dy * dy + dz * dz < keep * keep) return false;
  }
  for (const auto& b : room.boxes)
    if (x > b.min[0] - clearance && x < b.max[0] + clearance &&
        y > b.min[1] - clearance && y < b.max[1] + clearance &&
        z > b.min[2] - clearance && z < b.max[2] + clearance)
      return false;
  return true;
}

}  // namespace

VnerfTrainResult train_vnerf(vnerf::RadianceField& field,
                             const sim::SceneSpec& scene,
                             const VnerfTrainConfig& cfg) {
  cfg.validate();
  const double t_far =
      cfg.t_far > 0.0 ? cfg.t_far : sim::scene_diameter(scene);
  if (!(t_far > cfg.t_near))
    throw ConfigError("vnerf train: t_far must exceed t_near");

  // ---- poses and ground truth ----
  // Cameras spread over height and pitch, not just a level ring: a single
  // fixed-height, level-gaze distribution leaves the field vertically
  // under-constrained and breeds floaters that crater held-out fidelity.
  double z_lo = scene.listener_height, z_hi = scene.listener_height;
  if (scene.room) {
    z_lo = scene.room->min[2] + 0.35;
    z_hi = scene.room->max[2] - 0.35;
    if (!(z_lo < z_hi)) z_lo = z_hi = 0.5 * (scene.room->min[2] + scene.room->max[2]);
  }
  Rng pose_rng(seed_stream(cfg.seed, 11));
  std::vector<Pose> poses;
  poses.reserve(static_cast<size_t>(cfg.n_poses));
  for (int k = 0; k < cfg.n_poses; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      Pose p;
      p.x = pose_rng.uniform(scene.bounds_min[0], scene.bounds_max[0]);
      p.y = pose_rng.uniform(scene.bounds_min[1], scene.bounds_max[1]);
      p.z = pose_rng.uniform(z_lo, z_hi);
      p.theta = pose_rng.uniform(0.0, 2.0 * kPi);
      p.phi = pose_rng.uniform(-0.4, 0.4);
      if (!pose_clear(scene, p.x, p.y, p.z)) continue;
      poses.push_back(p);
      placed = true;
    }
    if (!placed)
      throw ConfigError("vnerf train: could not place cameras in free space");
  }

  const int S = cfg.image_size;
  std::vector<io::Image> gt_rgb(poses.size()), gt_depth(poses.size());
  for (size_t k = 0; k < poses.size(); ++k)
    sim::render_analytic(scene, poses[k], S, S, &gt_rgb[k], &gt_depth[k],
                         cfg.fov_deg);

  // ---- split ----
  std::vector<int> order(poses.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(seed_stream(cfg.seed, 12));
  split_rng.shuffle(order);
  int n_val = static_cast<int>(std::lround(cfg.val_fraction * cfg.n_poses));
  if (cfg.val_fraction > 0.0) n_val = std::max(n_val, 1);
  n_val = std::min(n_val, cfg.n_poses - 1);
  std::vector<int> val_ids(order.begin(), order.begin() + n_val);
  std::vector<int> train_ids(order.begin() + n_val, order.end());

  // ---- flatten training rays ----
  const int rays_per_pose = S * S;
  const Eigen::Index n_rays =
      static_cast<Eigen::Index>(train_ids.size()) * rays_per_pose;
  Mat origins(n_rays, 3), dirs(n_rays, 3), targets(n_rays, 3);
  const double tan_half = std::tan(0.5 * cfg.fov_deg * kPi / 180.0);
  Eigen::Index r = 0;
  for (int id : train_ids) {
    Eigen::Vector3d fwd, right, up;
    sim::camera_basis(poses[static_cast<size_t>(id)], &fwd, &right, &up);
    const Pose& p = poses[static_cast<size_t>(id)];
    const Eigen::Vector3d origin(p.x, p.y, p.z);
    for (int i = 0; i < S; ++i) {
      const double v = 1.0 - 2.0 * (i + 0.5) / S;
      for (int j = 0; j < S; ++j, ++r) {
        const double u = 2.0 * (j + 0.5) / S - 1.0;
        origins.row(r) = origin.transpose();
        dirs.row(r) =
            (fwd + u * tan_half * right + v * tan_half * up)
                .normalized()
                .transpose();
        for (int c = 0; c < 3; ++c)
          targets(r, c) = gt_rgb[static_cast<size_t>(id)].at(i, j, c);
      }
    }
  }

  // ---- optimizer ----
  vnerf::RadianceParamGrads grads;
  core::ParamRefs refs = field.bind_parameters(&grads);
  const int steps_per_epoch = static_cast<int>(
      (n_rays + cfg.batch_rays - 1) / cfg.batch_rays);
  core::AdamState adam;
  adam.reset(refs, cfg.adam,
             static_cast<std::int64_t>(cfg.epochs) * steps_per_epoch);

  Rng shuffle_rng(seed_stream(cfg.seed, 13));
  Rng jitter_rng(seed_stream(cfg.seed, 14));
  std::vector<Eigen::Index> ray_order(static_cast<size_t>(n_rays));
  std::iota(ray_order.begin(), ray_order.end(), 0);

  const int N = cfg.n_samples;
  const double delta = (t_far - cfg.t_near) / N;
  VnerfTrainResult result;
  result.n_train_poses = static_cast<int>(train_ids.size());
  result.n_val_poses = n_val;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(ray_order);
    double epoch_sq = 0.0;
    for (Eigen::Index start = 0; start < n_rays; start += cfg.batch_rays) {
      const int B = static_cast<int>(
          std::min<Eigen::Index>(cfg.batch_rays, n_rays - start));
      Mat points(static_cast<Eigen::Index>(B) * N, 3);
      Mat sample_dirs(points.rows(), 3);
      Mat ts(B, N);
      for (int b = 0; b < B; ++b) {
        const Eigen::Index ray = ray_order[static_cast<size_t>(start + b)];
        const Eigen::Vector3d o = origins.row(ray).transpose();
        const Eigen::Vector3d d = dirs.row(ray).transpose();
        for (int k = 0; k < N; ++k) {
          const double t = cfg.t_near + (k + jitter_rng.uniform()) * delta;
          ts(b, k) = t;
          points.row(static_cast<Eigen::Index>(b) * N + k) =
              (o + t * d).transpose();
          sample_dirs.row(static_cast<Eigen::Index>(b) * N + k) =
              d.transpose();
        }
      }

      vnerf::RadianceTape tape;
      Vec sigma;
      Mat rgb;
      field.forward(points, sample_dirs, &tape, &sigma, &rgb);

      Vec d_sigma = Vec::Zero(sigma.size());
      Mat d_rgb = Mat::Zero(rgb.rows(), 3);
      double batch_sq = 0.0;
      for (int b = 0; b < B; ++b) {
        const Eigen::Index lo = static_cast<Eigen::Index>(b) * N;
        const vnerf::RayRender rr = vnerf::integrate_ray(
            ts.row(b).transpose(), delta, sigma.segment(lo, N),
            rgb.middleRows(lo, N));
        const Eigen::Index ray = ray_order[static_cast<size_t>(start + b)];
        const Eigen::Vector3d res =
            rr.color - targets.row(ray).transpose();
        batch_sq += res.squaredNorm();
        const Eigen::Vector3d d_color = 2.0 * res / B;

        Vec ds;
        Mat dr;
        vnerf::integrate_ray_backward(rr, rgb.middleRows(lo, N), d_color,
                                      0.0, &ds, &dr);
        d_sigma.segment(lo, N) = ds;
        d_rgb.middleRows(lo, N) = dr;
      }
      epoch_sq += batch_sq;
      if (!std::isfinite(batch_sq))
        throw TrainingError("vnerf train: non-finite loss");

      vnerf::RadianceGrads g = field.backward(tape, d_sigma, d_rgb);
      for (size_t k = 0; k < grads.w1.size(); ++k) {
        grads.w1[k] = g.g1.dw[k];
        grads.b1[k] = g.g1.db[k];
      }
      for (size_t k = 0; k < grads.w2.size(); ++k) {
        grads.w2[k] = g.g2.dw[k];
        grads.b2[k] = g.g2.db[k];
      }
      core::adam_step(refs, adam);
    }
    result.epoch_loss.push_back(epoch_sq / static_cast<double>(n_rays));
  }

  // ---- held-out PSNR (midpoint rendering, deterministic) ----
  if (n_val > 0) {
    double sq = 0.0;
    std::int64_t count = 0;
    for (int id : val_ids) {
      io::Image rgb_img, depth_img;
      vnerf::render_image(field, poses[static_cast<size_t>(id)], S, S,
                          cfg.fov_deg, N, cfg.t_near, t_far, &rgb_img,
                          &depth_img);
      const io::Image& gt = gt_rgb[static_cast<size_t>(id)];
      for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
          for (int c = 0; c < 3; ++c) {
            const double e = double(rgb_img.at(i, j, c)) - double(gt.at(i, j, c));
            sq += e * e;
            ++count;
          }
    }
    const double mse = sq / static_cast<double>(count);
    result.val_psnr = -10.0 * std::log10(std::max(mse, 1e-12));
  }
  return result;
}

}  // namespace wavefield::train
