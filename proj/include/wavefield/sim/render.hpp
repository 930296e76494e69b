// Analytic renderer: exact ray intersections against the room shell and its
// primitives, flat shading, first-hit depth. Ground truth for the radiance
// field and the geometry backend of the view-dependent material factor.
#pragma once

#include <Eigen/Dense>

#include "wavefield/io/png.hpp"
#include "wavefield/pose.hpp"
#include "wavefield/sim/scene.hpp"

namespace wavefield::sim {

struct RayHit {
  bool hit = false;
  double t = 0.0;          // distance along the (unit) ray direction
  Color color{0, 0, 0};
  double absorption = 0.0;
};

// First positive surface crossing along origin + t*dir (dir need not be
// normalized internally; it is normalized here). Primitives are solid: a ray
// starting inside one hits its surface from within.
RayHit trace_scene(const SceneSpec& scene, const Eigen::Vector3d& origin,
                   const Eigen::Vector3d& dir);

// Orthonormal camera basis from a pose: forward, right, up.
void camera_basis(const Pose& pose, Eigen::Vector3d* forward,
                  Eigen::Vector3d* right, Eigen::Vector3d* up);

// Pinhole render with vertical field of view fov_deg. Misses are black with
// zero depth; depth is metric (first-hit Euclidean distance).
void render_analytic(const SceneSpec& scene, const Pose& pose, int width,
                     int height, io::Image* rgb, io::Image* depth,
                     double fov_deg = 60.0);

}  // namespace wavefield::sim
