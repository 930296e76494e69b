#include "wavefield/sim/render.hpp"

#include <cmath>
#include <limits>

namespace wavefield::sim {

namespace {

constexpr double kEps = 1e-9;

// Smallest positive t where the ray crosses the sphere surface; <0 if none.
double hit_sphere(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                  const SphereSpec& s) {
  const Eigen::Vector3d c(s.center[0], s.center[1], s.center[2]);
  const Eigen::Vector3d oc = o - c;
  const double b = oc.dot(d);
  const double disc = b * b - (oc.squaredNorm() - s.radius * s.radius);
  if (disc < 0) return -1.0;
  const double root = std::sqrt(disc);
  const double t0 = -b - root;
  if (t0 > kEps) return t0;
  const double t1 = -b + root;
  if (t1 > kEps) return t1;  // origin inside: exit crossing
  return -1.0;
}

// Slab test returning the crossing interval [t0, t1] of an AABB, or false.
bool box_interval(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                  const std::array<double, 3>& bmin,
                  const std::array<double, 3>& bmax, double* t0, double* t1,
                  int* axis0, int* axis1) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  int alo = 0, ahi = 0;
  for (int a = 0; a < 3; ++a) {
    double ta = (bmin[a] - o[a]), tb = (bmax[a] - o[a]);
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < bmin[a] || o[a] > bmax[a]) return false;
      continue;
    }
    ta /= d[a];
    tb /= d[a];
    if (ta > tb) std::swap(ta, tb);
    if (ta > lo) { lo = ta; alo = a; }
    if (tb < hi) { hi = tb; ahi = a; }
  }
  if (lo > hi) return false;
  *t0 = lo;
  *t1 = hi;
  *axis0 = alo;
  *axis1 = ahi;
  return true;
}

double hit_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
               const std::array<double, 3>& bmin,
               const std::array<double, 3>& bmax) {
  double t0, t1;
  int a0, a1;
  if (!box_interval(o, d, bmin, bmax, &t0, &t1, &a0, &a1)) return -1.0;
  if (t0 > kEps) return t0;
  if (t1 > kEps) return t1;
  return -1.0;
}

// Wall face index in {-x,+x,-y,+y,-z,+z} order for the room-shell crossing.
int wall_face(const Eigen::Vector3d& p, const Eigen::Vector3d& d,
              const RoomSpec& room, int axis, bool exiting) {
  // When exiting, the crossed plane lies in the direction of travel.
  const bool positive_side = exiting ? (d[axis] > 0) : (d[axis] < 0);
  (void)p;
  (void)room;
  return 2 * axis + (positive_side ? 1 : 0);
}

}  // namespace

RayHit trace_scene(const SceneSpec& scene, const Eigen::Vector3d& origin,
                   const Eigen::Vector3d& dir_in) {
  const Eigen::Vector3d d = dir_in.normalized();
  RayHit best;
  best.t = std::numeric_limits<double>::infinity();
  if (scene.room) {
    const RoomSpec& room = *scene.room;
    for (const auto& s : room.spheres) {
      const double t = hit_sphere(origin, d, s);
      if (t > 0 && t < best.t) {
        best = {true, t, s.color, s.absorption};
      }
    }
    for (const auto& b : room.boxes) {
      const double t = hit_box(origin, d, b.min, b.max);
      if (t > 0 && t < best.t) {
        best = {true, t, b.color, b.absorption};
      }
    }
    // Room shell: from inside, the exit crossing is the visible wall.
    double t0, t1;
    int a0, a1;
    if (box_interval(origin, d, room.min, room.max, &t0, &t1, &a0, &a1)) {
      double t = -1.0;
      int face = -1;
      if (t0 > kEps) {
        t = t0;
        face = wall_face(origin, d, room, a0, /*exiting=*/false);
      } else if (t1 > kEps) {
        t = t1;
        face = wall_face(origin, d, room, a1, /*exiting=*/true);
      }
      if (t > 0 && t < best.t) {
        best =
            {true, t, room.wall_colors[face], room.wall_absorption[face]};
      }
    }
  }
  if (!best.hit) best.t = 0.0;
  return best;
}

void camera_basis(const Pose& pose, Eigen::Vector3d* forward,
                  Eigen::Vector3d* right, Eigen::Vector3d* up) {
  const double ct = std::cos(pose.theta), st = std::sin(pose.theta);
  const double cp = std::cos(pose.phi), sp = std::sin(pose.phi);
  *forward = Eigen::Vector3d(cp * ct, cp * st, sp);
  *right = Eigen::Vector3d(st, -ct, 0.0);  // forward x world-up, normalized
  *up = right->cross(*forward);
}

void render_analytic(const SceneSpec& scene, const Pose& pose, int width,
                     int height, io::Image* rgb, io::Image* depth,
                     double fov_deg) {
  if (width < 1 || height < 1)
    throw InputError("render: image dimensions must be positive");
  Eigen::Vector3d fwd, right, up;
  camera_basis(pose, &fwd, &right, &up);
  const Eigen::Vector3d origin(pose.x, pose.y, pose.z);
  const double tan_half = std::tan(0.5 * fov_deg * kPi / 180.0);
  const double aspect = static_cast<double>(width) / height;
  *rgb = io::make_image(width, height, 3);
  *depth = io::make_image(width, height, 1);
  for (int i = 0; i < height; ++i) {
    const double v = 1.0 - 2.0 * (i + 0.5) / height;  // row 0 = top
    for (int j = 0; j < width; ++j) {
      const double u = 2.0 * (j + 0.5) / width - 1.0;
      const Eigen::Vector3d dir =
          fwd + u * tan_half * aspect * right + v * tan_half * up;
      const RayHit hit = trace_scene(scene, origin, dir);
      if (hit.hit) {
        for (int c = 0; c < 3; ++c)
          rgb->at(i, j, c) = static_cast<float>(hit.color[c]);
        depth->at(i, j, 0) = static_cast<float>(hit.t);
      }
    }
  }
}

}  // namespace wavefield::sim
