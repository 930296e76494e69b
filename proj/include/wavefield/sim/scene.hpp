// Scene description for the synthetic oracle: sound sources with a
// closed-form propagation model, plus an optional room (axis-aligned shell
// with colored primitives) that feeds the analytic renderer and the
// view-dependent material absorption.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavefield/common.hpp"

namespace wavefield::sim {

using Color = std::array<double, 3>;

struct SourceSpec {
  double x = 0.0;
  double y = 0.0;
  std::string audio = "noise";  // "noise", "sine_mix", or a WAV path
};

struct SphereSpec {
  std::array<double, 3> center{0, 0, 0};
  double radius = 0.5;
  Color color{1, 1, 1};
  double absorption = 0.0;  // acoustic absorption weight in [0,1]
};

struct BoxSpec {
  std::array<double, 3> min{0, 0, 0};
  std::array<double, 3> max{1, 1, 1};
  Color color{1, 1, 1};
  double absorption = 0.0;
};

struct RoomSpec {
  std::array<double, 3> min{-4, -4, 0};
  std::array<double, 3> max{4, 4, 3};
  // face order: -x, +x, -y, +y, -z (floor), +z (ceiling)
  std::array<Color, 6> wall_colors{{{0.7, 0.3, 0.3},
                                    {0.3, 0.7, 0.3},
                                    {0.3, 0.3, 0.7},
                                    {0.7, 0.7, 0.3},
                                    {0.4, 0.4, 0.4},
                                    {0.6, 0.6, 0.6}}};
  std::array<double, 6> wall_absorption{0, 0, 0, 0, 0, 0};
  std::vector<SphereSpec> spheres;
  std::vector<BoxSpec> boxes;
};

// View-dependent material effect: a horizontal fan of `rays` rays spanning
// `fov_deg` around the listener's heading is intersected with the room; the
// absorption-weighted fraction of hits scales the received magnitude by
// 1 - strength * fraction. Zero strength (default) disables the effect.
struct MaterialSpec {
  double strength = 0.0;
  double fov_deg = 60.0;
  int rays = 64;
};

struct IrParams {
  double t60 = 0.1;      // seconds for a 60 dB Schroeder decay
  double speed = 343.0;  // direct-path propagation speed, m/s
  int length = 2048;     // samples per impulse response
  // tail-to-direct energy ratio at 1 m, before distance attenuation of the
  // direct path; keeps the -5..-35 dB Schroeder span inside the noise tail
  double tail_to_direct = 10.0;
};

struct SceneSpec {
  std::string name = "scene";
  std::uint64_t seed = 0;  // seeds the IR noise tail and nothing else
  std::array<double, 2> bounds_min{-3, -3};
  std::array<double, 2> bounds_max{3, 3};
  std::vector<SourceSpec> sources;
  double d_min = 0.1;        // attenuation floor: gain = 1/max(d, d_min)
  double ild_alpha = 0.6;    // channel split rho = ild_alpha * sin(theta')
  double air_absorption = 0.0;  // k(f) = air_absorption * f/f_nyq, 1/m
  double min_source_distance = 1.0;  // pose sampling keeps d >= this
  double listener_height = 1.2;
  MaterialSpec material;
  std::optional<RoomSpec> room;
  IrParams ir;

  void validate() const;  // throws ConfigError on violated invariants
};

nlohmann::json scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const nlohmann::json& j);
SceneSpec load_scene(const std::string& path);
void save_scene(const std::string& path, const SceneSpec& scene);

// Largest listener-to-geometry distance scale, used to normalize depth maps.
double scene_diameter(const SceneSpec& scene);

}  // namespace wavefield::sim
