#include "wavefield/sim/scene.hpp"

#include <cmath>
#include <fstream>

#include "wavefield/io/manifest.hpp"  // load_json_file / save_json_file

namespace wavefield::sim {

namespace {

using nlohmann::json;

json color_json(const Color& c) { return json::array({c[0], c[1], c[2]}); }

template <std::size_t N>
std::array<double, N> array_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N)
    throw ConfigError(std::string(what) + " must be an array of " +
                      std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j.at(i).get<double>();
  return out;
}

}  // namespace

void SceneSpec::validate() const {
  if (sources.empty()) throw ConfigError("scene: at least one source required");
  if (d_min <= 0) throw ConfigError("scene: attenuation d_min must be > 0");
  if (ild_alpha < 0 || ild_alpha > 1)
    throw ConfigError("scene: ild_alpha must lie in [0,1]");
  if (air_absorption < 0) throw ConfigError("scene: air_absorption must be >= 0");
  if (ir.t60 <= 0) throw ConfigError("scene: ir t60 must be > 0");
  if (ir.length < 8) throw ConfigError("scene: ir length too short");
  if (material.strength < 0 || material.strength >= 1)
    throw ConfigError("scene: material strength must lie in [0,1)");
  if (material.strength > 0 && !room.has_value())
    throw ConfigError("scene: material absorption requires a room");
  if (bounds_min[0] >= bounds_max[0] || bounds_min[1] >= bounds_max[1])
    throw ConfigError("scene: bounds must be a nonempty rectangle");
  if (min_source_distance < d_min)
    throw ConfigError("scene: min_source_distance must be >= d_min");
}

json scene_to_json(const SceneSpec& s) {
  json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["bounds"] = {{"min", {s.bounds_min[0], s.bounds_min[1]}},
                 {"max", {s.bounds_max[0], s.bounds_max[1]}}};
  j["sources"] = json::array();
  for (const auto& src : s.sources)
    j["sources"].push_back({{"position", {src.x, src.y}}, {"audio", src.audio}});
  j["attenuation"] = {{"law", "inverse-distance"}, {"d_min", s.d_min}};
  j["ild_alpha"] = s.ild_alpha;
  j["air_absorption"] = s.air_absorption;
  j["min_source_distance"] = s.min_source_distance;
  j["listener_height"] = s.listener_height;
  j["material"] = {{"strength", s.material.strength},
                   {"fov_deg", s.material.fov_deg},
                   {"rays", s.material.rays}};
  j["ir_params"] = {{"t60", s.ir.t60},
                    {"speed", s.ir.speed},
                    {"length", s.ir.length},
                    {"tail_to_direct", s.ir.tail_to_direct}};
  if (s.room) {
    json r;
    r["min"] = {s.room->min[0], s.room->min[1], s.room->min[2]};
    r["max"] = {s.room->max[0], s.room->max[1], s.room->max[2]};
    r["wall_colors"] = json::array();
    for (const auto& c : s.room->wall_colors) r["wall_colors"].push_back(color_json(c));
    r["wall_absorption"] = s.room->wall_absorption;
    r["spheres"] = json::array();
    for (const auto& sp : s.room->spheres)
      r["spheres"].push_back({{"center", {sp.center[0], sp.center[1], sp.center[2]}},
                              {"radius", sp.radius},
                              {"color", color_json(sp.color)},
                              {"absorption", sp.absorption}});
    r["boxes"] = json::array();
    for (const auto& b : s.room->boxes)
      r["boxes"].push_back({{"min", {b.min[0], b.min[1], b.min[2]}},
                            {"max", {b.max[0], b.max[1], b.max[2]}},
                            {"color", color_json(b.color)},
                            {"absorption", b.absorption}});
    j["room"] = r;
  }
  return j;
}

SceneSpec scene_from_json(const json& j) {
  try {
    SceneSpec s;
    s.name = j.value("name", std::string("scene"));
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("bounds")) {
      s.bounds_min = array_from<2>(j.at("bounds").at("min"), "bounds.min");
      s.bounds_max = array_from<2>(j.at("bounds").at("max"), "bounds.max");
    }
    if (!j.contains("sources") || !j.at("sources").is_array())
      throw ConfigError("scene: 'sources' array required");
    for (const auto& src : j.at("sources")) {
      SourceSpec spec;
      auto pos = array_from<2>(src.at("position"), "source.position");
      spec.x = pos[0];
      spec.y = pos[1];
      spec.audio = src.value("audio", std::string("noise"));
      s.sources.push_back(spec);
    }
    if (j.contains("attenuation")) {
      const auto& a = j.at("attenuation");
      if (a.contains("law") && a.at("law").get<std::string>() != "inverse-distance")
        throw ConfigError("scene: only the inverse-distance attenuation law exists");
      s.d_min = a.value("d_min", 0.1);
    }
    s.ild_alpha = j.value("ild_alpha", 0.6);
    s.air_absorption = j.value("air_absorption", 0.0);
    s.min_source_distance = j.value("min_source_distance", 1.0);
    s.listener_height = j.value("listener_height", 1.2);
    if (j.contains("material")) {
      const auto& m = j.at("material");
      s.material.strength = m.value("strength", 0.0);
      s.material.fov_deg = m.value("fov_deg", 60.0);
      s.material.rays = m.value("rays", 64);
    }
    if (j.contains("ir_params")) {
      const auto& p = j.at("ir_params");
      s.ir.t60 = p.value("t60", 0.1);
      s.ir.speed = p.value("speed", 343.0);
      s.ir.length = p.value("length", 2048);
      s.ir.tail_to_direct = p.value("tail_to_direct", 10.0);
    }
    if (j.contains("room")) {
      const auto& r = j.at("room");
      RoomSpec room;
      room.min = array_from<3>(r.at("min"), "room.min");
      room.max = array_from<3>(r.at("max"), "room.max");
      if (r.contains("wall_colors")) {
        const auto& wc = r.at("wall_colors");
        if (!wc.is_array() || wc.size() != 6)
          throw ConfigError("scene: room.wall_colors needs 6 entries");
        for (int i = 0; i < 6; ++i)
          room.wall_colors[i] = array_from<3>(wc.at(i), "wall color");
      }
      if (r.contains("wall_absorption")) {
        auto wa = array_from<6>(r.at("wall_absorption"), "room.wall_absorption");
        room.wall_absorption = wa;
      }
      for (const auto& sp : r.value("spheres", json::array())) {
        SphereSpec spec;
        spec.center = array_from<3>(sp.at("center"), "sphere.center");
        spec.radius = sp.at("radius").get<double>();
        if (sp.contains("color")) spec.color = array_from<3>(sp.at("color"), "color");
        spec.absorption = sp.value("absorption", 0.0);
        room.spheres.push_back(spec);
      }
      for (const auto& b : r.value("boxes", json::array())) {
        BoxSpec spec;
        spec.min = array_from<3>(b.at("min"), "box.min");
        spec.max = array_from<3>(b.at("max"), "box.max");
        if (b.contains("color")) spec.color = array_from<3>(b.at("color"), "color");
        spec.absorption = b.value("absorption", 0.0);
        room.boxes.push_back(spec);
      }
      s.room = room;
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene: malformed specification: ") + e.what());
  }
}

SceneSpec load_scene(const std::string& path) {
  return scene_from_json(io::load_json_file(path));
}

void save_scene(const std::string& path, const SceneSpec& scene) {
  io::save_json_file(path, scene_to_json(scene));
}

double scene_diameter(const SceneSpec& scene) {
  if (scene.room) {
    const auto& r = *scene.room;
    const double dx = r.max[0] - r.min[0];
    const double dy = r.max[1] - r.min[1];
    const double dz = r.max[2] - r.min[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  const double dx = scene.bounds_max[0] - scene.bounds_min[0];
  const double dy = scene.bounds_max[1] - scene.bounds_min[1];
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace wavefield::sim
