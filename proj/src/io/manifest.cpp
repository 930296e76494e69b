#include "wavefield/io/manifest.hpp"

#include <filesystem>
#include <fstream>

namespace wavefield::io {

namespace fs = std::filesystem;

std::string DatasetManifest::resolve(const std::string& rel) const {
  if (rel.empty()) return rel;
  fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(dir) / p).string();
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open JSON file: " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed JSON in " + path + ": " + e.what());
  }
}

void save_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open JSON file for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("short write on JSON file: " + path);
}

namespace {

nlohmann::json pose_to_json(const PoseRecord& p) {
  return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"theta", p.theta}, {"phi", p.phi}};
}

PoseRecord pose_from_json(const nlohmann::json& j) {
  PoseRecord p;
  p.x = j.at("x").get<double>();
  p.y = j.at("y").get<double>();
  p.z = j.value("z", 0.0);
  p.theta = j.at("theta").get<double>();
  p.phi = j.value("phi", 0.0);
  return p;
}

}  // namespace

void save_manifest(const std::string& path, const DatasetManifest& m) {
  nlohmann::json j;
  j["split"] = m.split;
  j["sample_rate"] = m.sample_rate;
  j["bounds"] = {{"min", m.bounds_min}, {"max", m.bounds_max}};
  j["sources"] = m.sources;
  j["scene"] = m.scene;
  j["stft"] = m.stft;
  j["has_images"] = m.has_images;
  j["has_ir"] = m.has_ir;
  j["ir_length"] = m.ir_length;
  j["ir_norm"] = m.ir_norm;
  auto& samples = j["samples"] = nlohmann::json::array();
  for (const auto& s : m.samples) {
    nlohmann::json e;
    e["id"] = s.id;
    e["pose"] = pose_to_json(s.pose);
    e["source_audio"] = s.source_audio;
    e["target_audio"] = s.target_audio;
    if (!s.rgb.empty()) e["rgb"] = s.rgb;
    if (!s.depth.empty()) e["depth"] = s.depth;
    if (!s.ir.empty()) e["ir"] = s.ir;
    samples.push_back(std::move(e));
  }
  save_json_file(path, j);
}

DatasetManifest load_manifest(const std::string& path) {
  const auto j = load_json_file(path);
  DatasetManifest m;
  try {
    m.split = j.at("split").get<std::string>();
    m.sample_rate = j.at("sample_rate").get<int>();
    m.bounds_min = j.at("bounds").at("min").get<std::array<double, 2>>();
    m.bounds_max = j.at("bounds").at("max").get<std::array<double, 2>>();
    m.sources = j.at("sources").get<std::vector<std::array<double, 2>>>();
    m.scene = j.value("scene", nlohmann::json::object());
    m.stft = j.value("stft", nlohmann::json::object());
    m.has_images = j.value("has_images", false);
    m.has_ir = j.value("has_ir", false);
    m.ir_length = j.value("ir_length", 0);
    m.ir_norm = j.value("ir_norm", 1.0);
    for (const auto& e : j.at("samples")) {
      SampleRecord s;
      s.id = e.at("id").get<std::string>();
      s.pose = pose_from_json(e.at("pose"));
      s.source_audio = e.at("source_audio").get<std::string>();
      s.target_audio = e.at("target_audio").get<std::string>();
      s.rgb = e.value("rgb", "");
      s.depth = e.value("depth", "");
      s.ir = e.value("ir", "");
      m.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest schema error in " + path + ": " + e.what());
  }
  m.dir = fs::path(path).parent_path().string();
  if (m.dir.empty()) m.dir = ".";
  return m;
}

nlohmann::json stft_to_json(const dsp::StftConfig& cfg) {
  return {{"n_fft", cfg.n_fft},
          {"win_length", cfg.win_length},
          {"hop_length", cfg.hop_length},
          {"window", cfg.window},
          {"sample_rate", cfg.sample_rate}};
}

dsp::StftConfig stft_from_json(const nlohmann::json& j) {
  dsp::StftConfig cfg;
  cfg.n_fft = j.value("n_fft", 512);
  cfg.win_length = j.value("win_length", 512);
  cfg.hop_length = j.value("hop_length", 128);
  cfg.window = j.value("window", std::string("hann"));
  cfg.sample_rate = j.value("sample_rate", 22050);
  cfg.validate();
  return cfg;
}

}  // namespace wavefield::io
