// Dataset manifests: one JSON file per split listing samples and their
// on-disk assets, plus the scene-level facts consumers need (bounds for
// coordinate normalization, source positions, STFT setup, IR metadata).
// Keys are emitted sorted (nlohmann object = std::map), so serialization is
// deterministic for identical content.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavefield/common.hpp"
#include "wavefield/dsp/stft.hpp"
#include "wavefield/pose.hpp"

namespace wavefield::io {

using PoseRecord = Pose;

struct SampleRecord {
  std::string id;
  PoseRecord pose;
  std::string source_audio;  // paths relative to the manifest directory
  std::string target_audio;
  std::string rgb;    // empty when the scene has no visuals
  std::string depth;
  std::string ir;     // empty unless the dataset stores impulse responses
};

struct DatasetManifest {
  std::string split;                    // "train" or "val"
  int sample_rate = 22050;
  std::array<double, 2> bounds_min{0, 0};
  std::array<double, 2> bounds_max{0, 0};
  std::vector<std::array<double, 2>> sources;
  nlohmann::json scene;                 // original scene spec, for provenance
  nlohmann::json stft;
  bool has_images = false;
  bool has_ir = false;
  int ir_length = 0;
  double ir_norm = 1.0;                 // target normalization constant
  std::vector<SampleRecord> samples;

  std::string dir;                      // directory of the manifest file
  // Resolve a sample-relative path against the manifest location.
  std::string resolve(const std::string& rel) const;
};

void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& path);

// Small JSON file helpers shared by config and report writers.
nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

// STFT setup <-> the manifest's "stft" object.
nlohmann::json stft_to_json(const dsp::StftConfig& cfg);
dsp::StftConfig stft_from_json(const nlohmann::json& j);

}  // namespace wavefield::io
