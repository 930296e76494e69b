// Checkpoint container: one self-describing binary file per model.
//
// Layout: 8-byte magic "WFCKPT01", u32 little-endian JSON header length, the
// header (format version, free-form metadata, array names/shapes in order),
// then each array's doubles raw little-endian in Eigen's column-major storage
// order. Saving is byte-deterministic for identical contents, which is what
// the train-twice-compare-bitwise reproducibility check relies on. A
// human-readable JSON sidecar (same path + ".json") duplicates the header.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wavefield/common.hpp"

namespace wavefield::core {

struct Checkpoint {
  nlohmann::json meta;  // model kind, config, scene binding, optimizer scalars
  std::vector<std::pair<std::string, Mat>> arrays;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace wavefield::core
