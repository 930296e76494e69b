#include "wavefield/core/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace wavefield::core {

namespace {
constexpr char kMagic[8] = {'W', 'F', 'C', 'K', 'P', 'T', '0', '1'};
constexpr int kFormatVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["meta"] = ckpt.meta;
  auto& arrs = header["arrays"] = nlohmann::json::array();
  for (const auto& [name, m] : ckpt.arrays)
    arrs.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  const std::string hdr = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 8);
  const std::uint32_t len = static_cast<std::uint32_t>(hdr.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  for (const auto& [name, m] : ckpt.arrays)
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!out) throw IoError("short write while saving checkpoint: " + path);
  out.close();

  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) throw IoError("cannot write checkpoint sidecar: " + path + ".json");
  side << header.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint not found: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("not a checkpoint file: " + path);
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  if (!in) throw FormatError("truncated checkpoint header: " + path);
  std::string hdr(len, '\0');
  in.read(hdr.data(), len);
  if (!in) throw FormatError("truncated checkpoint header: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hdr);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint header JSON: " + std::string(e.what()));
  }
  if (header.value("format_version", -1) != kFormatVersion)
    throw FormatError("unsupported checkpoint format version in " + path);

  Checkpoint ckpt;
  ckpt.meta = header.value("meta", nlohmann::json::object());
  for (const auto& a : header["arrays"]) {
    const auto name = a.at("name").get<std::string>();
    const auto rows = a.at("rows").get<Eigen::Index>();
    const auto cols = a.at("cols").get<Eigen::Index>();
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw FormatError("truncated checkpoint arrays: " + path);
    ckpt.arrays.emplace_back(name, std::move(m));
  }
  return ckpt;
}

}  // namespace wavefield::core
