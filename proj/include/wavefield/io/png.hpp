// Minimal dependency-free PNG I/O.
//
// Writes two pixel formats: 8-bit RGB (rendered views) and 16-bit grayscale
// (depth maps), using stored (uncompressed) deflate blocks inside a valid
// zlib stream — byte-for-byte deterministic output. The reader accepts
// exactly the subset the writer emits plus 8-bit grayscale, which is enough
// for round-tripping dataset images.
#pragma once

#include <string>
#include <vector>

#include "wavefield/common.hpp"

namespace wavefield::io {

// Row-major pixels in [0,1]; channels is 1 (gray) or 3 (RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

Image make_image(int width, int height, int channels);

// RGB images are written 8-bit; single-channel images 16-bit grayscale.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

// Bilinear resize (used to match the frozen encoder's input resolution).
Image resize_bilinear(const Image& img, int new_width, int new_height);

}  // namespace wavefield::io
