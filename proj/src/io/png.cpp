#include "wavefield/io/png.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace wavefield::io {

namespace {

std::uint32_t crc32_table_entry(std::uint32_t n) {
  for (int k = 0; k < 8; ++k)
    n = (n & 1) ? 0xedb88320u ^ (n >> 1) : n >> 1;
  return n;
}

std::uint32_t crc32(const std::uint8_t* data, std::size_t len,
                    std::uint32_t crc = 0xffffffffu) {
  static std::uint32_t table[256];
  static bool ready = false;
  if (!ready) {
    for (std::uint32_t i = 0; i < 256; ++i) table[i] = crc32_table_entry(i);
    ready = true;
  }
  for (std::size_t i = 0; i < len; ++i)
    crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
  return crc;
}

std::uint32_t adler32(const std::uint8_t* data, std::size_t len) {
  std::uint32_t a = 1, b = 0;
  for (std::size_t i = 0; i < len; ++i) {
    a = (a + data[i]) % 65521u;
    b = (b + a) % 65521u;
  }
  return (b << 16) | a;
}

void put_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(static_cast<std::uint8_t>(x >> 24));
  v.push_back(static_cast<std::uint8_t>(x >> 16));
  v.push_back(static_cast<std::uint8_t>(x >> 8));
  v.push_back(static_cast<std::uint8_t>(x));
}

void write_chunk(std::ofstream& out, const char type[4],
                 const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> buf;
  put_be32(buf, static_cast<std::uint32_t>(payload.size()));
  buf.insert(buf.end(), type, type + 4);
  buf.insert(buf.end(), payload.begin(), payload.end());
  const std::uint32_t crc =
      crc32(buf.data() + 4, buf.size() - 4) ^ 0xffffffffu;
  put_be32(buf, crc);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
}

// zlib stream with stored deflate blocks (no compression).
std::vector<std::uint8_t> zlib_stored(const std::vector<std::uint8_t>& raw) {
  std::vector<std::uint8_t> z;
  z.push_back(0x78);  // 32K window, deflate
  z.push_back(0x01);  // no preset dict, fastest
  std::size_t off = 0;
  while (off < raw.size() || raw.empty()) {
    const std::size_t n = std::min<std::size_t>(65535, raw.size() - off);
    const bool last = off + n >= raw.size();
    z.push_back(last ? 1 : 0);
    z.push_back(static_cast<std::uint8_t>(n & 0xff));
    z.push_back(static_cast<std::uint8_t>(n >> 8));
    z.push_back(static_cast<std::uint8_t>(~n & 0xff));
    z.push_back(static_cast<std::uint8_t>((~n >> 8) & 0xff));
    z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(off),
             raw.begin() + static_cast<std::ptrdiff_t>(off + n));
    off += n;
    if (last) break;
  }
  std::uint32_t ad = adler32(raw.data(), raw.size());
  put_be32(z, ad);
  return z;
}

std::vector<std::uint8_t> zlib_stored_decode(const std::uint8_t* p,
                                             std::size_t len,
                                             const std::string& path) {
  if (len < 6) throw FormatError("PNG zlib stream too short: " + path);
  if ((p[0] & 0x0f) != 8)
    throw FormatError("PNG: unsupported zlib method: " + path);
  std::size_t off = 2;
  std::vector<std::uint8_t> out;
  while (true) {
    if (off + 5 > len) throw FormatError("PNG: truncated deflate block: " + path);
    const std::uint8_t hdr = p[off];
    if ((hdr & 0x06) != 0)
      throw FormatError("PNG reader supports stored deflate blocks only: " + path);
    const std::size_t n = p[off + 1] | (p[off + 2] << 8);
    off += 5;
    if (off + n > len) throw FormatError("PNG: truncated stored block: " + path);
    out.insert(out.end(), p + off, p + off + n);
    off += n;
    if (hdr & 1) break;
  }
  return out;
}

}  // namespace

Image make_image(int width, int height, int channels) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3))
    throw InputError("make_image: bad dimensions");
  Image img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.data.assign(static_cast<std::size_t>(width) * height * channels, 0.0f);
  return img;
}

void write_png(const std::string& path, const Image& img) {
  if (img.width <= 0 || img.height <= 0)
    throw InputError("write_png: empty image");
  if (img.channels != 1 && img.channels != 3)
    throw InputError("write_png: channels must be 1 or 3");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open PNG for writing: " + path);

  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(sig), 8);

  const bool gray16 = img.channels == 1;
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(gray16 ? 16 : 8);           // bit depth
  ihdr.push_back(gray16 ? 0 : 2);            // color type: gray / truecolor
  ihdr.push_back(0);                         // compression
  ihdr.push_back(0);                         // filter
  ihdr.push_back(0);                         // interlace
  write_chunk(out, "IHDR", ihdr);

  // raw scanlines, filter byte 0 per row
  std::vector<std::uint8_t> raw;
  const int bpp = gray16 ? 2 : 3;
  raw.reserve(static_cast<std::size_t>(img.height) * (1 + static_cast<std::size_t>(img.width) * bpp));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    for (int x = 0; x < img.width; ++x) {
      if (gray16) {
        const float v = std::clamp(img.at(y, x, 0), 0.0f, 1.0f);
        const std::uint16_t q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
        raw.push_back(static_cast<std::uint8_t>(q >> 8));
        raw.push_back(static_cast<std::uint8_t>(q & 0xff));
      } else {
        for (int c = 0; c < 3; ++c) {
          const float v = std::clamp(img.at(y, x, c), 0.0f, 1.0f);
          raw.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
        }
      }
    }
  }
  write_chunk(out, "IDAT", zlib_stored(raw));
  write_chunk(out, "IEND", {});
  if (!out) throw IoError("short write on PNG: " + path);
}

Image read_png(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PNG: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
    throw FormatError("not a PNG file: " + path);

  std::size_t off = 8;
  int width = 0, height = 0, depth = 0, color = 0;
  std::vector<std::uint8_t> idat;
  while (off + 8 <= bytes.size()) {
    const std::uint32_t len = (bytes[off] << 24) | (bytes[off + 1] << 16) |
                              (bytes[off + 2] << 8) | bytes[off + 3];
    const char* type = reinterpret_cast<const char*>(&bytes[off + 4]);
    const std::uint8_t* payload = bytes.data() + off + 8;
    if (off + 12 + len > bytes.size())
      throw FormatError("truncated PNG chunk: " + path);
    if (std::memcmp(type, "IHDR", 4) == 0) {
      width = (payload[0] << 24) | (payload[1] << 16) | (payload[2] << 8) | payload[3];
      height = (payload[4] << 24) | (payload[5] << 16) | (payload[6] << 8) | payload[7];
      depth = payload[8];
      color = payload[9];
      if (payload[12] != 0) throw FormatError("PNG: interlace unsupported: " + path);
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    off += 12 + len;
  }
  if (width <= 0 || height <= 0) throw FormatError("PNG missing IHDR: " + path);
  const bool rgb8 = (color == 2 && depth == 8);
  const bool gray16 = (color == 0 && depth == 16);
  const bool gray8 = (color == 0 && depth == 8);
  if (!rgb8 && !gray16 && !gray8)
    throw FormatError("PNG reader supports 8-bit RGB and 8/16-bit gray only: " + path);

  const auto raw = zlib_stored_decode(idat.data(), idat.size(), path);
  const int bpp = rgb8 ? 3 : (gray16 ? 2 : 1);
  const std::size_t stride = 1 + static_cast<std::size_t>(width) * bpp;
  if (raw.size() < stride * static_cast<std::size_t>(height))
    throw FormatError("PNG: scanline data too short: " + path);

  Image img = make_image(width, height, rgb8 ? 3 : 1);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * stride;
    if (row[0] != 0)
      throw FormatError("PNG reader supports filter 0 only: " + path);
    for (int x = 0; x < width; ++x) {
      if (rgb8) {
        for (int c = 0; c < 3; ++c)
          img.at(y, x, c) = row[1 + x * 3 + c] / 255.0f;
      } else if (gray16) {
        const std::uint16_t q = static_cast<std::uint16_t>((row[1 + x * 2] << 8) | row[1 + x * 2 + 1]);
        img.at(y, x, 0) = q / 65535.0f;
      } else {
        img.at(y, x, 0) = row[1 + x] / 255.0f;
      }
    }
  }
  return img;
}

Image resize_bilinear(const Image& img, int new_width, int new_height) {
  Image out = make_image(new_width, new_height, img.channels);
  for (int y = 0; y < new_height; ++y) {
    const double sy = (y + 0.5) * img.height / new_height - 0.5;
    const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = std::clamp(sy - y0, 0.0, 1.0);
    for (int x = 0; x < new_width; ++x) {
      const double sx = (x + 0.5) * img.width / new_width - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = std::clamp(sx - x0, 0.0, 1.0);
      for (int c = 0; c < img.channels; ++c) {
        const double top = (1 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c);
        const double bot = (1 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c);
        out.at(y, x, c) = static_cast<float>((1 - fy) * top + fy * bot);
      }
    }
  }
  return out;
}

}  // namespace wavefield::io
