#include "wavefield/io/wav.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

namespace wavefield::io {

namespace {

template <class T>
T read_le(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("truncated WAV file: " + path);
  return v;
}

template <class T>
void write_le(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

Audio read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0)
    throw FormatError("not a RIFF file: " + path);
  (void)read_le<std::uint32_t>(in, path);  // riff size, unused
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0)
    throw FormatError("not a WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<char> data;
  bool have_fmt = false, have_data = false;

  while (in.read(tag, 4)) {
    const auto size = read_le<std::uint32_t>(in, path);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_le<std::uint16_t>(in, path);
      channels = read_le<std::uint16_t>(in, path);
      rate = read_le<std::uint32_t>(in, path);
      (void)read_le<std::uint32_t>(in, path);  // byte rate
      (void)read_le<std::uint16_t>(in, path);  // block align
      bits = read_le<std::uint16_t>(in, path);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(size);
      in.read(data.data(), size);
      if (!in) throw FormatError("truncated WAV data chunk: " + path);
      have_data = true;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);  // chunks are word-aligned
    }
  }
  if (!have_fmt || !have_data)
    throw FormatError("WAV missing fmt or data chunk: " + path);
  if (channels == 0 || rate == 0)
    throw FormatError("WAV has zero channels or rate: " + path);

  Audio audio;
  audio.sample_rate = static_cast<int>(rate);
  if (format == 3 && bits == 32) {
    const std::size_t n = data.size() / 4 / channels;
    audio.samples = Mat(channels, static_cast<Eigen::Index>(n));
    const float* p = reinterpret_cast<const float*>(data.data());
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < channels; ++c)
        audio.samples(c, static_cast<Eigen::Index>(i)) =
            static_cast<double>(p[i * channels + c]);
  } else if (format == 1 && bits == 16) {
    const std::size_t n = data.size() / 2 / channels;
    audio.samples = Mat(channels, static_cast<Eigen::Index>(n));
    const std::int16_t* p = reinterpret_cast<const std::int16_t*>(data.data());
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < channels; ++c)
        audio.samples(c, static_cast<Eigen::Index>(i)) =
            static_cast<double>(p[i * channels + c]) / 32768.0;
  } else {
    throw FormatError("unsupported WAV encoding (need float32 or PCM16): " + path);
  }
  return audio;
}

void write_wav(const std::string& path, const Audio& audio) {
  if (audio.channels() == 0 || audio.sample_rate <= 0)
    throw InputError("write_wav: empty audio or bad sample rate");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open WAV for writing: " + path);

  const std::uint16_t channels = static_cast<std::uint16_t>(audio.channels());
  const std::uint32_t frames = static_cast<std::uint32_t>(audio.length());
  const std::uint32_t data_bytes = frames * channels * 4;

  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, 3);  // IEEE float
  write_le<std::uint16_t>(out, channels);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(audio.sample_rate));
  write_le<std::uint32_t>(out,
                          static_cast<std::uint32_t>(audio.sample_rate) * channels * 4);
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(channels * 4));
  write_le<std::uint16_t>(out, 32);
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_bytes);
  for (std::uint32_t i = 0; i < frames; ++i)
    for (int c = 0; c < channels; ++c) {
      const float v = static_cast<float>(audio.samples(c, static_cast<Eigen::Index>(i)));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  if (!out) throw IoError("short write on WAV file: " + path);
}

Audio resample_linear(const Audio& audio, int target_rate) {
  if (target_rate <= 0) throw InputError("resample: bad target rate");
  if (audio.sample_rate == target_rate) return audio;
  const int src_len = audio.length();
  if (src_len < 2) throw InputError("resample: signal too short");
  const double ratio = static_cast<double>(target_rate) / audio.sample_rate;
  const int dst_len = static_cast<int>(std::lround(src_len * ratio));
  Audio out;
  out.sample_rate = target_rate;
  out.samples = Mat(audio.channels(), dst_len);
  for (int i = 0; i < dst_len; ++i) {
    const double t = static_cast<double>(i) / ratio;
    const int i0 = std::min(static_cast<int>(t), src_len - 2);
    const double frac = t - i0;
    for (int c = 0; c < audio.channels(); ++c)
      out.samples(c, i) = (1.0 - frac) * audio.samples(c, i0) +
                          frac * audio.samples(c, i0 + 1);
  }
  return out;
}

}  // namespace wavefield::io
