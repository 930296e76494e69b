// WAV reading/writing.
//
// Native format: 32-bit IEEE float, written with the classic 44-byte header
// (16-byte fmt chunk, format tag 3). Readers additionally accept 16-bit PCM
// (samples scaled by 1/32768) and skip unrecognized chunks. Channels come
// back non-interleaved as rows of a channels x length matrix in [-1, 1]-ish
// float range (no clipping is applied on either path).
#pragma once

#include <string>

#include "wavefield/common.hpp"

namespace wavefield::io {

struct Audio {
  Mat samples;  // channels x length
  int sample_rate = 0;

  int channels() const { return static_cast<int>(samples.rows()); }
  int length() const { return static_cast<int>(samples.cols()); }
};

Audio read_wav(const std::string& path);
void write_wav(const std::string& path, const Audio& audio);

// Linear-interpolation resampling; returns the input untouched when rates
// already match.
Audio resample_linear(const Audio& audio, int target_rate);

}  // namespace wavefield::io
