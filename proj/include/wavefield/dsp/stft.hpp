// Short-time Fourier analysis/synthesis.
//
// Analysis: the signal is center-padded by n_fft/2 on each side with
// reflection, framed every `hop` samples, Hann-windowed (periodic), and
// transformed to a one-sided spectrum of F = n_fft/2 + 1 bins. The frame
// count is W = 1 + ceil(len / hop); right padding is extended as needed so
// the last frame is always fully defined.
//
// Synthesis: weighted overlap-add with the same window, normalized by the
// accumulated squared window, then the center padding is trimmed. Feeding
// the analysis output straight back reconstructs the signal to ~1e-12;
// magnitude-modified spectra are synthesized against a caller-supplied
// phase (typically the source signal's).
#pragma once

#include <string>
#include <vector>

#include "wavefield/common.hpp"

namespace wavefield::dsp {

struct StftConfig {
  int n_fft = 512;
  int win_length = 512;
  int hop_length = 128;
  std::string window = "hann";
  int sample_rate = 22050;

  int num_bins() const { return n_fft / 2 + 1; }
  void validate() const;
};

// Magnitude/phase pair, each F x W (bins x frames).
struct Spectrogram {
  Mat magnitude;
  Mat phase;
  int num_samples = 0;  // original signal length; 0 when unknown

  int bins() const { return static_cast<int>(magnitude.rows()); }
  int frames() const { return static_cast<int>(magnitude.cols()); }
};

Vec make_window(const StftConfig& cfg);

Spectrogram stft(const Vec& signal, const StftConfig& cfg);

// Synthesize from explicit magnitude and phase. `length` <= 0 means
// "infer from frame count" (W-1 hops).
Vec istft(const Mat& magnitude, const Mat& phase, const StftConfig& cfg,
          int length);
inline Vec istft(const Spectrogram& spec, const StftConfig& cfg) {
  return istft(spec.magnitude, spec.phase, cfg, spec.num_samples);
}

// Adjoint of the linear analysis map with respect to the real one-sided
// inner product used by the losses: given dL/d(Re,Im) packed as a complex
// F x W gradient, return dL/d(signal). Needed when a loss is defined on
// STFT magnitudes of a signal the model predicts.
Vec stft_adjoint(const Eigen::MatrixXcd& grad_spec, const StftConfig& cfg,
                 int length);

}  // namespace wavefield::dsp
