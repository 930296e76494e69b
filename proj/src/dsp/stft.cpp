#include "wavefield/dsp/stft.hpp"

#include <cmath>

#include "wavefield/dsp/fft.hpp"

namespace wavefield::dsp {

void StftConfig::validate() const {
  if (n_fft <= 0 || win_length <= 0 || hop_length <= 0)
    throw ConfigError("stft: sizes must be positive");
  if (win_length > n_fft) throw ConfigError("stft: win_length > n_fft");
  if (hop_length > win_length) throw ConfigError("stft: hop_length > win_length");
  if ((n_fft & (n_fft - 1)) != 0)
    throw ConfigError("stft: n_fft must be a power of two");
  if (window != "hann") throw ConfigError("stft: unsupported window " + window);
  if (sample_rate <= 0) throw ConfigError("stft: sample_rate must be positive");
}

Vec make_window(const StftConfig& cfg) {
  cfg.validate();
  Vec w = Vec::Zero(cfg.n_fft);
  const int off = (cfg.n_fft - cfg.win_length) / 2;  // center if shorter
  for (int n = 0; n < cfg.win_length; ++n)
    w[off + n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / cfg.win_length);
  return w;
}

namespace {

// Reflection index without edge repetition (…, x2, x1, | x0, x1, …).
int reflect_index(int i, int len) {
  if (len == 1) return 0;
  const int period = 2 * (len - 1);
  i = ((i % period) + period) % period;
  return i < len ? i : period - i;
}

int frame_count(int len, int hop) {
  return 1 + static_cast<int>((static_cast<long long>(len) + hop - 1) / hop);
}

}  // namespace

Spectrogram stft(const Vec& signal, const StftConfig& cfg) {
  cfg.validate();
  const int len = static_cast<int>(signal.size());
  if (len < 2) throw InputError("stft: signal too short");
  const int pad = cfg.n_fft / 2;
  const int W = frame_count(len, cfg.hop_length);
  const int F = cfg.num_bins();
  const Vec win = make_window(cfg);

  Spectrogram spec;
  spec.magnitude = Mat::Zero(F, W);
  spec.phase = Mat::Zero(F, W);
  spec.num_samples = len;

  std::vector<double> frame(static_cast<std::size_t>(cfg.n_fft));
  for (int w = 0; w < W; ++w) {
    const int start = w * cfg.hop_length - pad;  // position in the raw signal
    for (int n = 0; n < cfg.n_fft; ++n)
      frame[static_cast<std::size_t>(n)] =
          signal[reflect_index(start + n, len)] * win[n];
    const auto bins = rfft(frame);
    for (int f = 0; f < F; ++f) {
      spec.magnitude(f, w) = std::abs(bins[static_cast<std::size_t>(f)]);
      spec.phase(f, w) = std::arg(bins[static_cast<std::size_t>(f)]);
    }
  }
  return spec;
}

Vec istft(const Mat& magnitude, const Mat& phase, const StftConfig& cfg,
          int length) {
  cfg.validate();
  const int F = cfg.num_bins();
  if (magnitude.rows() != F || phase.rows() != F ||
      magnitude.cols() != phase.cols())
    throw InputError("istft: spectrogram shape mismatch");
  const int W = static_cast<int>(magnitude.cols());
  const int pad = cfg.n_fft / 2;
  const int padded_len = (W - 1) * cfg.hop_length + cfg.n_fft;
  const Vec win = make_window(cfg);

  Vec acc = Vec::Zero(padded_len);
  Vec wsum = Vec::Zero(padded_len);
  std::vector<cplx> bins(static_cast<std::size_t>(F));
  for (int w = 0; w < W; ++w) {
    for (int f = 0; f < F; ++f)
      bins[static_cast<std::size_t>(f)] =
          std::polar(magnitude(f, w), phase(f, w));
    const auto frame = irfft(bins, cfg.n_fft);
    const int start = w * cfg.hop_length;
    for (int n = 0; n < cfg.n_fft; ++n) {
      acc[start + n] += frame[static_cast<std::size_t>(n)] * win[n];
      wsum[start + n] += win[n] * win[n];
    }
  }
  for (int i = 0; i < padded_len; ++i)
    if (wsum[i] > 1e-12) acc[i] /= wsum[i];

  const int L = length > 0 ? length : (W - 1) * cfg.hop_length;
  if (pad + L > padded_len)
    throw InputError("istft: requested length exceeds synthesized range");
  return acc.segment(pad, L);
}

Vec stft_adjoint(const Eigen::MatrixXcd& grad_spec, const StftConfig& cfg,
                 int length) {
  cfg.validate();
  const int F = cfg.num_bins();
  if (grad_spec.rows() != F)
    throw InputError("stft_adjoint: gradient bin count mismatch");
  const int W = static_cast<int>(grad_spec.cols());
  const int expect_w = frame_count(length, cfg.hop_length);
  if (W != expect_w) throw InputError("stft_adjoint: frame count mismatch");
  const int pad = cfg.n_fft / 2;
  const Vec win = make_window(cfg);

  Vec dx = Vec::Zero(length);
  std::vector<cplx> h(static_cast<std::size_t>(cfg.n_fft), cplx(0, 0));
  for (int w = 0; w < W; ++w) {
    // d/dx of Re/Im parts of the one-sided bins: Re(sum_k conj(G_k)e^{-i2pikn/N})
    for (int f = 0; f < F; ++f)
      h[static_cast<std::size_t>(f)] = std::conj(grad_spec(f, w));
    for (int f = F; f < cfg.n_fft; ++f) h[static_cast<std::size_t>(f)] = cplx(0, 0);
    const auto conv = fft(h);
    const int start = w * cfg.hop_length - pad;
    for (int n = 0; n < cfg.n_fft; ++n) {
      // adjoint of reflect padding: every padded position accumulates onto
      // the original sample it mirrors
      dx[reflect_index(start + n, length)] +=
          conv[static_cast<std::size_t>(n)].real() * win[n];
    }
  }
  return dx;
}

}  // namespace wavefield::dsp
