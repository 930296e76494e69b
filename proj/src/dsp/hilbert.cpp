#include "wavefield/dsp/hilbert.hpp"

#include <cmath>

#include "wavefield/dsp/fft.hpp"

namespace wavefield::dsp {

Vec hilbert_envelope(const Vec& signal) {
  const int n = static_cast<int>(signal.size());
  if (n == 0) return Vec();
  std::vector<cplx> buf(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = cplx(signal[i], 0.0);
  buf = fft(std::move(buf));
  // analytic-signal weights: keep DC (and Nyquist for even n), double the
  // positive half, zero the negative half
  const int half = n / 2;
  for (int k = 1; k < (n + 1) / 2; ++k) buf[static_cast<std::size_t>(k)] *= 2.0;
  for (int k = (n % 2 == 0) ? half + 1 : half + 1; k < n; ++k)
    buf[static_cast<std::size_t>(k)] = cplx(0.0, 0.0);
  buf = ifft(std::move(buf));
  Vec env(n);
  for (int i = 0; i < n; ++i) env[i] = std::abs(buf[static_cast<std::size_t>(i)]);
  return env;
}

}  // namespace wavefield::dsp
