#include "wavefield/dsp/fft.hpp"

#include <cmath>
#include <cstddef>

#include "wavefield/common.hpp"

namespace wavefield::dsp {

namespace {

bool is_pow2(std::size_t n) { return n && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative Cooley-Tukey, decimation in time. sign = -1 forward, +1 inverse.
void fft_pow2(std::vector<cplx>& a, int sign) {
  const std::size_t n = a.size();
  // bit reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * wavefield::kPi / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Bluestein: express an arbitrary-N DFT as a convolution, done with a
// power-of-two FFT of length >= 2N-1.
std::vector<cplx> bluestein(const std::vector<cplx>& x, int sign) {
  const std::size_t n = x.size();
  const std::size_t m = next_pow2(2 * n - 1);
  std::vector<cplx> a(m, cplx(0, 0)), b(m, cplx(0, 0));
  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small for numerical stability
    const std::size_t k2 = (k * k) % (2 * n);
    const double ang = sign * wavefield::kPi * static_cast<double>(k2) /
                       static_cast<double>(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
    a[k] = x[k] * chirp[k];
  }
  b[0] = cplx(1, 0);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
  fft_pow2(a, -1);
  fft_pow2(b, -1);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_pow2(a, +1);
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * inv_m * chirp[k];
  return out;
}

std::vector<cplx> transform(std::vector<cplx> x, int sign) {
  if (x.empty()) return x;
  if (is_pow2(x.size())) {
    fft_pow2(x, sign);
    return x;
  }
  return bluestein(x, sign);
}

}  // namespace

std::vector<cplx> fft(std::vector<cplx> x) { return transform(std::move(x), -1); }

std::vector<cplx> ifft(std::vector<cplx> x) {
  const double inv_n = x.empty() ? 1.0 : 1.0 / static_cast<double>(x.size());
  auto out = transform(std::move(x), +1);
  for (auto& v : out) v *= inv_n;
  return out;
}

std::vector<cplx> rfft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n % 2 != 0) throw wavefield::InputError("rfft requires even length");
  std::vector<cplx> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = cplx(x[i], 0.0);
  buf = fft(std::move(buf));
  buf.resize(n / 2 + 1);
  return buf;
}

std::vector<double> irfft(const std::vector<cplx>& spec, int n) {
  if (static_cast<int>(spec.size()) != n / 2 + 1 || n % 2 != 0)
    throw wavefield::InputError("irfft: spectrum length does not match n");
  std::vector<cplx> full(static_cast<std::size_t>(n));
  for (int k = 0; k <= n / 2; ++k) full[static_cast<std::size_t>(k)] = spec[static_cast<std::size_t>(k)];
  for (int k = n / 2 + 1; k < n; ++k)
    full[static_cast<std::size_t>(k)] = std::conj(spec[static_cast<std::size_t>(n - k)]);
  auto t = ifft(std::move(full));
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(i)].real();
  return out;
}

}  // namespace wavefield::dsp
