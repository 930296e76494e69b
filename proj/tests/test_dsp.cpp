#include <doctest.h>

#include <cmath>
#include <complex>

#include "wavefield/dsp/fft.hpp"
#include "wavefield/dsp/hilbert.hpp"
#include "wavefield/dsp/stft.hpp"

using namespace wavefield;
using namespace wavefield::dsp;

namespace {

Vec random_signal(int n, Rng& rng, double amp = 0.5) {
  Vec s(n);
  for (int i = 0; i < n; ++i) s[i] = rng.uniform(-amp, amp);
  return s;
}

// Naive DFT oracle for a single windowed frame.
std::vector<cplx> naive_dft(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<cplx> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    cplx acc(0, 0);
    for (int t = 0; t < n; ++t) {
      const double a = -2.0 * kPi * k * t / n;
      acc += x[static_cast<std::size_t>(t)] * cplx(std::cos(a), std::sin(a));
    }
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

double rel_rms(const Vec& a, const Vec& b) {
  return std::sqrt((a - b).squaredNorm() / std::max(1e-300, b.squaredNorm()));
}

}  // namespace

TEST_CASE("fft matches a naive DFT, pow2 and arbitrary lengths") {
  Rng rng(17);
  for (int n : {8, 64, 512, 12, 45, 100}) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = rng.uniform(-1, 1);
    std::vector<cplx> cx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) cx[i] = cplx(x[i], 0);
    auto got = fft(cx);
    auto want = naive_dft(x);
    double err = 0;
    for (std::size_t k = 0; k < got.size(); ++k)
      err = std::max(err, std::abs(got[k] - want[k]));
    CHECK(err < 1e-9);
    // inverse undoes forward
    auto back = ifft(got);
    double rerr = 0;
    for (std::size_t i = 0; i < back.size(); ++i)
      rerr = std::max(rerr, std::abs(back[i] - cx[i]));
    CHECK(rerr < 1e-11);
  }
}

TEST_CASE("frame count follows 1 + ceil(len/hop)") {
  StftConfig cfg;
  Rng rng(2);
  Vec s = random_signal(22050, rng);
  auto spec = stft(s, cfg);
  CHECK(spec.frames() == 1 + (22050 + 127) / 128);
  CHECK(spec.bins() == 257);
  // exact multiple of hop
  Vec s2 = random_signal(1280, rng);
  CHECK(stft(s2, cfg).frames() == 1 + 10);
}

TEST_CASE("pure tone concentrates energy in its bin") {
  StftConfig cfg;
  // bin 32 center frequency: 32 * sr / n_fft
  const double f0 = 32.0 * cfg.sample_rate / cfg.n_fft;
  Vec s(8192);
  for (int i = 0; i < s.size(); ++i)
    s[i] = std::sin(2.0 * kPi * f0 * i / cfg.sample_rate);
  auto spec = stft(s, cfg);
  // interior frame, away from padding
  const int w = spec.frames() / 2;
  double total = 0, peak = 0;
  for (int f = 0; f < spec.bins(); ++f) {
    const double e = spec.magnitude(f, w) * spec.magnitude(f, w);
    total += e;
    if (std::abs(f - 32) <= 1) peak += e;
  }
  CHECK(peak / total > 0.90);
}

TEST_CASE("stft magnitudes match a naive windowed DFT") {
  StftConfig cfg;
  cfg.n_fft = cfg.win_length = 64;
  cfg.hop_length = 16;
  Rng rng(4);
  Vec s = random_signal(200, rng);
  auto spec = stft(s, cfg);
  const Vec win = make_window(cfg);

  // recompute frame 3 by hand (fully interior for len=200)
  const int w = 3;
  std::vector<double> frame(64);
  for (int n = 0; n < 64; ++n) {
    int idx = w * 16 - 32 + n;
    if (idx < 0) idx = -idx;
    if (idx >= 200) idx = 2 * 199 - idx;
    frame[static_cast<std::size_t>(n)] = s[idx] * win[n];
  }
  auto bins = naive_dft(frame);
  for (int f = 0; f <= 32; ++f)
    CHECK(spec.magnitude(f, w) ==
          doctest::Approx(std::abs(bins[static_cast<std::size_t>(f)])).epsilon(1e-9));

  // Parseval on the frame: sum |X|^2 over the full spectrum = N * sum x^2
  double lhs = 0;
  for (const auto& b : bins) lhs += std::norm(b);
  double rhs = 0;
  for (double v : frame) rhs += v * v;
  CHECK(lhs == doctest::Approx(64.0 * rhs).epsilon(1e-9));
}

TEST_CASE("stft/istft round trip is transparent") {
  StftConfig cfg;
  Rng rng(6);
  for (int len : {22050, 1000, 512, 4097}) {
    Vec s = random_signal(len, rng);
    auto spec = stft(s, cfg);
    Vec back = istft(spec, cfg);
    REQUIRE(back.size() == len);
    CHECK(rel_rms(back, s) < 1e-6);
  }
}

TEST_CASE("scaling magnitudes scales the synthesis") {
  StftConfig cfg;
  Rng rng(8);
  Vec s = random_signal(5000, rng);
  auto spec = stft(s, cfg);
  Vec doubled = istft(2.0 * spec.magnitude, spec.phase, cfg, 5000);
  CHECK(rel_rms(doubled, Vec(2.0 * s)) < 1e-6);
}

TEST_CASE("stft linearity in amplitude") {
  StftConfig cfg;
  Rng rng(9);
  Vec s = random_signal(3000, rng);
  auto a = stft(s, cfg);
  auto b = stft(Vec(3.0 * s), cfg);
  CHECK((b.magnitude - 3.0 * a.magnitude).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("stft_adjoint is the true adjoint of analysis") {
  // <A x, G> == <x, A^T G> for random x, G (real inner product over Re/Im)
  StftConfig cfg;
  cfg.n_fft = cfg.win_length = 64;
  cfg.hop_length = 16;
  Rng rng(12);
  const int len = 150;
  Vec x = random_signal(len, rng);
  auto spec = stft(x, cfg);
  const int W = spec.frames();
  Eigen::MatrixXcd g(spec.bins(), W);
  for (int f = 0; f < spec.bins(); ++f)
    for (int w = 0; w < W; ++w)
      g(f, w) = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));

  // <A x, G>: complex spectrum of x against g, real part pairing
  double lhs = 0;
  for (int f = 0; f < spec.bins(); ++f)
    for (int w = 0; w < W; ++w) {
      const cplx X = std::polar(spec.magnitude(f, w), spec.phase(f, w));
      lhs += X.real() * g(f, w).real() + X.imag() * g(f, w).imag();
    }
  Vec aty = stft_adjoint(g, cfg, len);
  const double rhs = aty.dot(x);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
}

TEST_CASE("hilbert envelope of a sinusoid is its amplitude") {
  const int n = 22050;
  Vec s(n);
  for (int i = 0; i < n; ++i)
    s[i] = 0.8 * std::sin(2.0 * kPi * 440.0 * i / 22050.0);
  Vec env = hilbert_envelope(s);
  // interior 80%, edges excluded
  for (int i = n / 10; i < n - n / 10; ++i)
    CHECK(std::abs(env[i] - 0.8) < 0.008);
  // envelope dominates the raw signal magnitude
  double worst = 0;
  for (int i = 0; i < n; ++i) worst = std::min(worst, env[i] - std::abs(s[i]));
  CHECK(worst > -1e-9);
}

TEST_CASE("hilbert envelope tracks AM modulation") {
  const int n = 22050;
  Vec s(n);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 22050.0;
    const double a = 1.0 + 0.5 * std::sin(2.0 * kPi * 3.0 * t);
    s[i] = a * std::sin(2.0 * kPi * 800.0 * t);
  }
  Vec env = hilbert_envelope(s);
  for (int i = n / 10; i < n - n / 10; ++i) {
    const double t = static_cast<double>(i) / 22050.0;
    const double a = 1.0 + 0.5 * std::sin(2.0 * kPi * 3.0 * t);
    CHECK(std::abs(env[i] - a) < 0.02 * 1.5);
  }
}

TEST_CASE("hilbert envelope of zeros is zero") {
  Vec z = Vec::Zero(1000);
  CHECK(hilbert_envelope(z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("config validation rejects bad setups") {
  StftConfig cfg;
  cfg.hop_length = 1024;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  StftConfig c2;
  c2.n_fft = 500;  // not a power of two
  CHECK_THROWS_AS(c2.validate(), ConfigError);
  StftConfig c3;
  c3.window = "hamming";
  CHECK_THROWS_AS(c3.validate(), ConfigError);
}
