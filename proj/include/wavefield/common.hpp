// Shared basics: error taxonomy, deterministic RNG, small helpers.
//
// Every random draw in the library goes through Rng so that results are
// bit-reproducible for a given seed regardless of platform stdlib details
// (std::uniform_real_distribution is implementation-defined; we map raw
// mt19937_64 output to doubles ourselves).
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace wavefield {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

// ---- error taxonomy -------------------------------------------------------
// ConfigError / UsageError surface as CLI exit code 2 (bad invocation or
// config); the rest surface as exit code 1 (runtime failure).

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error { using Error::Error; };   // bad config/schema/flag
struct UsageError : Error { using Error::Error; };    // bad CLI usage
struct InputError : Error { using Error::Error; };    // bad runtime input data
struct IoError : Error { using Error::Error; };       // file missing/unreadable
struct FormatError : Error { using Error::Error; };   // malformed file content
struct GeometryError : Error { using Error::Error; }; // degenerate geometry
struct TrainingError : Error { using Error::Error; }; // NaN loss, lock conflict
struct MetricError : Error { using Error::Error; };   // metric undefined on input

// ---- deterministic RNG ----------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1): top 53 bits of the raw draw.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; draws two uniforms per normal pair, caches the spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Integer in [0, n). Rejection-free modulo is fine for our n << 2^64.
  std::uint64_t below(std::uint64_t n) { return n ? gen_() % n : 0; }

  // Fisher-Yates with this generator; deterministic for a given seed.
  template <class V>
  void shuffle(V& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Derive a stream-specific seed from a master seed and a stream tag, so that
// independent consumers (init, batching, noise, ...) never share a stream.
inline std::uint64_t seed_stream(std::uint64_t master, std::uint64_t tag) {
  // splitmix64 finalizer over the combination
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double wrap_angle_2pi(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a;
}

}  // namespace wavefield
