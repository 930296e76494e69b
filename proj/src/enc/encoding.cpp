#include "wavefield/enc/encoding.hpp"

#include <array>
#include <cmath>

namespace wavefield::enc {

namespace {
double checked(double v, const PositionalEncoding& pe) {
  if (v < -1.0 || v > 1.0) {
    if (pe.strict_range)
      throw InputError("positional_encode: input outside [-1,1]");
    v = std::clamp(v, -1.0, 1.0);
  }
  return v;
}
}  // namespace

Vec positional_encode(const Vec& x, const PositionalEncoding& pe) {
  const int d = static_cast<int>(x.size());
  Vec out(pe.out_dim(d));
  int o = 0;
  for (int i = 0; i < d; ++i) {
    const double v = checked(x[i], pe);
    if (pe.include_input) out[o++] = v;
    double scale = kPi;  // 2^0 * pi
    for (int k = 0; k < pe.num_frequencies; ++k) {
      out[o++] = std::sin(scale * v);
      out[o++] = std::cos(scale * v);
      scale *= 2.0;
    }
  }
  return out;
}

Mat positional_encode_rows(const Mat& x, const PositionalEncoding& pe) {
  Mat out(x.rows(), pe.out_dim(static_cast<int>(x.cols())));
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    out.row(r) = positional_encode(x.row(r).transpose(), pe).transpose();
  return out;
}

double relative_direction(double lx, double ly, double heading,
                          double sx, double sy) {
  const double v1x = sx - lx, v1y = sy - ly;
  if (std::hypot(v1x, v1y) < 1e-9)
    throw GeometryError("relative_direction: source coincides with listener");
  const double v2x = std::cos(heading), v2y = std::sin(heading);
  const double cross = v2x * v1y - v2y * v1x;  // z of V2 x V1; >0 means left
  const double dot = v2x * v1x + v2y * v1y;
  return wrap_angle_2pi(std::atan2(cross, dot));
}

Vec DirectionEmbedding::interpolate(double theta,
                                    std::array<double, 4>* weights_out) const {
  if (table.rows() != 4 || table.cols() == 0)
    throw ConfigError("DirectionEmbedding: table must be 4 x c");
  const double deg = wrap_angle_2pi(theta) * 180.0 / kPi;
  int lo = static_cast<int>(deg / 90.0);
  if (lo > 3) lo = 3;  // deg == 360 - epsilon rounding guard
  const int hi = (lo + 1) % 4;
  const double frac = (deg - 90.0 * lo) / 90.0;
  if (weights_out)
    *weights_out = {static_cast<double>(lo), 1.0 - frac,
                    static_cast<double>(hi), frac};
  return (1.0 - frac) * table.row(lo).transpose() +
         frac * table.row(hi).transpose();
}

}  // namespace wavefield::enc
