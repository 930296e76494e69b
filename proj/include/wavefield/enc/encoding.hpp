// Input encodings for the field networks.
//
// * positional_encode: classic frequency encoding. Per input dimension the
//   layout is [x, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{L-1} pi x),
//   cos(2^{L-1} pi x)] (the raw value is included only when requested), so
//   the output width is d * (2L + include_input).
// * relative_direction: counterclockwise signed angle from the listener's
//   heading vector to the listener->source vector, wrapped to [0, 2pi).
//   A source dead ahead gives 0, directly left gives pi/2.
// * DirectionEmbedding: a learnable 4 x c table anchored at 0/90/180/270
//   degrees; a query angle linearly interpolates its two nearest anchors,
//   so gradients flow to exactly those two rows.
#pragma once

#include "wavefield/common.hpp"

namespace wavefield::enc {

struct PositionalEncoding {
  int num_frequencies = 10;
  bool include_input = true;
  // strict: inputs outside [-1,1] raise InputError; lenient: clamp.
  bool strict_range = true;

  int out_dim(int in_dim) const {
    return in_dim * (2 * num_frequencies + (include_input ? 1 : 0));
  }
};

// Encode a single point (in_dim values) into out_dim(in_dim) values.
Vec positional_encode(const Vec& x, const PositionalEncoding& pe);

// Row-wise batched variant: each row of `x` is one point.
Mat positional_encode_rows(const Mat& x, const PositionalEncoding& pe);

// CCW angle from heading to source as seen from the listener; [0, 2pi).
// Throws GeometryError when the source coincides with the listener.
double relative_direction(double lx, double ly, double heading,
                          double sx, double sy);

struct DirectionEmbedding {
  Mat table;  // 4 x c, rows at 0, 90, 180, 270 degrees

  explicit DirectionEmbedding(int channels = 0) {
    if (channels > 0) table = Mat::Zero(4, channels);
  }
  void init(Rng& rng) {
    const double bound = std::sqrt(1.0 / 4.0);
    for (Eigen::Index i = 0; i < table.rows(); ++i)
      for (Eigen::Index j = 0; j < table.cols(); ++j)
        table(i, j) = rng.uniform(-bound, bound);
  }

  // Interpolated row for angle `theta` (radians, any value; wrapped).
  // If `weights_out` is given, it receives (row_lo, w_lo, row_hi, w_hi)
  // for gradient routing.
  Vec interpolate(double theta, std::array<double, 4>* weights_out = nullptr) const;
};

}  // namespace wavefield::enc
