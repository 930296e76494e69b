// Amplitude envelope via the analytic signal: zero the negative
// frequencies, double the positive ones (DC and Nyquist stay single), and
// take the magnitude of the inverse transform. Arbitrary lengths are handled
// by the Bluestein path of the FFT, so no zero-padding artifacts.
#pragma once

#include "wavefield/common.hpp"

namespace wavefield::dsp {

Vec hilbert_envelope(const Vec& signal);

}  // namespace wavefield::dsp
