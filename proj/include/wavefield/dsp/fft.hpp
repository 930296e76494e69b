// Complex FFT: iterative radix-2 for power-of-two sizes, Bluestein's
// chirp-z fallback for arbitrary sizes (used by the Hilbert transform on
// full-length waveforms). Self-contained and bit-deterministic.
#pragma once

#include <complex>
#include <vector>

namespace wavefield::dsp {

using cplx = std::complex<double>;

// In-place when possible; returns the transform of `x` (length preserved).
std::vector<cplx> fft(std::vector<cplx> x);
std::vector<cplx> ifft(std::vector<cplx> x);  // includes the 1/N factor

// Real input -> one-sided spectrum of length n/2 + 1 (n must be even).
std::vector<cplx> rfft(const std::vector<double>& x);
// One-sided spectrum (length n/2 + 1) -> real signal of length n.
std::vector<double> irfft(const std::vector<cplx>& spec, int n);

}  // namespace wavefield::dsp
