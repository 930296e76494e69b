// Closed-form acoustic oracle. Binaural targets are constructed inside the
// mask family the model learns (per-frequency mixture gain + signed channel
// split), so training error on these scenes is attributable to the
// implementation rather than model mismatch.
#pragma once

#include "wavefield/dsp/stft.hpp"
#include "wavefield/io/wav.hpp"
#include "wavefield/pose.hpp"
#include "wavefield/sim/scene.hpp"

namespace wavefield::sim {

struct OracleMasks {
  Vec m_m;  // F-vector in [0,1]: per-frequency mixture gain
  Vec m_d;  // F-vector in [-1,1]: per-frequency signed channel split
};

// 1 - strength * (absorption-weighted fraction of frustum rays hitting
// absorbing geometry). Depends on the absolute heading; equals 1 when the
// scene has no room or zero material strength.
double material_view_factor(const SceneSpec& scene, const Pose& pose);

// Exact per-pose masks aggregated over sources:
//   m_m(f) = view_factor * sum_i g_i * exp(-k(f) d_i),  g_i = 1/max(d_i,d_min)
//   m_d(f) = sum_i g_i A_i rho_i / sum_i g_i A_i,       rho_i = alpha sin(th'_i)
OracleMasks oracle_masks(const SceneSpec& scene, const Pose& pose, int num_bins);

// Binaural target: mask algebra applied to the source magnitudes in the STFT
// domain (s_m = m_m*|S|, s_l = s_m(1+m_d), s_r = s_m(1-m_d)), synthesized
// with the source phase. Output has two channels of the source length.
io::Audio simulate_binaural(const SceneSpec& scene, const Pose& pose,
                            const io::Audio& source,
                            const dsp::StftConfig& cfg);

// Parametric impulse response: per-source direct impulse at the rounded
// delay d/speed with amplitude 1/max(d,d_min), plus one per-scene seeded
// Gaussian tail whose envelope exp(-beta t) is calibrated so the Schroeder
// curve falls 60 dB in exactly t60 (beta = 3 ln10 / t60). Channel gains
// (1+rho)/(1-rho) scale each source's direct path; the tail uses the
// energy-weighted mean of the source gains (diffuse-field compromise).
io::Audio simulate_ir(const SceneSpec& scene, const Pose& pose,
                      int sample_rate = 22050);

}  // namespace wavefield::sim
