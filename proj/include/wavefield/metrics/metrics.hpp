// Evaluation metrics for synthesized binaural audio and impulse responses,
// plus the reference energy-scaling baselines.
//
// Reductions follow the training-loss convention: squared distances are
// averaged per element within a channel, so a reported magnitude distance is
// directly comparable to the optimization objective. Decay metrics
// (reverberation time, clarity, early decay time) are estimated from the
// Schroeder backward integral of each impulse response and are undefined on
// inputs without enough decay; those throw MetricError so batch drivers can
// exclude the sample and log it.
#pragma once

#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavefield/common.hpp"
#include "wavefield/dsp/stft.hpp"
#include "wavefield/io/wav.hpp"

namespace wavefield::metrics {

// Squared magnitude-spectrogram distance: per channel the mean over all
// (bin, frame) elements of (|STFT(pred)| - |STFT(gt)|)^2, summed over
// channels. Phase is discarded entirely.
double mag_distance(const io::Audio& pred, const io::Audio& gt,
                    const dsp::StftConfig& cfg);

// Squared distance between per-channel amplitude envelopes (via the analytic
// signal), mean-reduced per channel, averaged over channels.
double env_distance(const io::Audio& pred, const io::Audio& gt);

// ---- impulse-response estimators (single channel) --------------------------
// All three throw MetricError when the metric is undefined for the input
// (silent IR, insufficient decay range, or too short).

// Reverberation time in seconds: least-squares fit of the Schroeder decay
// curve over its -5..-35 dB span, extrapolated to a 60 dB decay (T30 x 2).
// Requires the curve to reach -35 dB.
double estimate_t60(const Vec& ir, int sample_rate);

// Early decay time in seconds: same fit over the 0..-10 dB span, extrapolated
// to 60 dB. Requires the curve to reach -10 dB.
double estimate_edt(const Vec& ir, int sample_rate);

// Clarity index 10*log10(E[0,50ms] / E[50ms,end]) in dB, clamped to +-60 dB
// (with a log line) when one side has no energy. Requires length > 50 ms.
double compute_c50(const Vec& ir, int sample_rate);

// ---- paired impulse-response errors (channel-averaged) ---------------------
// Channel counts and sample rates must match; each channel is scored
// independently and the scores averaged. Any channel on which an estimator is
// undefined makes the whole comparison throw MetricError.

double t60_error(const io::Audio& pred_ir, const io::Audio& gt_ir);  // percent
double c50_error(const io::Audio& pred_ir, const io::Audio& gt_ir);  // dB
double edt_error(const io::Audio& pred_ir, const io::Audio& gt_ir);  // seconds

// ---- reference baselines ----------------------------------------------------

enum class BaselineKind {
  kMonoMono,      // source duplicated onto every output channel
  kMonoEnergy,    // source scaled to the target's mean channel RMS, duplicated
  kStereoEnergy,  // source scaled per channel to that channel's target RMS
};

BaselineKind baseline_kind_from_string(const std::string& name);
std::string to_string(BaselineKind kind);

// Build the baseline prediction for one sample. The source must be mono and
// the same length as the target. A silent source cannot be scaled; the result
// is silent, with a log line when the target is not.
io::Audio baseline(BaselineKind kind, const io::Audio& source,
                   const io::Audio& gt);

// ---- evaluation reports -----------------------------------------------------

// Per-sample scores; NaN marks a metric not measured for that sample (not
// requested, or excluded because an estimator was undefined).
struct SampleMetrics {
  std::string id;
  double mag = std::numeric_limits<double>::quiet_NaN();
  double env = std::numeric_limits<double>::quiet_NaN();
  double t60_pct = std::numeric_limits<double>::quiet_NaN();
  double c50_db = std::numeric_limits<double>::quiet_NaN();
  double edt_s = std::numeric_limits<double>::quiet_NaN();
};

// Aggregate = mean over the samples where each metric is defined, with the
// contributing counts kept alongside (a mean of zero samples reports 0 with
// count 0). Aggregation runs in sample order, so results are deterministic.
struct MetricReport {
  double mag = 0.0;
  double env = 0.0;
  double t60_pct = 0.0;
  double c50_db = 0.0;
  double edt_s = 0.0;
  int n_mag = 0;
  int n_env = 0;
  int n_t60 = 0;
  int n_c50 = 0;
  int n_edt = 0;
  std::vector<SampleMetrics> samples;
};

MetricReport aggregate_report(std::vector<SampleMetrics> samples);

// JSON object with the aggregate scores, counts, and per-sample breakdown
// (NaN serializes as null). The CSV pair emits one flat row per report.
nlohmann::json report_to_json(const MetricReport& report);
std::string report_csv_header();
std::string report_csv_row(const MetricReport& report);

}  // namespace wavefield::metrics
