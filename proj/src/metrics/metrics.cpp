#include "wavefield/metrics/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "wavefield/dsp/hilbert.hpp"

namespace wavefield::metrics {
namespace {

void warn(const std::string& msg) {
  std::cerr << "[metrics] " << msg << "\n";
}

void check_paired(const io::Audio& pred, const io::Audio& gt,
                  const char* what, bool need_equal_length) {
  if (pred.channels() != gt.channels()) {
    throw InputError(std::string(what) + ": channel count mismatch (" +
                     std::to_string(pred.channels()) + " vs " +
                     std::to_string(gt.channels()) + ")");
  }
  if (pred.channels() < 1 || pred.length() < 1 || gt.length() < 1) {
    throw InputError(std::string(what) + ": empty input");
  }
  if (need_equal_length && pred.length() != gt.length()) {
    throw InputError(std::string(what) + ": length mismatch (" +
                     std::to_string(pred.length()) + " vs " +
                     std::to_string(gt.length()) + ")");
  }
  if (pred.sample_rate > 0 && gt.sample_rate > 0 &&
      pred.sample_rate != gt.sample_rate) {
    throw InputError(std::string(what) + ": sample rate mismatch (" +
                     std::to_string(pred.sample_rate) + " vs " +
                     std::to_string(gt.sample_rate) + ")");
  }
}

// Schroeder backward integral of the squared IR, normalized to 0 dB at the
// first sample. Monotone non-increasing by construction.
Vec schroeder_db(const Vec& ir) {
  const Eigen::Index n = ir.size();
  if (n < 1) throw InputError("decay metrics: empty impulse response");
  Vec edc(n);
  double acc = 0.0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    acc += ir[i] * ir[i];
    edc[i] = acc;
  }
  const double total = edc[0];
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw MetricError("decay metrics: impulse response is silent or non-finite");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    edc[i] = 10.0 * std::log10(std::max(edc[i] / total, 1e-30));
  }
  return edc;
}

// Least-squares line through the (time, level) points of the decay curve
// that fall inside [lo_db, hi_db], extrapolated to the time of a 60 dB drop.
double decay_time_from_fit(const Vec& edc_db, int sample_rate, double hi_db,
                           double lo_db, const char* what) {
  if (edc_db.minCoeff() > lo_db) {
    std::ostringstream os;
    os << what << ": impulse response decays only "
       << -edc_db.minCoeff() << " dB; the fit needs " << -lo_db << " dB";
    throw MetricError(os.str());
  }
  double n = 0.0, st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (Eigen::Index i = 0; i < edc_db.size(); ++i) {
    const double y = edc_db[i];
    if (y > hi_db || y < lo_db) continue;
    const double t = static_cast<double>(i) / sample_rate;
    n += 1.0;
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double denom = n * stt - st * st;
  if (n < 2.0 || denom <= 0.0) {
    throw MetricError(std::string(what) +
                      ": too few decay-curve points in the fit span");
  }
  const double slope = (n * sty - st * sy) / denom;  // dB per second
  if (!(slope < 0.0) || !std::isfinite(slope)) {
    throw MetricError(std::string(what) + ": decay curve is not decaying");
  }
  return -60.0 / slope;
}

template <class F>
double channel_mean(const io::Audio& pred, const io::Audio& gt, F score) {
  double acc = 0.0;
  for (int c = 0; c < pred.channels(); ++c) {
    const Vec p = pred.samples.row(c).transpose();
    const Vec g = gt.samples.row(c).transpose();
    acc += score(p, g);
  }
  return acc / pred.channels();
}

int require_rate(const io::Audio& pred, const io::Audio& gt, const char* what) {
  const int rate = gt.sample_rate > 0 ? gt.sample_rate : pred.sample_rate;
  if (rate <= 0) {
    throw InputError(std::string(what) + ": no sample rate on either input");
  }
  return rate;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// NaN marks "not measured"; emit a real JSON null instead of relying on the
// serializer's NaN fallback, so DOM consumers see the absence too.
nlohmann::json json_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

double mag_distance(const io::Audio& pred, const io::Audio& gt,
                    const dsp::StftConfig& cfg) {
  cfg.validate();
  check_paired(pred, gt, "mag_distance", /*need_equal_length=*/true);
  double total = 0.0;
  for (int c = 0; c < pred.channels(); ++c) {
    const Vec p = pred.samples.row(c).transpose();
    const Vec g = gt.samples.row(c).transpose();
    const Mat mp = dsp::stft(p, cfg).magnitude;
    const Mat mg = dsp::stft(g, cfg).magnitude;
    total += (mp - mg).squaredNorm() / static_cast<double>(mp.size());
  }
  return total;
}

double env_distance(const io::Audio& pred, const io::Audio& gt) {
  check_paired(pred, gt, "env_distance", /*need_equal_length=*/true);
  const double per_channel = channel_mean(pred, gt, [](const Vec& p, const Vec& g) {
    const Vec ep = dsp::hilbert_envelope(p);
    const Vec eg = dsp::hilbert_envelope(g);
    return (ep - eg).squaredNorm() / static_cast<double>(ep.size());
  });
  return per_channel;
}

double estimate_t60(const Vec& ir, int sample_rate) {
  if (sample_rate <= 0) throw InputError("estimate_t60: bad sample rate");
  return decay_time_from_fit(schroeder_db(ir), sample_rate, -5.0, -35.0,
                             "t60");
}

double estimate_edt(const Vec& ir, int sample_rate) {
  if (sample_rate <= 0) throw InputError("estimate_edt: bad sample rate");
  return decay_time_from_fit(schroeder_db(ir), sample_rate, 0.0, -10.0,
                             "edt");
}

double compute_c50(const Vec& ir, int sample_rate) {
  if (sample_rate <= 0) throw InputError("compute_c50: bad sample rate");
  const Eigen::Index n = ir.size();
  const Eigen::Index n50 =
      static_cast<Eigen::Index>(std::llround(0.05 * sample_rate));
  if (n <= n50) {
    throw MetricError("c50: impulse response must be longer than 50 ms");
  }
  const double early = ir.head(n50).squaredNorm();
  const double late = ir.tail(n - n50).squaredNorm();
  if (!(early + late > 0.0)) {
    throw MetricError("c50: impulse response is silent");
  }
  constexpr double kClampDb = 60.0;
  if (late <= 0.0) {
    warn("c50: no late energy; clamping at +60 dB");
    return kClampDb;
  }
  if (early <= 0.0) {
    warn("c50: no early energy; clamping at -60 dB");
    return -kClampDb;
  }
  const double c50 = 10.0 * std::log10(early / late);
  if (c50 > kClampDb) {
    warn("c50: ratio above +60 dB; clamped");
    return kClampDb;
  }
  if (c50 < -kClampDb) {
    warn("c50: ratio below -60 dB; clamped");
    return -kClampDb;
  }
  return c50;
}

double t60_error(const io::Audio& pred_ir, const io::Audio& gt_ir) {
  check_paired(pred_ir, gt_ir, "t60_error", /*need_equal_length=*/false);
  const int rate = require_rate(pred_ir, gt_ir, "t60_error");
  return channel_mean(pred_ir, gt_ir, [rate](const Vec& p, const Vec& g) {
    const double tg = estimate_t60(g, rate);
    const double tp = estimate_t60(p, rate);
    return 100.0 * std::abs(tp - tg) / tg;
  });
}

double c50_error(const io::Audio& pred_ir, const io::Audio& gt_ir) {
  check_paired(pred_ir, gt_ir, "c50_error", /*need_equal_length=*/false);
  const int rate = require_rate(pred_ir, gt_ir, "c50_error");
  return channel_mean(pred_ir, gt_ir, [rate](const Vec& p, const Vec& g) {
    return std::abs(compute_c50(p, rate) - compute_c50(g, rate));
  });
}

double edt_error(const io::Audio& pred_ir, const io::Audio& gt_ir) {
  check_paired(pred_ir, gt_ir, "edt_error", /*need_equal_length=*/false);
  const int rate = require_rate(pred_ir, gt_ir, "edt_error");
  return channel_mean(pred_ir, gt_ir, [rate](const Vec& p, const Vec& g) {
    return std::abs(estimate_edt(p, rate) - estimate_edt(g, rate));
  });
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "mono-mono") return BaselineKind::kMonoMono;
  if (name == "mono-energy") return BaselineKind::kMonoEnergy;
  if (name == "stereo-energy") return BaselineKind::kStereoEnergy;
  throw ConfigError("unknown baseline kind '" + name +
                    "' (expected mono-mono, mono-energy, or stereo-energy)");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kMonoMono: return "mono-mono";
    case BaselineKind::kMonoEnergy: return "mono-energy";
    case BaselineKind::kStereoEnergy: return "stereo-energy";
  }
  throw InputError("to_string: bad baseline kind");
}

io::Audio baseline(BaselineKind kind, const io::Audio& source,
                   const io::Audio& gt) {
  if (source.channels() != 1) {
    throw InputError("baseline: source must be mono, got " +
                     std::to_string(source.channels()) + " channels");
  }
  if (gt.channels() < 1 || gt.length() < 1) {
    throw InputError("baseline: empty ground truth");
  }
  if (source.length() != gt.length()) {
    throw InputError("baseline: length mismatch (" +
                     std::to_string(source.length()) + " vs " +
                     std::to_string(gt.length()) + ")");
  }
  if (source.sample_rate > 0 && gt.sample_rate > 0 &&
      source.sample_rate != gt.sample_rate) {
    throw InputError("baseline: sample rate mismatch");
  }

  const Eigen::Index n = gt.length();
  const Eigen::RowVectorXd s = source.samples.row(0);
  const double rms_source = std::sqrt(s.squaredNorm() / n);
  const auto channel_rms = [&](int c) {
    return std::sqrt(gt.samples.row(c).squaredNorm() / n);
  };

  io::Audio out;
  out.sample_rate = gt.sample_rate > 0 ? gt.sample_rate : source.sample_rate;
  out.samples.setZero(gt.channels(), n);

  switch (kind) {
    case BaselineKind::kMonoMono:
      for (int c = 0; c < gt.channels(); ++c) out.samples.row(c) = s;
      break;
    case BaselineKind::kMonoEnergy: {
      double target = 0.0;
      for (int c = 0; c < gt.channels(); ++c) target += channel_rms(c);
      target /= gt.channels();
      if (rms_source == 0.0) {
        if (target > 0.0) {
          warn("baseline mono-energy: silent source cannot be scaled to a "
               "non-silent target; returning silence");
        }
        break;
      }
      const double scale = target / rms_source;
      for (int c = 0; c < gt.channels(); ++c) out.samples.row(c) = scale * s;
      break;
    }
    case BaselineKind::kStereoEnergy: {
      if (rms_source == 0.0) {
        bool any = false;
        for (int c = 0; c < gt.channels(); ++c) any |= channel_rms(c) > 0.0;
        if (any) {
          warn("baseline stereo-energy: silent source cannot be scaled to a "
               "non-silent target; returning silence");
        }
        break;
      }
      for (int c = 0; c < gt.channels(); ++c) {
        out.samples.row(c) = (channel_rms(c) / rms_source) * s;
      }
      break;
    }
  }
  return out;
}

MetricReport aggregate_report(std::vector<SampleMetrics> samples) {
  MetricReport report;
  report.samples = std::move(samples);
  double sums[5] = {0, 0, 0, 0, 0};
  int* counts[5] = {&report.n_mag, &report.n_env, &report.n_t60,
                    &report.n_c50, &report.n_edt};
  for (const SampleMetrics& s : report.samples) {
    const double values[5] = {s.mag, s.env, s.t60_pct, s.c50_db, s.edt_s};
    for (int k = 0; k < 5; ++k) {
      if (std::isfinite(values[k])) {
        sums[k] += values[k];
        ++*counts[k];
      }
    }
  }
  double* means[5] = {&report.mag, &report.env, &report.t60_pct,
                      &report.c50_db, &report.edt_s};
  for (int k = 0; k < 5; ++k) {
    *means[k] = *counts[k] > 0 ? sums[k] / *counts[k] : 0.0;
  }
  return report;
}

nlohmann::json report_to_json(const MetricReport& report) {
  nlohmann::json j{
      {"mag", report.mag},
      {"env", report.env},
      {"t60_pct", report.t60_pct},
      {"c50_db", report.c50_db},
      {"edt_s", report.edt_s},
      {"counts",
       {{"mag", report.n_mag},
        {"env", report.n_env},
        {"t60", report.n_t60},
        {"c50", report.n_c50},
        {"edt", report.n_edt}}},
  };
  auto arr = nlohmann::json::array();
  for (const SampleMetrics& s : report.samples) {
    arr.push_back({{"id", s.id},
                   {"mag", json_or_null(s.mag)},
                   {"env", json_or_null(s.env)},
                   {"t60_pct", json_or_null(s.t60_pct)},
                   {"c50_db", json_or_null(s.c50_db)},
                   {"edt_s", json_or_null(s.edt_s)}});
  }
  j["samples"] = std::move(arr);
  return j;
}

std::string report_csv_header() {
  return "mag,env,t60_pct,c50_db,edt_s,n_mag,n_env,n_t60,n_c50,n_edt";
}

std::string report_csv_row(const MetricReport& r) {
  std::ostringstream os;
  os << format_number(r.mag) << ',' << format_number(r.env) << ','
     << format_number(r.t60_pct) << ',' << format_number(r.c50_db) << ','
     << format_number(r.edt_s) << ',' << r.n_mag << ',' << r.n_env << ','
     << r.n_t60 << ',' << r.n_c50 << ',' << r.n_edt;
  return os.str();
}

}  // namespace wavefield::metrics
