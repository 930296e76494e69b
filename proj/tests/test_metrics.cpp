#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wavefield/dsp/stft.hpp"
#include "wavefield/metrics/metrics.hpp"
#include "wavefield/sim/dataset.hpp"
#include "wavefield/sim/simulate.hpp"

using namespace wavefield;
using namespace wavefield::metrics;

namespace {

io::Audio random_stereo(int n, int rate, Rng& rng, double amp = 0.5) {
  io::Audio a;
  a.sample_rate = rate;
  a.samples.resize(2, n);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < n; ++i) a.samples(c, i) = rng.uniform(-amp, amp);
  }
  return a;
}

io::Audio mono_audio(const Vec& v, int rate) {
  io::Audio a;
  a.sample_rate = rate;
  a.samples = v.transpose();
  return a;
}

io::Audio stereo_from(const Vec& left, const Vec& right, int rate) {
  io::Audio a;
  a.sample_rate = rate;
  a.samples.resize(2, left.size());
  a.samples.row(0) = left.transpose();
  a.samples.row(1) = right.transpose();
  return a;
}

Vec sine(int n, double cycles_per_n, double amp) {
  Vec s(n);
  for (int i = 0; i < n; ++i) {
    s[i] = amp * std::sin(2.0 * kPi * cycles_per_n * i / n);
  }
  return s;
}

// Single-slope impulse response: exp(-t / tau) with tau chosen so the
// Schroeder curve falls 60 dB in exactly `t60` seconds (tau = t60 / (3 ln10)).
Vec exponential_ir(double t60, double seconds, int rate) {
  const double tau = t60 / (3.0 * std::log(10.0));
  const int n = static_cast<int>(std::lround(seconds * rate));
  Vec ir(n);
  for (int i = 0; i < n; ++i) ir[i] = std::exp(-(i / double(rate)) / tau);
  return ir;
}

// Time-stretch by linear interpolation: out(t) = in(t / s), length scaled by s.
Vec stretch(const Vec& in, double s) {
  const int n = static_cast<int>(std::floor(in.size() * s));
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    const double x = i / s;
    const int lo = std::min<int>(static_cast<int>(x), in.size() - 1);
    const int hi = std::min<int>(lo + 1, in.size() - 1);
    const double f = x - lo;
    out[i] = (1.0 - f) * in[lo] + f * in[hi];
  }
  return out;
}

double rms(const Eigen::RowVectorXd& v) {
  return std::sqrt(v.squaredNorm() / v.size());
}

}  // namespace

TEST_CASE("identical inputs score exactly zero on every metric") {
  Rng rng(301);
  const int rate = 22050;
  io::Audio a = random_stereo(4096, rate, rng);
  dsp::StftConfig cfg;
  cfg.n_fft = 256;
  cfg.win_length = 256;
  cfg.hop_length = 64;
  cfg.sample_rate = rate;

  CHECK(mag_distance(a, a, cfg) == 0.0);
  CHECK(env_distance(a, a) == 0.0);

  const Vec ir = exponential_ir(0.25, 0.6, rate);
  io::Audio ir2 = stereo_from(ir, 0.8 * ir, rate);
  CHECK(t60_error(ir2, ir2) == 0.0);
  CHECK(c50_error(ir2, ir2) == 0.0);
  CHECK(edt_error(ir2, ir2) == 0.0);
}

TEST_CASE("magnitude distance against a silent target is the predicted energy") {
  Rng rng(302);
  const int rate = 22050;
  io::Audio pred = random_stereo(3000, rate, rng);
  io::Audio silent;
  silent.sample_rate = rate;
  silent.samples.setZero(2, 3000);

  dsp::StftConfig cfg;
  cfg.n_fft = 256;
  cfg.win_length = 256;
  cfg.hop_length = 64;
  cfg.sample_rate = rate;

  double expected = 0.0;
  for (int c = 0; c < 2; ++c) {
    const Vec ch = pred.samples.row(c).transpose();
    const Mat m = dsp::stft(ch, cfg).magnitude;
    expected += m.squaredNorm() / static_cast<double>(m.size());
  }
  CHECK(mag_distance(pred, silent, cfg) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("magnitude distance matches a direct double-loop recomputation") {
  Rng rng(303);
  const int rate = 22050;
  io::Audio pred = random_stereo(2048, rate, rng);
  io::Audio gt = random_stereo(2048, rate, rng);

  dsp::StftConfig cfg;
  cfg.n_fft = 128;
  cfg.win_length = 128;
  cfg.hop_length = 32;
  cfg.sample_rate = rate;

  // Re-derive the reduction with explicit loops: per channel, the mean over
  // all (bin, frame) cells of the squared magnitude difference, then summed
  // over channels.
  double expected = 0.0;
  for (int c = 0; c < 2; ++c) {
    const Mat mp =
        dsp::stft(Vec(pred.samples.row(c).transpose()), cfg).magnitude;
    const Mat mg = dsp::stft(Vec(gt.samples.row(c).transpose()), cfg).magnitude;
    REQUIRE(mp.rows() == mg.rows());
    REQUIRE(mp.cols() == mg.cols());
    double acc = 0.0;
    for (Eigen::Index f = 0; f < mp.rows(); ++f) {
      for (Eigen::Index w = 0; w < mp.cols(); ++w) {
        const double d = mp(f, w) - mg(f, w);
        acc += d * d;
      }
    }
    expected += acc / (static_cast<double>(mp.rows()) * mp.cols());
  }

  const double got = mag_distance(pred, gt, cfg);
  CHECK(std::abs(got - expected) < 1e-10);
}

TEST_CASE("magnitude distance ignores a global phase rotation") {
  Rng rng(304);
  const int rate = 22050;
  io::Audio pred = random_stereo(2500, rate, rng);
  io::Audio gt = random_stereo(2500, rate, rng);
  io::Audio flipped = pred;
  flipped.samples = -flipped.samples;  // phase rotation by pi, same magnitudes

  dsp::StftConfig cfg;
  cfg.n_fft = 256;
  cfg.win_length = 256;
  cfg.hop_length = 64;
  cfg.sample_rate = rate;

  CHECK(mag_distance(pred, gt, cfg) ==
        doctest::Approx(mag_distance(flipped, gt, cfg)).epsilon(1e-12));
}

TEST_CASE("envelope distance discards sign and measures amplitude gaps") {
  const int rate = 22050;
  const int n = 22050;
  const double amp = 0.8;
  // Non-integer cycle count, so the analytic-signal path sees realistic
  // spectral leakage instead of an exact bin.
  const double cycles = 439.5;
  const Vec s = sine(n, cycles, amp);

  io::Audio plus = stereo_from(s, s, rate);
  io::Audio minus = stereo_from(-s, -s, rate);
  // Same envelope on both sides: distance is ~0 relative to the envelope
  // energy amp^2.
  CHECK(env_distance(minus, plus) < 0.01 * amp * amp);

  // Envelopes amp vs 2*amp differ by amp everywhere in the interior, so the
  // mean squared gap is ~amp^2.
  io::Audio twice = stereo_from(2.0 * s, 2.0 * s, rate);
  CHECK(env_distance(twice, plus) ==
        doctest::Approx(amp * amp).epsilon(0.02));
}

TEST_CASE("reverberation time estimator is calibrated on single-slope decay") {
  const int rate = 22050;
  const double t60 = 0.5;
  const Vec ir = exponential_ir(t60, 1.0, rate);
  CHECK(estimate_t60(ir, rate) == doctest::Approx(t60).epsilon(0.05));

  // Single-slope decay: early decay time equals the full reverberation time.
  CHECK(estimate_edt(ir, rate) ==
        doctest::Approx(estimate_t60(ir, rate)).epsilon(0.05));
}

TEST_CASE("time-stretching scales the decay estimates linearly") {
  const int rate = 22050;
  const double t60 = 0.5;
  const Vec ir = exponential_ir(t60, 1.0, rate);

  SUBCASE("stretch by 1.1 gives ~10 percent reverberation-time error") {
    const Vec slow = stretch(ir, 1.1);
    io::Audio pred = stereo_from(slow, slow, rate);
    io::Audio gt = stereo_from(ir, ir, rate);
    CHECK(t60_error(pred, gt) == doctest::Approx(10.0).epsilon(0.1));
  }

  SUBCASE("estimator equivariance within 3 percent") {
    for (double s : {0.8, 1.2, 1.5}) {
      const Vec scaled = stretch(ir, s);
      const double base = estimate_t60(ir, rate);
      CHECK(estimate_t60(scaled, rate) ==
            doctest::Approx(s * base).epsilon(0.03));
      const double edt_base = estimate_edt(ir, rate);
      CHECK(estimate_edt(scaled, rate) ==
            doctest::Approx(s * edt_base).epsilon(0.03));
    }
  }

  SUBCASE("stretch by 1.2 shifts early decay time by 0.2x") {
    const Vec slow = stretch(ir, 1.2);
    io::Audio pred = stereo_from(slow, slow, rate);
    io::Audio gt = stereo_from(ir, ir, rate);
    const double edt_gt = estimate_edt(ir, rate);
    CHECK(edt_error(pred, gt) ==
          doctest::Approx(0.2 * edt_gt).epsilon(0.1));
  }
}

TEST_CASE("clarity index matches the closed-form exponential ratio") {
  const int rate = 22050;
  const double t60 = 0.5;
  const double seconds = 1.0;
  const double tau = t60 / (3.0 * std::log(10.0));
  const Vec ir = exponential_ir(t60, seconds, rate);

  // Energy integrals of exp(-2t/tau): early over [0, 0.05], late over
  // [0.05, seconds].
  const double a = std::exp(-0.1 / tau);          // e^{-2*0.05/tau}
  const double b = std::exp(-2.0 * seconds / tau);
  const double expected = 10.0 * std::log10((1.0 - a) / (a - b));
  CHECK(std::abs(compute_c50(ir, rate) - expected) < 0.2);
}

TEST_CASE("single leading impulse clamps both clarity values equally") {
  const int rate = 22050;
  Vec ir = Vec::Zero(rate / 5);  // 200 ms
  ir[0] = 1.0;
  CHECK(compute_c50(ir, rate) == 60.0);
  io::Audio a = stereo_from(ir, ir, rate);
  CHECK(c50_error(a, a) == 0.0);
}

TEST_CASE("decay metrics refuse inputs without enough decay") {
  const int rate = 22050;

  SUBCASE("constant-level input lacks the 35 dB span") {
    const Vec flat = Vec::Ones(2205);  // min of the decay curve: -33.4 dB
    CHECK_THROWS_AS(estimate_t60(flat, rate), MetricError);
  }
  SUBCASE("energy concentrated at the end never decays") {
    Vec tail = Vec::Zero(4096);
    tail[4095] = 1.0;
    CHECK_THROWS_AS(estimate_t60(tail, rate), MetricError);
    CHECK_THROWS_AS(estimate_edt(tail, rate), MetricError);
  }
  SUBCASE("silent impulse response is undefined") {
    const Vec zero = Vec::Zero(4096);
    CHECK_THROWS_AS(estimate_t60(zero, rate), MetricError);
    CHECK_THROWS_AS(compute_c50(zero, rate), MetricError);
  }
  SUBCASE("clarity needs more than 50 ms") {
    const Vec shorty = Vec::Ones(rate / 25);  // 40 ms
    CHECK_THROWS_AS(compute_c50(shorty, rate), MetricError);
  }
}

TEST_CASE("baselines reproduce the target when the target allows it") {
  Rng rng(305);
  const int rate = 22050;
  const int n = 4000;
  Vec src(n);
  for (int i = 0; i < n; ++i) src[i] = rng.uniform(-0.5, 0.5);
  io::Audio source = mono_audio(src, rate);

  SUBCASE("duplicated source: every baseline returns it exactly") {
    io::Audio gt = stereo_from(src, src, rate);
    for (auto kind : {BaselineKind::kMonoMono, BaselineKind::kMonoEnergy,
                      BaselineKind::kStereoEnergy}) {
      io::Audio out = baseline(kind, source, gt);
      CHECK((out.samples - gt.samples).cwiseAbs().maxCoeff() < 1e-12);
      dsp::StftConfig cfg;
      cfg.n_fft = 256;
      cfg.win_length = 256;
      cfg.hop_length = 64;
      CHECK(mag_distance(out, gt, cfg) < 1e-20);
    }
  }

  SUBCASE("halved target: mono-energy halves the source") {
    io::Audio gt = stereo_from(0.5 * src, 0.5 * src, rate);
    io::Audio out = baseline(BaselineKind::kMonoEnergy, source, gt);
    CHECK((out.samples.row(0) - 0.5 * src.transpose()).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK((out.samples.row(1) - out.samples.row(0)).cwiseAbs().maxCoeff() ==
          0.0);
  }

  SUBCASE("per-channel scaling: stereo-energy matches each channel's level") {
    io::Audio gt = stereo_from(0.3 * src, 0.7 * src, rate);
    io::Audio out = baseline(BaselineKind::kStereoEnergy, source, gt);
    CHECK(rms(out.samples.row(0)) ==
          doctest::Approx(rms(gt.samples.row(0))).epsilon(1e-12));
    CHECK(rms(out.samples.row(1)) ==
          doctest::Approx(rms(gt.samples.row(1))).epsilon(1e-12));
    CHECK((out.samples.row(0) - 0.3 * src.transpose()).cwiseAbs().maxCoeff() <
          1e-12);
  }

  SUBCASE("silent source stays silent") {
    io::Audio mute = mono_audio(Vec::Zero(n), rate);
    io::Audio gt = stereo_from(src, 0.5 * src, rate);
    for (auto kind : {BaselineKind::kMonoEnergy, BaselineKind::kStereoEnergy}) {
      io::Audio out = baseline(kind, mute, gt);
      CHECK(out.samples.cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("baseline ordering on an attenuating oracle scene") {
  // More target information gives a lower magnitude distance: duplicating the
  // source verbatim (mono-mono) knows nothing; matching the mean target level
  // (mono-energy) knows the overall attenuation; matching each channel
  // (stereo-energy) also knows the left/right split.
  sim::SceneSpec scene;
  scene.sources.push_back({1.5, 0.0, "noise"});
  scene.air_absorption = 0.25;
  scene.ild_alpha = 0.7;

  dsp::StftConfig cfg;
  cfg.n_fft = 256;
  cfg.win_length = 256;
  cfg.hop_length = 64;

  Rng rng(306);
  io::Audio source = sim::make_source_clip("noise", 0.5, 22050, rng);

  double mm = 0.0, me = 0.0, se = 0.0;
  const int n_poses = 12;
  Rng pose_rng(307);
  for (int i = 0; i < n_poses; ++i) {
    const Pose pose = sim::sample_pose(scene, pose_rng);
    const io::Audio gt = sim::simulate_binaural(scene, pose, source, cfg);
    mm += mag_distance(baseline(BaselineKind::kMonoMono, source, gt), gt, cfg);
    me +=
        mag_distance(baseline(BaselineKind::kMonoEnergy, source, gt), gt, cfg);
    se += mag_distance(baseline(BaselineKind::kStereoEnergy, source, gt), gt,
                       cfg);
  }
  mm /= n_poses;
  me /= n_poses;
  se /= n_poses;

  CHECK(mm > me);
  CHECK(me >= se - 1e-15);
  CHECK(se > 0.0);  // oracle targets are not exactly reachable by scaling
}

TEST_CASE("paired metrics validate their inputs") {
  Rng rng(308);
  const int rate = 22050;
  io::Audio a = random_stereo(2000, rate, rng);
  io::Audio shorter = random_stereo(1500, rate, rng);
  io::Audio mono = mono_audio(Vec::Ones(2000), rate);
  dsp::StftConfig cfg;
  cfg.n_fft = 256;
  cfg.win_length = 256;
  cfg.hop_length = 64;

  CHECK_THROWS_AS(mag_distance(a, shorter, cfg), InputError);
  CHECK_THROWS_AS(env_distance(a, shorter), InputError);
  CHECK_THROWS_AS(mag_distance(a, mono, cfg), InputError);
  CHECK_THROWS_AS(baseline(BaselineKind::kMonoMono, a, a), InputError);

  io::Audio other_rate = a;
  other_rate.sample_rate = 44100;
  CHECK_THROWS_AS(mag_distance(a, other_rate, cfg), InputError);

  CHECK(baseline_kind_from_string("mono-mono") == BaselineKind::kMonoMono);
  CHECK(baseline_kind_from_string("stereo-energy") ==
        BaselineKind::kStereoEnergy);
  CHECK_THROWS_AS(baseline_kind_from_string("oracle"), ConfigError);
  CHECK(to_string(BaselineKind::kMonoEnergy) == "mono-energy");
}

TEST_CASE("report aggregation averages the defined entries only") {
  std::vector<SampleMetrics> rows(3);
  rows[0].id = "s0";
  rows[0].mag = 0.2;
  rows[0].env = 0.1;
  rows[0].t60_pct = 5.0;
  rows[1].id = "s1";
  rows[1].mag = 0.4;
  rows[1].env = 0.3;
  // t60 excluded for s1 (left NaN), simulating an undefined estimate
  rows[2].id = "s2";
  rows[2].mag = 0.6;
  rows[2].env = 0.2;
  rows[2].t60_pct = 15.0;

  const MetricReport report = aggregate_report(rows);
  CHECK(report.mag == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(report.env == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(report.t60_pct == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(report.n_mag == 3);
  CHECK(report.n_t60 == 2);
  CHECK(report.n_c50 == 0);
  CHECK(report.c50_db == 0.0);
  CHECK(report.samples.size() == 3);

  const nlohmann::json j = report_to_json(report);
  CHECK(j["mag"].get<double>() == doctest::Approx(0.4));
  CHECK(j["counts"]["t60"].get<int>() == 2);
  CHECK(j["samples"].size() == 3);
  // NaN entries serialize as null, keeping the JSON valid.
  CHECK(j["samples"][1]["t60_pct"].is_null());
  const std::string dumped = j.dump();
  CHECK(dumped.find("nan") == std::string::npos);

  const std::string header = report_csv_header();
  const std::string row = report_csv_row(report);
  CHECK(std::count(header.begin(), header.end(), ',') ==
        std::count(row.begin(), row.end(), ','));
  CHECK(row.find("0.4") != std::string::npos);
}
