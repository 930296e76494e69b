#include "wavefield/anerf/anerf.hpp"

#include <cmath>

namespace wavefield::anerf {

namespace {

Mat sigmoid(const Mat& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Vec normalize_xy(const std::array<double, 2>& bounds_min,
                 const std::array<double, 2>& bounds_max, double x, double y) {
  Vec out(2);
  const double wx = bounds_max[0] - bounds_min[0];
  const double wy = bounds_max[1] - bounds_min[1];
  out[0] = 2.0 * (x - bounds_min[0]) / wx - 1.0;
  out[1] = 2.0 * (y - bounds_min[1]) / wy - 1.0;
  return out;
}

}  // namespace

std::string to_string(DirectionFusion f) {
  return f == DirectionFusion::kPerLayerAdd ? "per_layer_add" : "concat";
}

std::string to_string(AvFusion f) {
  switch (f) {
    case AvFusion::kAddInput:
      return "add_input";
    case AvFusion::kConcat:
      return "concat";
    case AvFusion::kAddAll:
      return "add_all";
  }
  return "add_input";
}

DirectionFusion direction_fusion_from_string(const std::string& s) {
  if (s == "per_layer_add") return DirectionFusion::kPerLayerAdd;
  if (s == "concat") return DirectionFusion::kConcat;
  throw ConfigError("unknown direction fusion: " + s);
}

AvFusion av_fusion_from_string(const std::string& s) {
  if (s == "add_input") return AvFusion::kAddInput;
  if (s == "concat") return AvFusion::kConcat;
  if (s == "add_all") return AvFusion::kAddAll;
  throw ConfigError("unknown av fusion: " + s);
}

void AnerfConfig::validate() const {
  if (width < 1) throw ConfigError("field width must be positive");
  if (num_bins < 2) throw ConfigError("need at least two frequency bins");
  if (pe_frequencies < 1) throw ConfigError("positional encoding needs bands");
  if (!(bounds_max[0] > bounds_min[0]) || !(bounds_max[1] > bounds_min[1]))
    throw ConfigError("field bounds are empty");
}

AcousticField::AcousticField(const AnerfConfig& cfg, std::uint64_t seed)
    : cfg_(cfg) {
  cfg_.validate();
  const int c = cfg_.width;
  mlp1_ = core::MlpBlock({cfg_.mlp1_in(), c, c, c, 1 + c}, core::Act::Identity,
                         std::make_pair(2, 3));
  mlp2_ = core::MlpBlock({cfg_.mlp2_in(), c, c, c, 1}, core::Act::Identity,
                         std::make_pair(2, 3));
  dir_ = enc::DirectionEmbedding(c);
  Rng rng(seed);
  mlp1_.init(rng);
  mlp2_.init(rng);
  dir_.init(rng);
  refine_l_ = Mat::Zero(3, 3);
  refine_l_(1, 1) = 1.0;
  refine_r_ = refine_l_;
}

void AcousticField::zero_heads() {
  // mlp1's last layer emits [m_m raw | feature]; zero only the mask row.
  auto& head1 = mlp1_.layers().back();
  head1.w.row(0).setZero();
  head1.b(0, 0) = 0.0;
  mlp2_.zero_last_layer();
}

Vec AcousticField::default_queries() const {
  const int f_count = cfg_.num_bins;
  Vec q(f_count);
  for (int f = 0; f < f_count; ++f)
    q[f] = 2.0 * f / static_cast<double>(f_count - 1) - 1.0;
  return q;
}

FieldBatch AcousticField::make_batch(const std::vector<Pose>& poses,
                                     const std::array<double, 2>& source,
                                     const Mat* embeddings,
                                     const Vec* queries) const {
  if (poses.empty()) throw InputError("empty pose batch");
  if (cfg_.use_av) {
    if (!embeddings) throw InputError("model conditions on a visual embedding");
    if (embeddings->rows() != static_cast<Eigen::Index>(poses.size()) ||
        embeddings->cols() != cfg_.width)
      throw InputError("embedding batch shape mismatch");
  } else if (embeddings) {
    throw InputError("model was built without the visual pathway");
  }
  const Vec q = queries ? *queries : default_queries();
  const int c = cfg_.width;

  FieldBatch batch = encode_pose_queries(
      poses, source, q, cfg_.pe_frequencies, cfg_.coordinate_transform,
      cfg_.bounds_min, cfg_.bounds_max, dir_, cfg_.mlp1_in());

  const int n_q = batch.queries_per_pose;
  const bool av_additive = cfg_.use_av && cfg_.av_fusion != AvFusion::kConcat;
  if (av_additive) batch.av_rows = Mat(batch.rows(), c);
  const int d_scalar = cfg_.scalar_dim();
  for (int p = 0; p < static_cast<int>(poses.size()); ++p) {
    for (int k = 0; k < n_q; ++k) {
      const int r = p * n_q + k;
      if (cfg_.use_av && cfg_.av_fusion == AvFusion::kConcat)
        batch.enc_in.block(r, 3 * d_scalar, 1, c) = embeddings->row(p);
      if (av_additive) batch.av_rows.row(r) = embeddings->row(p);
    }
  }
  return batch;
}

FieldBatch encode_pose_queries(const std::vector<Pose>& poses,
                               const std::array<double, 2>& source,
                               const Vec& queries, int pe_frequencies,
                               bool coordinate_transform,
                               const std::array<double, 2>& bounds_min,
                               const std::array<double, 2>& bounds_max,
                               const enc::DirectionEmbedding& dir,
                               int enc_cols) {
  if (poses.empty()) throw InputError("empty pose batch");
  const int n_q = static_cast<int>(queries.size());
  const int n_p = static_cast<int>(poses.size());
  const int rows = n_p * n_q;
  const int c = static_cast<int>(dir.table.cols());
  const enc::PositionalEncoding pe{pe_frequencies, true, true};
  const int d_scalar = 2 * pe_frequencies + 1;

  Mat q_enc = enc::positional_encode_rows(queries, pe);  // n_q x d_scalar

  FieldBatch batch;
  batch.queries_per_pose = n_q;
  batch.enc_in = Mat(rows, enc_cols);
  batch.dir_rows = Mat(rows, c);
  batch.dir_weights = Mat(rows, 4);

  for (int p = 0; p < n_p; ++p) {
    const Pose& pose = poses[p];
    const Vec xy = normalize_xy(bounds_min, bounds_max, pose.x, pose.y);
    const Vec xy_enc = enc::positional_encode(xy, pe);
    const double angle =
        coordinate_transform
            ? enc::relative_direction(pose.x, pose.y, pose.theta, source[0],
                                      source[1])
            : wrap_angle_2pi(pose.theta);
    std::array<double, 4> w4{};
    const Vec emb = dir.interpolate(angle, &w4);
    const int base = p * n_q;
    for (int k = 0; k < n_q; ++k) {
      const int r = base + k;
      batch.enc_in.block(r, 0, 1, 2 * d_scalar) = xy_enc.transpose();
      batch.enc_in.block(r, 2 * d_scalar, 1, d_scalar) = q_enc.row(k);
      batch.dir_rows.row(r) = emb.transpose();
      batch.dir_weights(r, 0) = w4[0];
      batch.dir_weights(r, 1) = w4[1];
      batch.dir_weights(r, 2) = w4[2];
      batch.dir_weights(r, 3) = w4[3];
    }
  }
  return batch;
}

void AcousticField::forward(const FieldBatch& batch, FieldTape* tape, Vec* m_m,
                            Vec* m_d) const {
  const bool has_av = batch.av_rows.size() > 0;
  const Mat* pla1 =
      has_av && cfg_.av_fusion == AvFusion::kAddAll ? &batch.av_rows : nullptr;
  const Mat* fpa1 = has_av && (cfg_.av_fusion == AvFusion::kAddInput ||
                               cfg_.av_fusion == AvFusion::kAddAll)
                        ? &batch.av_rows
                        : nullptr;
  FieldTape local;
  FieldTape& t = tape ? *tape : local;
  t.has_av = has_av;

  const Mat raw1 = mlp1_.forward(batch.enc_in, &t.t1, pla1, fpa1);
  t.m_m = sigmoid(raw1.col(0));
  t.feature = raw1.rightCols(cfg_.width);

  Mat x2;
  const Mat* pla2 = nullptr;
  if (cfg_.direction_fusion == DirectionFusion::kConcat) {
    x2 = Mat(raw1.rows(), 2 * cfg_.width);
    x2.leftCols(cfg_.width) = t.feature;
    x2.rightCols(cfg_.width) = batch.dir_rows;
  } else {
    x2 = t.feature;
    pla2 = &batch.dir_rows;
  }
  const Mat raw2 = mlp2_.forward(x2, &t.t2, pla2, nullptr);
  t.m_d = 2.0 * sigmoid(raw2).array() - 1.0;

  if (m_m) *m_m = t.m_m.col(0);
  if (m_d) *m_d = t.m_d.col(0);
}

FieldGrads AcousticField::backward(const FieldBatch& batch,
                                   const FieldTape& tape, const Vec& d_mm,
                                   const Vec& d_md) const {
  const int rows = batch.rows();
  const int c = cfg_.width;
  FieldGrads out;

  // m_d = 2*sigmoid(raw2) - 1  =>  d(raw2) = d_md * (1 - m_d^2) / 2
  Mat d_raw2(rows, 1);
  d_raw2.col(0) =
      d_md.array() * (1.0 - tape.m_d.col(0).array().square()) / 2.0;
  out.g2 = mlp2_.backward(
      tape.t2, d_raw2,
      cfg_.direction_fusion == DirectionFusion::kPerLayerAdd, false);

  Mat d_feature, d_dir_rows;
  if (cfg_.direction_fusion == DirectionFusion::kConcat) {
    d_feature = out.g2.dx.leftCols(c);
    d_dir_rows = out.g2.dx.rightCols(c);
  } else {
    d_feature = out.g2.dx;
    d_dir_rows = out.g2.d_per_layer_add;
  }

  Mat d_raw1(rows, 1 + c);
  d_raw1.col(0) = d_mm.array() * tape.m_m.col(0).array() *
                  (1.0 - tape.m_m.col(0).array());
  d_raw1.rightCols(c) = d_feature;
  const bool had_pla1 = tape.has_av && cfg_.av_fusion == AvFusion::kAddAll;
  const bool had_fpa1 = tape.has_av && (cfg_.av_fusion == AvFusion::kAddInput ||
                                        cfg_.av_fusion == AvFusion::kAddAll);
  out.g1 = mlp1_.backward(tape.t1, d_raw1, had_pla1, had_fpa1);

  if (cfg_.use_av) {
    if (cfg_.av_fusion == AvFusion::kConcat) {
      out.d_av_rows = out.g1.dx.rightCols(c);
    } else if (tape.has_av) {
      out.d_av_rows = out.g1.d_first_preact_add;
      if (had_pla1) out.d_av_rows += out.g1.d_per_layer_add;
    }
  }

  out.d_dir_table = Mat::Zero(4, c);
  for (int r = 0; r < rows; ++r) {
    const int lo = static_cast<int>(batch.dir_weights(r, 0));
    const int hi = static_cast<int>(batch.dir_weights(r, 2));
    out.d_dir_table.row(lo) += batch.dir_weights(r, 1) * d_dir_rows.row(r);
    out.d_dir_table.row(hi) += batch.dir_weights(r, 3) * d_dir_rows.row(r);
  }
  return out;
}

MaskPair AcousticField::predict_masks(const Pose& pose,
                                      const std::array<double, 2>& source,
                                      const Vec* visual_embedding) const {
  Mat emb;
  const Mat* emb_ptr = nullptr;
  if (visual_embedding) {
    emb = visual_embedding->transpose();
    emb_ptr = &emb;
  }
  const FieldBatch batch = make_batch({pose}, source, emb_ptr);
  MaskPair masks;
  forward(batch, nullptr, &masks.m_m, &masks.m_d);
  return masks;
}

core::ParamRefs AcousticField::bind_parameters(FieldParamGrads* grads) {
  core::ParamRefs refs;
  auto add_block = [&](core::MlpBlock& block, const std::string& prefix,
                       std::vector<Mat>* gw, std::vector<Mat>* gb) {
    auto& layers = block.layers();
    if (gw) {
      gw->resize(layers.size());
      gb->resize(layers.size());
    }
    for (size_t k = 0; k < layers.size(); ++k) {
      Mat* grad_w = nullptr;
      Mat* grad_b = nullptr;
      if (gw) {
        (*gw)[k] = Mat::Zero(layers[k].w.rows(), layers[k].w.cols());
        (*gb)[k] = Mat::Zero(layers[k].b.rows(), 1);
        grad_w = &(*gw)[k];
        grad_b = &(*gb)[k];
      }
      refs.push_back({prefix + ".w" + std::to_string(k), &layers[k].w, grad_w});
      refs.push_back({prefix + ".b" + std::to_string(k), &layers[k].b, grad_b});
    }
  };
  add_block(mlp1_, "mlp1", grads ? &grads->w1 : nullptr,
            grads ? &grads->b1 : nullptr);
  add_block(mlp2_, "mlp2", grads ? &grads->w2 : nullptr,
            grads ? &grads->b2 : nullptr);
  Mat* g_dir = nullptr;
  if (grads) {
    grads->dir_table = Mat::Zero(4, cfg_.width);
    g_dir = &grads->dir_table;
  }
  refs.push_back({"dir.table", &dir_.table, g_dir});
  if (cfg_.refine) {
    Mat* g_l = nullptr;
    Mat* g_r = nullptr;
    if (grads) {
      grads->refine_l = Mat::Zero(3, 3);
      grads->refine_r = Mat::Zero(3, 3);
      g_l = &grads->refine_l;
      g_r = &grads->refine_r;
    }
    refs.push_back({"refine.l", &refine_l_, g_l});
    refs.push_back({"refine.r", &refine_r_, g_r});
  }
  return refs;
}

std::vector<std::pair<std::string, Mat>> AcousticField::export_arrays() const {
  // bind_parameters only hands out pointers; reading through them is const.
  auto refs = const_cast<AcousticField*>(this)->bind_parameters(nullptr);
  std::vector<std::pair<std::string, Mat>> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.emplace_back(r.name, *r.value);
  return out;
}

void AcousticField::import_arrays(
    const std::vector<std::pair<std::string, Mat>>& arrays) {
  auto refs = bind_parameters(nullptr);
  if (arrays.size() != refs.size())
    throw FormatError("checkpoint array count mismatch");
  for (size_t i = 0; i < refs.size(); ++i) {
    if (arrays[i].first != refs[i].name)
      throw FormatError("checkpoint array order mismatch at " +
                        arrays[i].first);
    if (arrays[i].second.rows() != refs[i].value->rows() ||
        arrays[i].second.cols() != refs[i].value->cols())
      throw FormatError("checkpoint array shape mismatch at " +
                        arrays[i].first);
    *refs[i].value = arrays[i].second;
  }
}

// ---- composition and loss -------------------------------------------------

Mat conv2d_same(const Mat& x, const Mat& k) {
  const int kh = static_cast<int>(k.rows());
  const int kw = static_cast<int>(k.cols());
  const int ch = kh / 2;
  const int cw = kw / 2;
  Mat out = Mat::Zero(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) {
      double s = 0.0;
      for (int a = 0; a < kh; ++a) {
        const int ii = i + a - ch;
        if (ii < 0 || ii >= x.rows()) continue;
        for (int b = 0; b < kw; ++b) {
          const int jj = j + b - cw;
          if (jj < 0 || jj >= x.cols()) continue;
          s += k(a, b) * x(ii, jj);
        }
      }
      out(i, j) = s;
    }
  return out;
}

Mat conv2d_same_adjoint(const Mat& dy, const Mat& k) {
  Mat flipped(k.rows(), k.cols());
  for (int a = 0; a < k.rows(); ++a)
    for (int b = 0; b < k.cols(); ++b)
      flipped(a, b) = k(k.rows() - 1 - a, k.cols() - 1 - b);
  return conv2d_same(dy, flipped);
}

Mat conv2d_kernel_grad(const Mat& x, const Mat& dy, int kh, int kw) {
  const int ch = kh / 2;
  const int cw = kw / 2;
  Mat g = Mat::Zero(kh, kw);
  for (int a = 0; a < kh; ++a)
    for (int b = 0; b < kw; ++b) {
      double s = 0.0;
      for (int i = 0; i < x.rows(); ++i) {
        const int ii = i + a - ch;
        if (ii < 0 || ii >= x.rows()) continue;
        for (int j = 0; j < x.cols(); ++j) {
          const int jj = j + b - cw;
          if (jj < 0 || jj >= x.cols()) continue;
          s += x(ii, jj) * dy(i, j);
        }
      }
      g(a, b) = s;
    }
  return g;
}

BinauralSpec compose_binaural(const Mat& source_mag, const MaskPair& masks,
                              const Mat* kernel_l, const Mat* kernel_r) {
  if (masks.m_m.size() != source_mag.rows() ||
      masks.m_d.size() != source_mag.rows())
    throw InputError("mask length does not match the spectrogram bins");
  BinauralSpec out;
  out.s_m = masks.m_m.asDiagonal() * source_mag;
  const Mat s_d = masks.m_d.asDiagonal() * out.s_m;
  out.s_l = out.s_m + s_d;
  out.s_r = out.s_m - s_d;
  if (kernel_l) out.s_l = conv2d_same(out.s_l, *kernel_l);
  if (kernel_r) out.s_r = conv2d_same(out.s_r, *kernel_r);
  return out;
}

namespace {
void check_same_shape(const BinauralSpec& a, const BinauralSpec& b) {
  const auto match = [](const Mat& x, const Mat& y) {
    return x.rows() == y.rows() && x.cols() == y.cols();
  };
  if (!match(a.s_m, b.s_m) || !match(a.s_l, b.s_l) || !match(a.s_r, b.s_r) ||
      !match(a.s_m, a.s_l) || !match(a.s_m, a.s_r))
    throw InputError("spectrogram shape mismatch in the acoustic loss");
}
}  // namespace

double acoustic_loss(const BinauralSpec& pred, const BinauralSpec& target) {
  check_same_shape(pred, target);
  const double n = static_cast<double>(pred.s_m.size());
  return (pred.s_m - target.s_m).squaredNorm() / n +
         (pred.s_l - target.s_l).squaredNorm() / n +
         (pred.s_r - target.s_r).squaredNorm() / n;
}

BinauralSpec acoustic_loss_grad(const BinauralSpec& pred,
                                const BinauralSpec& target) {
  check_same_shape(pred, target);
  const double n = static_cast<double>(pred.s_m.size());
  BinauralSpec g;
  g.s_m = 2.0 / n * (pred.s_m - target.s_m);
  g.s_l = 2.0 / n * (pred.s_l - target.s_l);
  g.s_r = 2.0 / n * (pred.s_r - target.s_r);
  return g;
}

PoseLossGrad pose_loss_grad(const MaskPair& masks, const Mat& source_mag,
                            const BinauralSpec& target, const Mat* kernel_l,
                            const Mat* kernel_r) {
  if (masks.m_m.size() != source_mag.rows())
    throw InputError("mask length does not match the spectrogram bins");
  BinauralSpec pre;  // pre-refinement composition
  pre.s_m = masks.m_m.asDiagonal() * source_mag;
  const Mat s_d = masks.m_d.asDiagonal() * pre.s_m;
  pre.s_l = pre.s_m + s_d;
  pre.s_r = pre.s_m - s_d;
  BinauralSpec pred = pre;
  if (kernel_l) pred.s_l = conv2d_same(pre.s_l, *kernel_l);
  if (kernel_r) pred.s_r = conv2d_same(pre.s_r, *kernel_r);

  PoseLossGrad out;
  out.loss = acoustic_loss(pred, target);
  const BinauralSpec g = acoustic_loss_grad(pred, target);

  Mat d_sl = g.s_l;
  Mat d_sr = g.s_r;
  if (kernel_l) {
    out.d_kernel_l = conv2d_kernel_grad(pre.s_l, g.s_l, 3, 3);
    d_sl = conv2d_same_adjoint(g.s_l, *kernel_l);
  }
  if (kernel_r) {
    out.d_kernel_r = conv2d_kernel_grad(pre.s_r, g.s_r, 3, 3);
    d_sr = conv2d_same_adjoint(g.s_r, *kernel_r);
  }
  const Mat d_sm_total = g.s_m + d_sl + d_sr;
  const Mat d_sd = d_sl - d_sr;
  out.d_mm = ((d_sm_total + masks.m_d.asDiagonal() * d_sd).cwiseProduct(
                  source_mag))
                 .rowwise()
                 .sum();
  out.d_md =
      (d_sd.cwiseProduct(source_mag)).rowwise().sum().cwiseProduct(masks.m_m);
  return out;
}

io::Audio synthesize(const AcousticField& model, const Pose& pose,
                     const io::Audio& source,
                     const std::array<double, 2>& source_pos,
                     const dsp::StftConfig& stft_cfg,
                     const Vec* visual_embedding) {
  if (source.length() < stft_cfg.win_length)
    throw InputError("source clip shorter than one analysis window");
  const dsp::Spectrogram spec =
      dsp::stft(source.samples.row(0).transpose(), stft_cfg);
  const MaskPair masks = model.predict_masks(pose, source_pos, visual_embedding);
  const bool refine = model.config().refine;
  const BinauralSpec comp = compose_binaural(
      spec.magnitude, masks, refine ? &model.refine_kernel_l() : nullptr,
      refine ? &model.refine_kernel_r() : nullptr);
  io::Audio out;
  out.sample_rate = source.sample_rate;
  out.samples = Mat(2, source.length());
  out.samples.row(0) =
      dsp::istft(comp.s_l, spec.phase, stft_cfg, source.length()).transpose();
  out.samples.row(1) =
      dsp::istft(comp.s_r, spec.phase, stft_cfg, source.length()).transpose();
  return out;
}

std::vector<MaskPair> multi_source_masks(
    const std::vector<const AcousticField*>& models, const Pose& pose,
    const std::vector<std::array<double, 2>>& sources,
    const std::vector<const Vec*>* embeddings) {
  if (models.empty() || models.size() != sources.size())
    throw InputError("one field per source is required");
  if (embeddings && embeddings->size() != models.size())
    throw InputError("one embedding per source is required");
  std::vector<MaskPair> masks;
  masks.reserve(models.size());
  for (size_t i = 0; i < models.size(); ++i)
    masks.push_back(models[i]->predict_masks(
        pose, sources[i], embeddings ? (*embeddings)[i] : nullptr));
  return masks;
}

io::Audio synthesize_multi(const std::vector<const AcousticField*>& models,
                           const Pose& pose, const io::Audio& source,
                           const std::vector<std::array<double, 2>>& sources,
                           const dsp::StftConfig& stft_cfg,
                           const std::vector<const Vec*>* embeddings) {
  if (source.length() < stft_cfg.win_length)
    throw InputError("source clip shorter than one analysis window");
  const std::vector<MaskPair> masks =
      multi_source_masks(models, pose, sources, embeddings);
  const dsp::Spectrogram spec =
      dsp::stft(source.samples.row(0).transpose(), stft_cfg);
  Mat sum_l = Mat::Zero(spec.magnitude.rows(), spec.magnitude.cols());
  Mat sum_r = sum_l;
  for (size_t i = 0; i < models.size(); ++i) {
    const bool refine = models[i]->config().refine;
    const BinauralSpec comp = compose_binaural(
        spec.magnitude, masks[i],
        refine ? &models[i]->refine_kernel_l() : nullptr,
        refine ? &models[i]->refine_kernel_r() : nullptr);
    sum_l += comp.s_l;
    sum_r += comp.s_r;
  }
  io::Audio out;
  out.sample_rate = source.sample_rate;
  out.samples = Mat(2, source.length());
  out.samples.row(0) =
      dsp::istft(sum_l, spec.phase, stft_cfg, source.length()).transpose();
  out.samples.row(1) =
      dsp::istft(sum_r, spec.phase, stft_cfg, source.length()).transpose();
  return out;
}

}  // namespace wavefield::anerf
