#include "wavefield/anerf/ir_field.hpp"

namespace wavefield::anerf {

void IrConfig::validate() const {
  if (width < 1) throw ConfigError("field width must be positive");
  if (ir_length < 2) throw ConfigError("impulse response needs >= 2 samples");
  if (pe_frequencies < 1) throw ConfigError("positional encoding needs bands");
  if (!(bounds_max[0] > bounds_min[0]) || !(bounds_max[1] > bounds_min[1]))
    throw ConfigError("field bounds are empty");
}

IrField::IrField(const IrConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  const int c = cfg_.width;
  mlp1_ = core::MlpBlock({cfg_.mlp1_in(), c, c, c, c}, core::Act::Identity,
                         std::make_pair(2, 3));
  mlp2_ = core::MlpBlock({cfg_.mlp2_in(), c, c, c, 2}, core::Act::Identity,
                         std::make_pair(2, 3));
  dir_ = enc::DirectionEmbedding(c);
  Rng rng(seed);
  mlp1_.init(rng);
  mlp2_.init(rng);
  dir_.init(rng);
}

void IrField::zero_output() { mlp2_.zero_last_layer(); }

Vec IrField::default_queries() const {
  const int t_count = cfg_.ir_length;
  Vec q(t_count);
  for (int t = 0; t < t_count; ++t)
    q[t] = 2.0 * t / static_cast<double>(t_count - 1) - 1.0;
  return q;
}

FieldBatch IrField::make_batch(const std::vector<Pose>& poses,
                               const std::array<double, 2>& source) const {
  return encode_pose_queries(poses, source, default_queries(),
                             cfg_.pe_frequencies, cfg_.coordinate_transform,
                             cfg_.bounds_min, cfg_.bounds_max, dir_,
                             cfg_.mlp1_in());
}

Mat IrField::forward(const FieldBatch& batch, IrTape* tape) const {
  IrTape local;
  IrTape& t = tape ? *tape : local;

  t.feature = mlp1_.forward(batch.enc_in, &t.t1, nullptr, nullptr);

  Mat x2;
  const Mat* pla2 = nullptr;
  if (cfg_.direction_fusion == DirectionFusion::kConcat) {
    x2 = Mat(t.feature.rows(), 2 * cfg_.width);
    x2.leftCols(cfg_.width) = t.feature;
    x2.rightCols(cfg_.width) = batch.dir_rows;
  } else {
    x2 = t.feature;
    pla2 = &batch.dir_rows;
  }
  return mlp2_.forward(x2, &t.t2, pla2, nullptr);
}

FieldGrads IrField::backward(const FieldBatch& batch, const IrTape& tape,
                             const Mat& d_out) const {
  if (d_out.rows() != batch.rows() || d_out.cols() != 2)
    throw InputError("ir backward: gradient shape mismatch");
  const int c = cfg_.width;
  FieldGrads out;

  out.g2 = mlp2_.backward(
      tape.t2, d_out,
      cfg_.direction_fusion == DirectionFusion::kPerLayerAdd, false);

  Mat d_feature, d_dir_rows;
  if (cfg_.direction_fusion == DirectionFusion::kConcat) {
    d_feature = out.g2.dx.leftCols(c);
    d_dir_rows = out.g2.dx.rightCols(c);
  } else {
    d_feature = out.g2.dx;
    d_dir_rows = out.g2.d_per_layer_add;
  }

  out.g1 = mlp1_.backward(tape.t1, d_feature, false, false);

  out.d_dir_table = Mat::Zero(4, c);
  for (int r = 0; r < batch.rows(); ++r) {
    const int lo = static_cast<int>(batch.dir_weights(r, 0));
    const int hi = static_cast<int>(batch.dir_weights(r, 2));
    out.d_dir_table.row(lo) += batch.dir_weights(r, 1) * d_dir_rows.row(r);
    out.d_dir_table.row(hi) += batch.dir_weights(r, 3) * d_dir_rows.row(r);
  }
  return out;
}

io::Audio IrField::predict_ir(const Pose& pose,
                              const std::array<double, 2>& source,
                              int sample_rate) const {
  const FieldBatch batch = make_batch({pose}, source);
  const Mat out = forward(batch, nullptr);  // T x 2
  io::Audio ir;
  ir.sample_rate = sample_rate;
  ir.samples = out.transpose();  // 2 x T
  return ir;
}

core::ParamRefs IrField::bind_parameters(FieldParamGrads* grads) {
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
  return refs;
}

std::vector<std::pair<std::string, Mat>> IrField::export_arrays() const {
  auto refs = const_cast<IrField*>(this)->bind_parameters(nullptr);
  std::vector<std::pair<std::string, Mat>> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.emplace_back(r.name, *r.value);
  return out;
}

void IrField::import_arrays(
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

}  // namespace wavefield::anerf
