#include "wavefield/avmap/avmapper.hpp"

#include <algorithm>
#include <cmath>

namespace wavefield::avmap {

namespace {

// 3x3 zero-padded convolution accumulated into `out`.
void conv3x3_acc(const Mat& x, const Mat& k, Mat* out) {
  const Eigen::Index h = x.rows(), w = x.cols();
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) {
      double acc = 0.0;
      for (int di = -1; di <= 1; ++di) {
        const Eigen::Index ii = i + di;
        if (ii < 0 || ii >= h) continue;
        for (int dj = -1; dj <= 1; ++dj) {
          const Eigen::Index jj = j + dj;
          if (jj < 0 || jj >= w) continue;
          acc += k(di + 1, dj + 1) * x(ii, jj);
        }
      }
      (*out)(i, j) += acc;
    }
}

Mat avgpool2(const Mat& x) {
  Mat out(x.rows() / 2, x.cols() / 2);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) = 0.25 * (x(2 * i, 2 * j) + x(2 * i, 2 * j + 1) +
                          x(2 * i + 1, 2 * j) + x(2 * i + 1, 2 * j + 1));
  return out;
}

void check_square(const io::Image& img, int channels, const char* what) {
  if (img.width != kEncoderInput || img.height != kEncoderInput ||
      img.channels != channels)
    throw InputError(std::string("encoder expects a ") +
                     std::to_string(kEncoderInput) + "x" +
                     std::to_string(kEncoderInput) + " " +
                     std::to_string(channels) + "-channel " + what + " image");
}

}  // namespace

FrozenEncoder::FrozenEncoder(std::uint64_t seed) : seed_(seed) {
  const int widths[] = {3, 8, 16, 32, 32};
  Rng rng(seed);
  for (int s = 0; s < 4; ++s) {
    ConvStage st;
    st.in_ch = widths[s];
    st.out_ch = widths[s + 1];
    st.k.resize(static_cast<size_t>(st.in_ch) * st.out_ch);
    const double bound = std::sqrt(1.0 / (9.0 * st.in_ch));
    for (int oc = 0; oc < st.out_ch; ++oc)
      for (int ic = 0; ic < st.in_ch; ++ic) {
        Mat k(3, 3);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) k(i, j) = rng.uniform(-bound, bound);
        st.k[static_cast<size_t>(oc) * st.in_ch + ic] = std::move(k);
      }
    st.b = Vec(st.out_ch);
    for (int oc = 0; oc < st.out_ch; ++oc)
      st.b(oc) = rng.uniform(-bound, bound);
    stages_.push_back(std::move(st));
  }
}

Vec FrozenEncoder::run(std::vector<Mat> chans) const {
  for (const auto& st : stages_) {
    std::vector<Mat> next(static_cast<size_t>(st.out_ch));
    for (int oc = 0; oc < st.out_ch; ++oc) {
      Mat acc = Mat::Constant(chans[0].rows(), chans[0].cols(), st.b(oc));
      for (int ic = 0; ic < st.in_ch; ++ic)
        conv3x3_acc(chans[static_cast<size_t>(ic)],
                    st.k[static_cast<size_t>(oc) * st.in_ch + ic], &acc);
      next[static_cast<size_t>(oc)] = avgpool2(acc.cwiseMax(0.0));
    }
    chans = std::move(next);
  }
  Vec feat(static_cast<Eigen::Index>(chans.size()) * chans[0].size());
  Eigen::Index p = 0;
  for (const auto& c : chans)
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      for (Eigen::Index j = 0; j < c.cols(); ++j) feat(p++) = c(i, j);
  return feat;
}

Vec FrozenEncoder::encode_rgb(const io::Image& rgb) const {
  check_square(rgb, 3, "rgb");
  std::vector<Mat> chans(3, Mat(kEncoderInput, kEncoderInput));
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < kEncoderInput; ++i)
      for (int j = 0; j < kEncoderInput; ++j)
        chans[static_cast<size_t>(c)](i, j) = rgb.at(i, j, c);
  return run(std::move(chans));
}

Vec FrozenEncoder::encode_depth(const io::Image& depth) const {
  check_square(depth, 1, "depth");
  Mat d(kEncoderInput, kEncoderInput);
  for (int i = 0; i < kEncoderInput; ++i)
    for (int j = 0; j < kEncoderInput; ++j) d(i, j) = depth.at(i, j, 0);
  return run({d, d, d});
}

std::pair<Vec, Vec> encode_views(const FrozenEncoder& enc,
                                 const io::Image& rgb, const io::Image& depth,
                                 double scene_diameter) {
  if (!(scene_diameter > 0.0))
    throw InputError("encode_views: scene diameter must be positive");
  check_square(depth, 1, "depth");
  io::Image norm = depth;
  for (auto& v : norm.data)
    v = std::clamp(v / static_cast<float>(scene_diameter), 0.0f, 1.0f);
  return {enc.encode_rgb(rgb), enc.encode_depth(norm)};
}

void AvMapperConfig::validate() const {
  if (width < 1) throw ConfigError("mapper: width must be positive");
  if (feature_dim < 1) throw ConfigError("mapper: feature_dim must be positive");
}

AvMapper::AvMapper(const AvMapperConfig& cfg, std::uint64_t seed,
                   bool zero_output)
    : cfg_(cfg) {
  cfg_.validate();
  mlp_ = core::MlpBlock({cfg_.input_dim(), cfg_.width, cfg_.width, cfg_.width},
                        core::Act::Identity);
  Rng rng(seed);
  mlp_.init(rng);
  if (zero_output) mlp_.zero_last_layer();
}

Mat AvMapper::map(const Mat& feats, core::MlpTape* tape) const {
  if (feats.cols() != cfg_.input_dim())
    throw InputError("mapper: feature rows must be rgb ⊕ depth (" +
                     std::to_string(cfg_.input_dim()) + " wide)");
  if (!feats.allFinite()) throw InputError("mapper: non-finite features");
  return mlp_.forward(feats, tape);
}

Vec AvMapper::map_one(const Vec& rgb_feat, const Vec& depth_feat) const {
  if (rgb_feat.size() != cfg_.feature_dim ||
      depth_feat.size() != cfg_.feature_dim)
    throw InputError("mapper: per-modality features must be " +
                     std::to_string(cfg_.feature_dim) + " wide");
  Mat row(1, cfg_.input_dim());
  row.leftCols(cfg_.feature_dim) = rgb_feat.transpose();
  row.rightCols(cfg_.feature_dim) = depth_feat.transpose();
  return map(row).row(0).transpose();
}

core::MlpGrads AvMapper::backward(const core::MlpTape& tape,
                                  const Mat& d_e) const {
  return mlp_.backward(tape, d_e);
}

core::ParamRefs AvMapper::bind_parameters(MapperParamGrads* grads) {
  core::ParamRefs refs;
  auto& layers = mlp_.layers();
  if (grads) {
    grads->w.resize(layers.size());
    grads->b.resize(layers.size());
  }
  for (size_t k = 0; k < layers.size(); ++k) {
    Mat* gw = nullptr;
    Mat* gb = nullptr;
    if (grads) {
      grads->w[k] = Mat::Zero(layers[k].w.rows(), layers[k].w.cols());
      grads->b[k] = Mat::Zero(layers[k].b.rows(), 1);
      gw = &grads->w[k];
      gb = &grads->b[k];
    }
    refs.push_back({"mapper.w" + std::to_string(k), &layers[k].w, gw});
    refs.push_back({"mapper.b" + std::to_string(k), &layers[k].b, gb});
  }
  return refs;
}

std::vector<std::pair<std::string, Mat>> AvMapper::export_arrays() const {
  std::vector<std::pair<std::string, Mat>> out;
  const auto& layers = mlp_.layers();
  for (size_t k = 0; k < layers.size(); ++k) {
    out.emplace_back("mapper.w" + std::to_string(k), layers[k].w);
    out.emplace_back("mapper.b" + std::to_string(k), layers[k].b);
  }
  return out;
}

void AvMapper::import_arrays(
    const std::vector<std::pair<std::string, Mat>>& arrays) {
  core::ParamRefs refs = bind_parameters();
  if (arrays.size() != refs.size())
    throw FormatError("mapper checkpoint: array count mismatch");
  for (size_t k = 0; k < refs.size(); ++k) {
    if (arrays[k].first != refs[k].name)
      throw FormatError("mapper checkpoint: unexpected array " +
                        arrays[k].first + " (want " + refs[k].name + ")");
    if (arrays[k].second.rows() != refs[k].value->rows() ||
        arrays[k].second.cols() != refs[k].value->cols())
      throw FormatError("mapper checkpoint: shape mismatch for " +
                        arrays[k].first);
    *refs[k].value = arrays[k].second;
  }
}

}  // namespace wavefield::avmap
