#include "wavefield/vnerf/vnerf.hpp"

#include <algorithm>
#include <cmath>

#include "wavefield/sim/render.hpp"

namespace wavefield::vnerf {

void Ray::validate() const {
  if (!origin.allFinite() || !direction.allFinite() ||
      !std::isfinite(t_near) || !std::isfinite(t_far))
    throw InputError("ray: non-finite component");
  if (std::abs(direction.norm() - 1.0) > 1e-9)
    throw InputError("ray: direction must be unit length");
  if (t_near < 0.0 || t_near >= t_far)
    throw InputError("ray: need 0 <= t_near < t_far");
}

void VnerfConfig::validate() const {
  if (width < 1) throw ConfigError("vnerf: width must be positive");
  if (pos_frequencies < 1 || dir_frequencies < 1)
    throw ConfigError("vnerf: encoding frequencies must be positive");
  for (int a = 0; a < 3; ++a)
    if (!(bounds_max[a] > bounds_min[a]))
      throw ConfigError("vnerf: bounds_max must exceed bounds_min per axis");
  if (!std::isfinite(density_bias))
    throw ConfigError("vnerf: density_bias must be finite");
}

namespace {

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

RadianceField::RadianceField(const VnerfConfig& cfg, std::uint64_t seed)
    : cfg_(cfg) {
  cfg_.validate();
  const int w = cfg_.width;
  mlp1_ = core::MlpBlock({cfg_.pos_in(), w, w, w, 1 + w}, core::Act::Identity,
                         std::make_pair(2, 3));
  mlp2_ = core::MlpBlock({w + cfg_.dir_in(), w, w, 3}, core::Act::Sigmoid);
  Rng rng(seed);
  mlp1_.init(rng);
  mlp2_.init(rng);
}

void RadianceField::zero_density() {
  auto& last = mlp1_.layers().back();
  last.w.row(0).setZero();
  // softplus(-1000) underflows to exactly 0.0; offset the configured bias so
  // the shifted raw value lands there.
  last.b(0, 0) = -1000.0 - cfg_.density_bias;
}

namespace {

Mat encode_points(const VnerfConfig& cfg, const Mat& points) {
  Mat norm(points.rows(), 3);
  for (int a = 0; a < 3; ++a) {
    const double lo = cfg.bounds_min[a], hi = cfg.bounds_max[a];
    norm.col(a) =
        (2.0 * (points.col(a).array() - lo) / (hi - lo) - 1.0).matrix();
  }
  enc::PositionalEncoding pe;
  pe.num_frequencies = cfg.pos_frequencies;
  pe.include_input = true;
  pe.strict_range = false;  // clamp: rays may leave the box
  return enc::positional_encode_rows(norm, pe);
}

Mat encode_dirs(const VnerfConfig& cfg, const Mat& dirs) {
  Mat ang(dirs.rows(), 2);
  for (Eigen::Index r = 0; r < dirs.rows(); ++r) {
    const double theta = wrap_angle_2pi(std::atan2(dirs(r, 1), dirs(r, 0)));
    const double z = std::clamp(dirs(r, 2), -1.0, 1.0);
    ang(r, 0) = theta / kPi - 1.0;           // [0,2pi) -> [-1,1)
    ang(r, 1) = 2.0 * std::asin(z) / kPi;    // [-pi/2,pi/2] -> [-1,1]
  }
  enc::PositionalEncoding pe;
  pe.num_frequencies = cfg.dir_frequencies;
  pe.include_input = true;
  pe.strict_range = false;
  return enc::positional_encode_rows(ang, pe);
}

}  // namespace

void RadianceField::forward(const Mat& points, const Mat& dirs,
                            RadianceTape* tape, Vec* sigma, Mat* rgb) const {
  if (points.cols() != 3 || dirs.cols() != 3 || points.rows() != dirs.rows())
    throw InputError("radiance field: points and dirs must be N x 3");
  if (!points.allFinite() || !dirs.allFinite())
    throw InputError("radiance field: non-finite query");
  const Mat enc_pos = encode_points(cfg_, points);
  const Mat enc_dir = encode_dirs(cfg_, dirs);

  Mat raw1 = mlp1_.forward(enc_pos, tape ? &tape->t1 : nullptr);
  Vec sig =
      (raw1.col(0).array() + cfg_.density_bias).unaryExpr(&softplus).matrix();
  Mat x2(raw1.rows(), cfg_.width + cfg_.dir_in());
  x2.leftCols(cfg_.width) = raw1.rightCols(cfg_.width);
  x2.rightCols(cfg_.dir_in()) = enc_dir;
  Mat color = mlp2_.forward(x2, tape ? &tape->t2 : nullptr);

  if (tape) {
    tape->raw1 = raw1;
    tape->sigma = sig;
    tape->rgb = color;
  }
  if (sigma) *sigma = std::move(sig);
  if (rgb) *rgb = std::move(color);
}

void RadianceField::query(const Mat& points, const Mat& dirs, Vec* sigma,
                          Mat* rgb) const {
  forward(points, dirs, nullptr, sigma, rgb);
}

RadianceGrads RadianceField::backward(const RadianceTape& tape,
                                      const Vec& d_sigma,
                                      const Mat& d_rgb) const {
  RadianceGrads out;
  out.g2 = mlp2_.backward(tape.t2, d_rgb);
  Mat dy1(tape.raw1.rows(), 1 + cfg_.width);
  dy1.col(0) =
      (d_sigma.array() *
       (tape.raw1.col(0).array() + cfg_.density_bias).unaryExpr(&sigmoid))
          .matrix();
  dy1.rightCols(cfg_.width) = out.g2.dx.leftCols(cfg_.width);
  out.g1 = mlp1_.backward(tape.t1, dy1);
  return out;
}

core::ParamRefs RadianceField::bind_parameters(RadianceParamGrads* grads) {
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
  add_block(mlp1_, "density", grads ? &grads->w1 : nullptr,
            grads ? &grads->b1 : nullptr);
  add_block(mlp2_, "color", grads ? &grads->w2 : nullptr,
            grads ? &grads->b2 : nullptr);
  return refs;
}

std::vector<std::pair<std::string, Mat>> RadianceField::export_arrays() const {
  // bind_parameters only hands out pointers; reading through them is const.
  auto refs = const_cast<RadianceField*>(this)->bind_parameters(nullptr);
  std::vector<std::pair<std::string, Mat>> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.emplace_back(r.name, *r.value);
  return out;
}

void RadianceField::import_arrays(
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

// ---- quadrature -----------------------------------------------------------

Vec sample_ts(const Ray& ray, int n_samples, Rng* rng) {
  ray.validate();
  if (n_samples < 2) throw InputError("render: need at least 2 samples");
  const double delta = (ray.t_far - ray.t_near) / n_samples;
  Vec t(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double u = rng ? rng->uniform() : 0.5;
    t(i) = ray.t_near + (i + u) * delta;
  }
  return t;
}

RayRender integrate_ray(const Vec& t, double delta, const Vec& sigma,
                        const Mat& rgb) {
  const int n = static_cast<int>(t.size());
  if (sigma.size() != n || rgb.rows() != n || rgb.cols() != 3)
    throw InputError("integrate_ray: mismatched sample arrays");
  RayRender out;
  out.delta = delta;
  out.t = t;
  out.sigma = sigma;
  out.weights = Vec::Zero(n);
  out.transmittance = Vec::Zero(n);
  double trans = 1.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double depth = 0.0;
  for (int i = 0; i < n; ++i) {
    out.transmittance(i) = trans;
    const double alpha = -std::expm1(-sigma(i) * delta);
    const double w = trans * alpha;
    out.weights(i) = w;
    color += w * rgb.row(i).transpose();
    depth += w * t(i);
    trans *= 1.0 - alpha;
  }
  out.color = color;
  out.depth = depth;
  out.opacity = 1.0 - trans;
  return out;
}

void integrate_ray_backward(const RayRender& rr, const Mat& rgb,
                            const Eigen::Vector3d& d_color, double d_depth,
                            Vec* d_sigma, Mat* d_rgb) {
  const int n = static_cast<int>(rr.t.size());
  if (rgb.rows() != n || rgb.cols() != 3)
    throw InputError("integrate_ray_backward: mismatched sample colors");
  *d_sigma = Vec::Zero(n);
  *d_rgb = Mat::Zero(n, 3);
  // dL/dw_i routes through both outputs: g_i = c_i . dC + t_i dD. A weight
  // w_i = T_i a_i depends on sigma_i through its own alpha and on every
  // earlier sigma through T_i, which telescopes into a suffix sum:
  //   dL/dsigma_k = delta (T_{k+1} g_k - sum_{i>k} w_i g_i).
  Vec g(n);
  for (int k = 0; k < n; ++k) {
    g(k) = rgb.row(k).dot(d_color) + rr.t(k) * d_depth;
    d_rgb->row(k) = rr.weights(k) * d_color.transpose();
  }
  double suffix = 0.0;
  for (int k = n - 1; k >= 0; --k) {
    const double t_next = rr.transmittance(k) - rr.weights(k);
    (*d_sigma)(k) = rr.delta * (t_next * g(k) - suffix);
    suffix += rr.weights(k) * g(k);
  }
}

RayRender render_ray(const Field& field, const Ray& ray, int n_samples,
                     Rng* rng) {
  const Vec t = sample_ts(ray, n_samples, rng);
  const double delta = (ray.t_far - ray.t_near) / n_samples;
  Mat points(n_samples, 3), dirs(n_samples, 3);
  for (int i = 0; i < n_samples; ++i) {
    points.row(i) = (ray.origin + t(i) * ray.direction).transpose();
    dirs.row(i) = ray.direction.transpose();
  }
  Vec sigma;
  Mat rgb;
  field.query(points, dirs, &sigma, &rgb);
  return integrate_ray(t, delta, sigma, rgb);
}

Eigen::Vector3d render_color(const Field& field, const Ray& ray,
                             int n_samples, Rng* rng) {
  return render_ray(field, ray, n_samples, rng).color;
}

double render_depth(const Field& field, const Ray& ray, int n_samples,
                    Rng* rng) {
  return render_ray(field, ray, n_samples, rng).depth;
}

void render_image(const Field& field, const Pose& pose, int width, int height,
                  double fov_deg, int n_samples, double t_near, double t_far,
                  io::Image* rgb, io::Image* depth, Rng* rng) {
  if (width < 1 || height < 1)
    throw InputError("render: image dimensions must be positive");
  if (!(fov_deg > 0.0) || !(fov_deg < 180.0))
    throw InputError("render: field of view must be in (0, 180) degrees");
  if (n_samples < 2) throw InputError("render: need at least 2 samples");

  Eigen::Vector3d fwd, right, up;
  sim::camera_basis(pose, &fwd, &right, &up);
  const Eigen::Vector3d origin(pose.x, pose.y, pose.z);
  const double tan_half = std::tan(0.5 * fov_deg * kPi / 180.0);
  const double aspect = static_cast<double>(width) / height;

  const int n_rays = width * height;
  std::vector<Eigen::Vector3d> ray_dirs(static_cast<size_t>(n_rays));
  Mat points(static_cast<Eigen::Index>(n_rays) * n_samples, 3);
  Mat dirs(points.rows(), 3);
  std::vector<Vec> ts(static_cast<size_t>(n_rays));

  Ray probe;
  probe.origin = origin;
  probe.t_near = t_near;
  probe.t_far = t_far;
  const double delta = (t_far - t_near) / n_samples;

  int r = 0;
  for (int i = 0; i < height; ++i) {
    const double v = 1.0 - 2.0 * (i + 0.5) / height;  // row 0 = top
    for (int j = 0; j < width; ++j, ++r) {
      const double u = 2.0 * (j + 0.5) / width - 1.0;
      const Eigen::Vector3d d =
          (fwd + u * tan_half * aspect * right + v * tan_half * up)
              .normalized();
      ray_dirs[static_cast<size_t>(r)] = d;
      probe.direction = d;
      const Vec t = sample_ts(probe, n_samples, rng);
      ts[static_cast<size_t>(r)] = t;
      for (int k = 0; k < n_samples; ++k) {
        points.row(static_cast<Eigen::Index>(r) * n_samples + k) =
            (origin + t(k) * d).transpose();
        dirs.row(static_cast<Eigen::Index>(r) * n_samples + k) = d.transpose();
      }
    }
  }

  Vec sigma;
  Mat color;
  field.query(points, dirs, &sigma, &color);

  *rgb = io::make_image(width, height, 3);
  *depth = io::make_image(width, height, 1);
  r = 0;
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j, ++r) {
      const Eigen::Index lo = static_cast<Eigen::Index>(r) * n_samples;
      const RayRender rr =
          integrate_ray(ts[static_cast<size_t>(r)], delta,
                        sigma.segment(lo, n_samples),
                        color.middleRows(lo, n_samples));
      for (int c = 0; c < 3; ++c)
        rgb->at(i, j, c) = static_cast<float>(rr.color(c));
      depth->at(i, j, 0) = static_cast<float>(rr.depth);
    }
}

double color_loss(const Mat& pred, const Mat& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw InputError("color loss: shape mismatch");
  if (pred.rows() == 0) throw InputError("color loss: empty batch");
  return (pred - target).array().square().rowwise().sum().mean();
}

}  // namespace wavefield::vnerf
