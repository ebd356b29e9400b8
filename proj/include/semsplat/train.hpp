// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <functional>
#include <json.hpp>

#include "semsplat/losses.hpp"
#include "semsplat/point_cloud.hpp"
#include "semsplat/semfeat.hpp"

namespace semsplat {

struct TrainConfig {
  int iterations = 7000;
  double dssim_weight = 0.2;     // blend between L1 and D-SSIM
  double semantic_weight = 1.0;  // weight of the feature regression term
  int feature_dim = 16;
  int resample_target = 100000;
  double lr_position = 1.6e-4;  // multiplied by scene extent
  double lr_scale = 5e-3;
  double lr_rotation = 1e-3;
  double lr_opacity = 5e-2;
  double lr_color = 2.5e-3;
  double lr_feature = 2.5e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-15;
  int densify_interval = 200;
  int densify_until = -1;  // -1 resolves to iterations / 2
  double densify_grad_threshold = 2e-4;
  double clone_scale_fraction = 0.01;  // of scene extent
  double prune_opacity = 0.005;
  double split_scale_shrink = 1.6;
  int max_gaussians = 500000;
  double init_opacity = 0.1;
  uint32_t seed = 0;
  int threads = 1;
  bool alpha_from_rgb_only = true;
  std::string divergence_dump_path;

  int densify_until_effective() const {
    return densify_until >= 0 ? densify_until : iterations / 2;
  }

  void validate() const {
    require(iterations >= 0, "config: negative iteration count");
    require(dssim_weight >= 0 && dssim_weight <= 1,
            "config: dssim_weight outside [0, 1]");
    require(semantic_weight >= 0, "config: negative semantic_weight");
    require(feature_dim >= 1, "config: feature_dim < 1");
    require(resample_target >= 1, "config: resample_target < 1");
    require(densify_interval >= 1, "config: densify_interval < 1");
    require(max_gaussians >= 1, "config: max_gaussians < 1");
    require(init_opacity > 0 && init_opacity < 1,
            "config: init_opacity outside (0, 1)");
    require(split_scale_shrink > 0, "config: non-positive split shrink");
    require(threads >= 1, "config: threads < 1");
  }
};

inline void train_config_apply_json(TrainConfig& c, const nlohmann::json& j) {
  auto get_int = [&](const char* key, int& dst) {
    if (j.contains(key)) dst = j.at(key).get<int>();
  };
  auto get_dbl = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = j.at(key).get<double>();
  };
  get_int("iterations", c.iterations);
  get_dbl("dssim_weight", c.dssim_weight);
  get_dbl("semantic_weight", c.semantic_weight);
  get_int("feature_dim", c.feature_dim);
  get_int("resample_target", c.resample_target);
  get_dbl("lr_position", c.lr_position);
  get_dbl("lr_scale", c.lr_scale);
  get_dbl("lr_rotation", c.lr_rotation);
  get_dbl("lr_opacity", c.lr_opacity);
  get_dbl("lr_color", c.lr_color);
  get_dbl("lr_feature", c.lr_feature);
  get_dbl("adam_beta1", c.adam_beta1);
  get_dbl("adam_beta2", c.adam_beta2);
  get_dbl("adam_eps", c.adam_eps);
  get_int("densify_interval", c.densify_interval);
  get_int("densify_until", c.densify_until);
  get_dbl("densify_grad_threshold", c.densify_grad_threshold);
  get_dbl("clone_scale_fraction", c.clone_scale_fraction);
  get_dbl("prune_opacity", c.prune_opacity);
  get_dbl("split_scale_shrink", c.split_scale_shrink);
  get_int("max_gaussians", c.max_gaussians);
  get_dbl("init_opacity", c.init_opacity);
  if (j.contains("seed")) c.seed = j.at("seed").get<uint32_t>();
  get_int("threads", c.threads);
  if (j.contains("alpha_from_rgb_only"))
    c.alpha_from_rgb_only = j.at("alpha_from_rgb_only").get<bool>();
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("invalid config json: " + path + ": " + e.what());
  }
  TrainConfig c;
  train_config_apply_json(c, j);
  c.validate();
  return c;
}

struct TrainView {
  Tensor image;       // H x W x 3 f32
  Camera camera;
  Tensor target_map;  // H x W x k, empty dims when no semantics
  Tensor labels;      // u32 H x W
  bool has_semantics = false;
};

struct LossRow {
  int iteration = 0;
  double l1_rgb = 0, dssim = 0, l1_sem = 0, total = 0;
  int gaussian_count = 0;
};

struct TrainState {
  Scene scene;
  RowMatf m_pos, v_pos, m_scale, v_scale, m_rot, v_rot, m_col, v_col, m_feat,
      v_feat;
  Eigen::VectorXf m_op, v_op;
  Eigen::VectorXf grad2d_sum;
  Eigen::VectorXi grad2d_count;
  int iteration = 0;
  int adam_t = 0;
  float extent = 1.0f;
  Rng rng;
  std::vector<LossRow> history;
  bool cap_warned = false;

  void reset_moments() {
    const int n = scene.size();
    const int k = scene.feature_dim();
    m_pos.setZero(n, 3);
    v_pos.setZero(n, 3);
    m_scale.setZero(n, 3);
    v_scale.setZero(n, 3);
    m_rot.setZero(n, 4);
    v_rot.setZero(n, 4);
    m_col.setZero(n, 3);
    v_col.setZero(n, 3);
    m_feat.setZero(n, k);
    v_feat.setZero(n, k);
    m_op.setZero(n);
    v_op.setZero(n);
    grad2d_sum.setZero(n);
    grad2d_count.setZero(n);
  }
};

// One Gaussian per resampled point: scale from mean 3-NN distance, fixed
// initial opacity, color copied, feature looked up from the view-0 target
// map at the projected pixel (zero when unlabeled or off screen).
inline Scene init_scene(const PointCloud& cloud, const FeatureBundle* bundle,
                        const Camera* view0_camera, const TrainConfig& config) {
  PointCloud pts = resample_point_cloud(cloud, config.resample_target);
  const int n = static_cast<int>(pts.positions.rows());
  const int k = bundle ? bundle->compressed_dim : config.feature_dim;
  Scene scene;
  scene.init(n, k);
  scene.positions = pts.positions;
  scene.colors = pts.colors;
  Eigen::VectorXf knn = mean_knn_distance(pts.positions, 3);
  float op_logit = logit(float(config.init_opacity));
  for (int i = 0; i < n; ++i) {
    // 0.6x the neighbor spacing keeps the surface covered (the density at the
    // half-gap is still ~70% of peak) while starting edges sharp enough that
    // silhouettes do not have to be shrunk from a blurry init.
    float d = 0.55f * std::max(knn[i], 1e-7f);
    scene.log_scales.row(i).setConstant(std::log(d));
    scene.opacity_logits[i] = op_logit;
  }
  if (bundle && view0_camera && !bundle->views.empty()) {
    const ViewSemantics& v0 = bundle->views[0];
    const Camera& cam = *view0_camera;
    for (int i = 0; i < n; ++i) {
      Vec3f p = scene.positions.row(i).transpose();
      Vec3f t = cam.rotation() * p + cam.translation();
      if (t[2] < float(kNearPlane)) continue;
      int px = int(std::floor(cam.fx * t[0] / t[2] + cam.cx));
      int py = int(std::floor(cam.fy * t[1] / t[2] + cam.cy));
      if (px < 0 || px >= cam.width || py < 0 || py >= cam.height) continue;
      uint32_t label = v0.labels.u_at2(py, px);
      if (label == 0) continue;
      scene.features.row(i) = v0.pca_rows.row(int(label) - 1);
    }
    scene.pca = bundle->pca;
  }
  return scene;
}

namespace detail {

inline void adam_update(RowMatf& param, RowMatf& m, RowMatf& v,
                        const RowMatf& g, double lr, double b1, double b2,
                        double eps, double bc1, double bc2) {
  for (int i = 0; i < param.rows(); ++i)
    for (int j = 0; j < param.cols(); ++j) {
      double gij = g(i, j);
      double mm = b1 * m(i, j) + (1 - b1) * gij;
      double vv = b2 * v(i, j) + (1 - b2) * gij * gij;
      m(i, j) = float(mm);
      v(i, j) = float(vv);
      param(i, j) -= float(lr * (mm / bc1) / (std::sqrt(vv / bc2) + eps));
    }
}

inline void adam_update_vec(Eigen::VectorXf& param, Eigen::VectorXf& m,
                            Eigen::VectorXf& v, const Eigen::VectorXf& g,
                            double lr, double b1, double b2, double eps,
                            double bc1, double bc2) {
  for (int i = 0; i < param.size(); ++i) {
    double gi = g[i];
    double mm = b1 * m[i] + (1 - b1) * gi;
    double vv = b2 * v[i] + (1 - b2) * gi * gi;
    m[i] = float(mm);
    v[i] = float(vv);
    param[i] -= float(lr * (mm / bc1) / (std::sqrt(vv / bc2) + eps));
  }
}

}  // namespace detail

// Bias-corrected Adam over all parameter groups; one shared step counter.
// Quaternions are renormalized afterwards so the scene invariant holds.
inline void adam_step(TrainState& state, const Gradients& grads,
                      const TrainConfig& config) {
  state.adam_t += 1;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, state.adam_t);
  const double bc2 = 1.0 - std::pow(b2, state.adam_t);
  Scene& s = state.scene;
  detail::adam_update(s.positions, state.m_pos, state.v_pos, grads.d_position,
                      config.lr_position * state.extent, b1, b2,
                      config.adam_eps, bc1, bc2);
  detail::adam_update(s.log_scales, state.m_scale, state.v_scale,
                      grads.d_log_scale, config.lr_scale, b1, b2,
                      config.adam_eps, bc1, bc2);
  detail::adam_update(s.rotations, state.m_rot, state.v_rot, grads.d_rotation,
                      config.lr_rotation, b1, b2, config.adam_eps, bc1, bc2);
  detail::adam_update(s.colors, state.m_col, state.v_col, grads.d_color,
                      config.lr_color, b1, b2, config.adam_eps, bc1, bc2);
  detail::adam_update(s.features, state.m_feat, state.v_feat, grads.d_feature,
                      config.lr_feature, b1, b2, config.adam_eps, bc1, bc2);
  detail::adam_update_vec(s.opacity_logits, state.m_op, state.v_op,
                          grads.d_opacity_logit, config.lr_opacity, b1, b2,
                          config.adam_eps, bc1, bc2);
  for (int i = 0; i < s.size(); ++i) {
    float n = s.rotations.row(i).norm();
    if (n > 0) s.rotations.row(i) /= n;
  }
}

// Adaptive density control: clone small high-gradient splats, split large
// ones with shrunken scale and resampled centers, prune transparent ones.
// Survivors keep their Adam moments; new rows start from zero.
inline void densify_and_prune(TrainState& state, const TrainConfig& config) {
  Scene& s = state.scene;
  const int n = s.size();
  const int k = s.feature_dim();
  enum class Fate { Keep, Drop, Split };
  std::vector<Fate> fate(n, Fate::Keep);
  std::vector<Gaussian> children;
  const bool can_grow = n < config.max_gaussians;
  if (!can_grow && !state.cap_warned) state.cap_warned = true;
  for (int i = 0; i < n; ++i) {
    float op = sigmoid(s.opacity_logits[i]);
    if (op < float(config.prune_opacity)) {
      fate[i] = Fate::Drop;
      continue;
    }
    if (!can_grow || state.grad2d_count[i] == 0) continue;
    float avg = state.grad2d_sum[i] / float(state.grad2d_count[i]);
    if (avg <= float(config.densify_grad_threshold)) continue;
    Vec3f scale =
        s.log_scales.row(i).transpose().array().exp().matrix();
    if (scale.maxCoeff() <
        float(config.clone_scale_fraction) * state.extent) {
      children.push_back(s.get(i));
    } else {
      fate[i] = Fate::Split;
      Gaussian parent = s.get(i);
      Vec4f q = parent.rotation;
      Mat3f rot = quat_to_rotation(q);
      Vec3f scl = parent.log_scale.array().exp().matrix();
      Mat3f m3 = rot * scl.asDiagonal();
      std::normal_distribution<float> nd(0.0f, 1.0f);
      for (int child = 0; child < 2; ++child) {
        Gaussian g = parent;
        Vec3f z(nd(state.rng), nd(state.rng), nd(state.rng));
        g.position = parent.position + m3 * z;
        g.log_scale = parent.log_scale.array() -
                      std::log(float(config.split_scale_shrink));
        children.push_back(g);
      }
    }
  }
  int kept = 0;
  for (int i = 0; i < n; ++i)
    if (fate[i] == Fate::Keep) ++kept;
  const int total = kept + static_cast<int>(children.size());
  require(total > 0, "densify removed every gaussian");
  Scene out;
  out.init(total, k);
  out.pca = s.pca;
  out.metadata = s.metadata;
  RowMatf m_pos(total, 3), v_pos(total, 3), m_scale(total, 3),
      v_scale(total, 3), m_rot(total, 4), v_rot(total, 4), m_col(total, 3),
      v_col(total, 3), m_feat(total, k), v_feat(total, k);
  Eigen::VectorXf m_op(total), v_op(total);
  int at = 0;
  for (int i = 0; i < n; ++i) {
    if (fate[i] != Fate::Keep) continue;
    out.positions.row(at) = s.positions.row(i);
    out.log_scales.row(at) = s.log_scales.row(i);
    out.rotations.row(at) = s.rotations.row(i);
    out.opacity_logits[at] = s.opacity_logits[i];
    out.colors.row(at) = s.colors.row(i);
    out.features.row(at) = s.features.row(i);
    m_pos.row(at) = state.m_pos.row(i);
    v_pos.row(at) = state.v_pos.row(i);
    m_scale.row(at) = state.m_scale.row(i);
    v_scale.row(at) = state.v_scale.row(i);
    m_rot.row(at) = state.m_rot.row(i);
    v_rot.row(at) = state.v_rot.row(i);
    m_col.row(at) = state.m_col.row(i);
    v_col.row(at) = state.v_col.row(i);
    m_feat.row(at) = state.m_feat.row(i);
    v_feat.row(at) = state.v_feat.row(i);
    m_op[at] = state.m_op[i];
    v_op[at] = state.v_op[i];
    ++at;
  }
  for (const Gaussian& g : children) {
    out.set(at, g);
    m_pos.row(at).setZero();
    v_pos.row(at).setZero();
    m_scale.row(at).setZero();
    v_scale.row(at).setZero();
    m_rot.row(at).setZero();
    v_rot.row(at).setZero();
    m_col.row(at).setZero();
    v_col.row(at).setZero();
    m_feat.row(at).setZero();
    v_feat.row(at).setZero();
    m_op[at] = 0;
    v_op[at] = 0;
    ++at;
  }
  state.scene = std::move(out);
  state.m_pos = std::move(m_pos);
  state.v_pos = std::move(v_pos);
  state.m_scale = std::move(m_scale);
  state.v_scale = std::move(v_scale);
  state.m_rot = std::move(m_rot);
  state.v_rot = std::move(v_rot);
  state.m_col = std::move(m_col);
  state.v_col = std::move(v_col);
  state.m_feat = std::move(m_feat);
  state.v_feat = std::move(v_feat);
  state.m_op = std::move(m_op);
  state.v_op = std::move(v_op);
  state.grad2d_sum.setZero(total);
  state.grad2d_count.setZero(total);
}

using TrainObserver =
    std::function<void(const TrainState&, const LossRow&)>;

// Full reconstruction plus distillation loop. Deterministic for a fixed
// seed in single-threaded mode.
inline TrainState train(const PointCloud& cloud,
                        const std::vector<TrainView>& views,
                        const FeatureBundle* bundle, const TrainConfig& config,
                        const TrainObserver& observer = nullptr) {
  config.validate();
  require(!views.empty(), "no training views");
  TrainState state;
  state.extent = scene_extent<float>(cloud.positions);
  require(state.extent > 0, "degenerate point cloud extent");
  state.rng.seed(config.seed);
  state.scene = init_scene(cloud, bundle, &views[0].camera, config);
  state.reset_moments();
  const int n_views = static_cast<int>(views.size());
  std::vector<float> d_rgb, d_feature;
  for (int iter = 1; iter <= config.iterations; ++iter) {
    state.iteration = iter;
    const TrainView& view = views[(iter - 1) % n_views];
    RenderOutput r = render(state.scene, view.camera, config.threads);
    LossBreakdown lb = total_loss(
        r, view.image, view.has_semantics ? &view.target_map : nullptr,
        view.has_semantics ? &view.labels : nullptr, config.dssim_weight,
        config.semantic_weight, d_rgb, d_feature);
    if (!std::isfinite(lb.total)) {
      if (!config.divergence_dump_path.empty())
        save_scene(config.divergence_dump_path, state.scene);
      fail("training diverged: non-finite loss at iteration " +
           std::to_string(iter));
    }
    Gradients grads = render_backward(
        state.scene, view.camera, d_rgb,
        view.has_semantics ? &d_feature : nullptr, nullptr,
        config.alpha_from_rgb_only, nullptr, config.threads);
    for (int i = 0; i < state.scene.size(); ++i) {
      if (!grads.visible[i]) continue;
      state.grad2d_sum[i] += grads.pos2d_grad_norm[i];
      state.grad2d_count[i] += 1;
    }
    adam_step(state, grads, config);
    if (iter % config.densify_interval == 0 &&
        iter <= config.densify_until_effective())
      densify_and_prune(state, config);
    LossRow row{iter, lb.l1_rgb, lb.dssim, lb.l1_sem, lb.total,
                state.scene.size()};
    state.history.push_back(row);
    if (observer) observer(state, row);
  }
  return state;
}

inline void write_loss_csv(const std::string& path,
                           const std::vector<LossRow>& history) {
  std::ofstream out(path);
  require(out.good(), "cannot open for write: " + path);
  out << "iteration,l1_rgb,dssim,l1_sem,total,gaussian_count\n";
  for (const auto& r : history)
    out << r.iteration << "," << r.l1_rgb << "," << r.dssim << "," << r.l1_sem
        << "," << r.total << "," << r.gaussian_count << "\n";
  require(out.good(), "write failed: " + path);
}

}  // namespace semsplat
