// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>

#include "semsplat/losses.hpp"

namespace semsplat {

struct ChangeDetection {
  Tensor mask;                  // u32 H x W, largest changed component
  Vec2f centroid = Vec2f::Zero();  // pixel-center coordinates
  Eigen::VectorXf mean_feature;    // rendered feature mean over the mask
  bool changed = false;
  size_t area = 0;
};

// Frame differencing against the rendered initial view: threshold the
// per-pixel L1 RGB difference, clean speckle with one 3x3 morphological
// open, keep the largest 8-connected component.
inline ChangeDetection detect_changes(const RenderOutput& rendered,
                                      const Tensor& current,
                                      double threshold = 0.1) {
  const int h = rendered.height, w = rendered.width;
  require(current.dtype == DType::F32 && current.rank() == 3 &&
              int(current.dims[0]) == h && int(current.dims[1]) == w &&
              current.dims[2] == 3,
          "current frame shape mismatch");
  std::vector<uint8_t> raw(size_t(h) * w, 0);
  for (size_t i = 0; i < size_t(h) * w; ++i) {
    double d = 0;
    for (int c = 0; c < 3; ++c)
      d += std::abs(double(rendered.rgb[i * 3 + c]) -
                    double(current.f32[i * 3 + c]));
    raw[i] = (d > threshold) ? 1 : 0;
  }
  auto inside = [&](int y, int x) { return y >= 0 && y < h && x >= 0 && x < w; };
  std::vector<uint8_t> eroded(size_t(h) * w, 0), opened(size_t(h) * w, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1 && all; ++dy)
        for (int dx = -1; dx <= 1 && all; ++dx) {
          int yy = y + dy, xx = x + dx;
          if (!inside(yy, xx) || !raw[size_t(yy) * w + xx]) all = false;
        }
      eroded[size_t(y) * w + x] = all ? 1 : 0;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int dy = -1; dy <= 1 && !any; ++dy)
        for (int dx = -1; dx <= 1 && !any; ++dx) {
          int yy = y + dy, xx = x + dx;
          if (inside(yy, xx) && eroded[size_t(yy) * w + xx]) any = true;
        }
      opened[size_t(y) * w + x] = any ? 1 : 0;
    }
  // Largest connected component, 8-connectivity, scan-order tie break.
  std::vector<int> comp(size_t(h) * w, -1);
  int best_comp = -1;
  size_t best_size = 0;
  int n_comp = 0;
  std::vector<int> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      size_t i = size_t(y) * w + x;
      if (!opened[i] || comp[i] >= 0) continue;
      int id = n_comp++;
      size_t size = 0;
      stack.assign(1, int(i));
      comp[i] = id;
      while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        ++size;
        int cy = cur / w, cx = cur % w;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            int yy = cy + dy, xx = cx + dx;
            if (!inside(yy, xx)) continue;
            size_t j = size_t(yy) * w + xx;
            if (opened[j] && comp[j] < 0) {
              comp[j] = id;
              stack.push_back(int(j));
            }
          }
      }
      if (size > best_size) {
        best_size = size;
        best_comp = id;
      }
    }
  ChangeDetection det;
  det.mask = Tensor::zeros_u32({uint64_t(h), uint64_t(w)});
  det.mean_feature = Eigen::VectorXf::Zero(rendered.feature_dim);
  if (best_comp < 0) return det;
  double cx_acc = 0, cy_acc = 0;
  Eigen::VectorXd feat_acc = Eigen::VectorXd::Zero(rendered.feature_dim);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      size_t i = size_t(y) * w + x;
      if (comp[i] != best_comp) continue;
      det.mask.u32[i] = 1;
      cx_acc += x + 0.5;
      cy_acc += y + 0.5;
      for (int c = 0; c < rendered.feature_dim; ++c)
        feat_acc[c] += double(rendered.feature[i * rendered.feature_dim + c]);
    }
  det.changed = true;
  det.area = best_size;
  det.centroid = Vec2f(float(cx_acc / best_size), float(cy_acc / best_size));
  det.mean_feature = (feat_acc / double(best_size)).cast<float>();
  return det;
}

// Cosine-similarity candidates, then the largest spatial cluster where
// neighbors link within 3x the median candidate nearest-neighbor distance.
inline std::vector<int> select_moved_gaussians(const Scene& scene,
                                               const Eigen::VectorXf& mean_feature,
                                               double sim_threshold = 0.85) {
  require(mean_feature.size() == scene.feature_dim(),
          "query feature dimension mismatch");
  double qn = mean_feature.cast<double>().norm();
  require(qn > 1e-12, "zero query feature");
  std::vector<int> cand;
  for (int i = 0; i < scene.size(); ++i) {
    double fn = scene.features.row(i).cast<double>().norm();
    if (fn < 1e-12) continue;
    double cosine =
        scene.features.row(i).cast<double>().dot(mean_feature.cast<double>()) /
        (fn * qn);
    if (cosine > sim_threshold) cand.push_back(i);
  }
  if (cand.empty()) fail("object not identified");
  const int m = static_cast<int>(cand.size());
  if (m == 1) return cand;
  // Median nearest-neighbor distance among candidates.
  std::vector<double> nn(m, std::numeric_limits<double>::infinity());
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      double d = (scene.positions.row(cand[a]) - scene.positions.row(cand[b]))
                     .cast<double>()
                     .norm();
      nn[a] = std::min(nn[a], d);
      nn[b] = std::min(nn[b], d);
    }
  std::vector<double> sorted_nn = nn;
  std::nth_element(sorted_nn.begin(), sorted_nn.begin() + m / 2,
                   sorted_nn.end());
  double link = 3.0 * sorted_nn[m / 2];
  std::vector<int> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      double d = (scene.positions.row(cand[a]) - scene.positions.row(cand[b]))
                     .cast<double>()
                     .norm();
      if (d <= link) parent[find(a)] = find(b);
    }
  std::vector<int> cluster_size(m, 0);
  for (int a = 0; a < m; ++a) cluster_size[find(a)] += 1;
  int best_root = -1, best_size = 0, best_min_index = scene.size();
  for (int a = 0; a < m; ++a) {
    int r = find(a);
    if (r != a) continue;
    int min_idx = scene.size();
    for (int b = 0; b < m; ++b)
      if (find(b) == r) min_idx = std::min(min_idx, cand[b]);
    if (cluster_size[r] > best_size ||
        (cluster_size[r] == best_size && min_idx < best_min_index)) {
      best_root = r;
      best_size = cluster_size[r];
      best_min_index = min_idx;
    }
  }
  std::vector<int> out;
  for (int a = 0; a < m; ++a)
    if (find(a) == best_root) out.push_back(cand[a]);
  return out;
}

// Observed object center: re-detect against the scene rendered WITHOUT the
// selected splats. Revealed background is then explained, so the only
// unexplained pixels are the object's new footprint, whose centroid is a
// consistent d_gt for the centroid loss term.
inline ChangeDetection observe_new_center(const Scene& scene,
                                          const std::vector<int>& selected,
                                          const Camera& camera,
                                          const Tensor& current,
                                          double threshold = 0.1,
                                          int threads = 1) {
  std::vector<uint8_t> in_sel(size_t(scene.size()), 0);
  for (int i : selected) in_sel[size_t(i)] = 1;
  std::vector<int> rest;
  rest.reserve(size_t(scene.size()) - selected.size());
  for (int i = 0; i < scene.size(); ++i)
    if (!in_sel[size_t(i)]) rest.push_back(i);
  RenderOutput bg = render_subset(scene, camera, rest, threads);
  return detect_changes(bg, current, threshold);
}

struct RigidUpdate {
  Vec3f translation = Vec3f::Zero();
  Vec3f axis_angle = Vec3f::Zero();
  Vec3f pivot = Vec3f::Zero();
  std::vector<int> selected;
  double final_loss = 0;
  int steps = 0;
};

inline RigidUpdate inverse(const RigidUpdate& u) {
  RigidUpdate inv = u;
  Mat3f r = rotation_from_axis_angle(u.axis_angle);
  inv.axis_angle = -u.axis_angle;
  inv.translation = -(r.transpose() * u.translation);
  return inv;
}

// Rigidly transforms the selected splats about the pivot; everything else
// is untouched.
inline Scene apply_update(const Scene& scene, const RigidUpdate& u) {
  Scene out = scene;
  Mat3f r = rotation_from_axis_angle(u.axis_angle);
  Vec4f rq = quat_from_axis_angle(u.axis_angle);
  for (int i : u.selected) {
    require(i >= 0 && i < scene.size(), "selected index out of range");
    Vec3f p = scene.positions.row(i).transpose();
    out.positions.row(i) =
        (r * (p - u.pivot) + u.pivot + u.translation).transpose();
    Vec4f q = scene.rotations.row(i).transpose();
    Vec4f q2 = quat_multiply(rq, q);
    q2.normalize();
    out.rotations.row(i) = q2.transpose();
  }
  return out;
}

// Alpha-weighted pixel centroid of the selection rendered alone.
inline Vec2f projected_center(const Scene& scene, const RigidUpdate& u,
                              const Camera& camera) {
  require(!u.selected.empty(), "empty selection");
  Scene moved = apply_update(scene, u);
  RenderOutput sub = render_subset(moved, camera, u.selected);
  double sum_a = 0, sx = 0, sy = 0;
  for (int y = 0; y < sub.height; ++y)
    for (int x = 0; x < sub.width; ++x) {
      double a = sub.alpha[size_t(y) * sub.width + x];
      sum_a += a;
      sx += a * (x + 0.5);
      sy += a * (y + 0.5);
    }
  require(sum_a > 1e-8, "selection not visible");
  return Vec2f(float(sx / sum_a), float(sy / sum_a));
}

struct UpdateConfig {
  double change_threshold = 0.1;
  double sim_threshold = 0.85;
  double centroid_weight = 0.1;
  double lr_translation = 0.01;  // multiplied by scene extent
  double lr_rotation = 0.01;
  int max_steps = 500;
  int plateau_window = 20;
  double plateau_rel = 1e-5;
  bool use_photometric = true;
  bool use_centroid = true;
  int threads = 1;
};

struct UpdateView {
  Tensor image;  // current frame, H x W x 3 f32
  Camera camera;
  bool has_detection = false;
  Vec2f d_gt = Vec2f::Zero();
  size_t change_area = 0;
};

namespace detail {

struct PoseEval {
  double loss = 0;
  Vec3<double> g_t = Vec3<double>::Zero();
  Vec3<double> g_aa = Vec3<double>::Zero();
  bool any_visible = false;
};

inline PoseEval evaluate_pose(const Scene& scene,
                              const std::vector<int>& selected,
                              const std::vector<UpdateView>& views,
                              const Vec3f& pivot, const Vec3f& t,
                              const Vec3f& aa, const UpdateConfig& cfg,
                              bool with_grad) {
  PoseEval ev;
  RigidUpdate u;
  u.translation = t;
  u.axis_angle = aa;
  u.pivot = pivot;
  u.selected = selected;
  Scene moved = apply_update(scene, u);
  RowMatd d_pos = RowMatd::Zero(scene.size(), 3);
  RowMatd d_rot = RowMatd::Zero(scene.size(), 4);
  std::vector<float> d_rgb, d_alpha;
  for (const auto& view : views) {
    const int w = view.camera.width, h = view.camera.height;
    if (cfg.use_photometric) {
      RenderOutput r = render(moved, view.camera, cfg.threads);
      const size_t n = size_t(w) * h * 3;
      double acc = 0;
      d_rgb.assign(n, 0.0f);
      for (size_t i = 0; i < n; ++i) {
        double diff = double(r.rgb[i]) - double(view.image.f32[i]);
        acc += std::abs(diff);
        d_rgb[i] = float((diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0)) /
                         double(n));
      }
      ev.loss += acc / double(n);
      if (with_grad) {
        Gradients g = render_backward(moved, view.camera, d_rgb, nullptr,
                                      nullptr, true, nullptr, cfg.threads);
        for (int i : selected) {
          d_pos.row(i) += g.d_position.row(i).cast<double>();
          d_rot.row(i) += g.d_rotation.row(i).cast<double>();
        }
      }
    }
    RenderOutput sub = render_subset(moved, view.camera, selected,
                                     cfg.threads);
    double sum_a = 0, sx = 0, sy = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double a = sub.alpha[size_t(y) * w + x];
        sum_a += a;
        sx += a * (x + 0.5);
        sy += a * (y + 0.5);
      }
    if (sum_a > 1e-8) ev.any_visible = true;
    if (cfg.use_centroid && view.has_detection && sum_a > 1e-8) {
      // Center offsets in normalized image coordinates, so this term is
      // commensurate with the mean-abs photometric term and acts as the
      // intended weak auxiliary rather than dominating it.
      double px = sx / sum_a, py = sy / sum_a;
      double ex = (px - double(view.d_gt[0])) / w,
             ey = (py - double(view.d_gt[1])) / h;
      ev.loss += cfg.centroid_weight * (std::abs(ex) + std::abs(ey));
      if (with_grad) {
        double gx = cfg.centroid_weight *
                    (ex > 0 ? 1.0 : (ex < 0 ? -1.0 : 0.0)) / w;
        double gy = cfg.centroid_weight *
                    (ey > 0 ? 1.0 : (ey < 0 ? -1.0 : 0.0)) / h;
        d_alpha.assign(size_t(w) * h, 0.0f);
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * w + x;
            // d d_pred / d alpha_q = (q - d_pred) / sum_a
            d_alpha[i] = float(((x + 0.5 - px) * gx + (y + 0.5 - py) * gy) /
                               sum_a);
          }
        std::vector<float> zero_rgb(size_t(w) * h * 3, 0.0f);
        Gradients g =
            render_backward(moved, view.camera, zero_rgb, nullptr, &d_alpha,
                            true, &selected, cfg.threads);
        for (int i : selected) {
          d_pos.row(i) += g.d_position.row(i).cast<double>();
          d_rot.row(i) += g.d_rotation.row(i).cast<double>();
        }
      }
    }
  }
  if (with_grad) {
    auto dr = rotation_axis_angle_jacobians(aa.cast<double>().eval());
    auto jq = quat_from_axis_angle_jacobian(aa.cast<double>().eval());
    Vec4<double> g_rq = Vec4<double>::Zero();
    for (int i : selected) {
      Vec3<double> gp = d_pos.row(i).transpose();
      ev.g_t += gp;
      Vec3<double> rel =
          (scene.positions.row(i).transpose().cast<double>() -
           pivot.cast<double>());
      for (int c = 0; c < 3; ++c) ev.g_aa[c] += gp.dot(dr[c] * rel);
      Vec4<double> q_base =
          scene.rotations.row(i).transpose().cast<double>();
      Vec4<double> gq = d_rot.row(i).transpose();
      g_rq += quat_multiply_backward_left(q_base, gq);
    }
    ev.g_aa += jq.transpose() * g_rq;
  }
  return ev;
}

}  // namespace detail

// Render-and-compare pose refinement over exactly 6 parameters. Returns
// the best pose seen (never worse than the initialization).
inline RigidUpdate optimize_update(const Scene& scene,
                                   const std::vector<int>& selected,
                                   const std::vector<UpdateView>& views,
                                   const UpdateConfig& cfg,
                                   float scene_extent_hint = 0.0f) {
  require(!selected.empty(), "empty selection");
  require(!views.empty(), "no update views");
  Vec3f pivot = Vec3f::Zero();
  for (int i : selected) pivot += scene.positions.row(i).transpose();
  pivot /= float(selected.size());
  float extent = scene_extent_hint > 0
                     ? scene_extent_hint
                     : scene_extent<float>(scene.positions);

  // Translation warm start: back-project the centroid shift in the view
  // with the largest detected change, at the selection's median depth.
  Vec3f t = Vec3f::Zero();
  int best_view = -1;
  size_t best_area = 0;
  for (size_t v = 0; v < views.size(); ++v)
    if (views[v].has_detection && views[v].change_area > best_area) {
      best_area = views[v].change_area;
      best_view = int(v);
    }
  if (best_view >= 0) {
    const Camera& cam = views[best_view].camera;
    RigidUpdate ident;
    ident.pivot = pivot;
    ident.selected = selected;
    Scene base = scene;
    RenderOutput sub = render_subset(base, cam, selected, cfg.threads);
    double sum_a = 0, sx = 0, sy = 0;
    for (int y = 0; y < sub.height; ++y)
      for (int x = 0; x < sub.width; ++x) {
        double a = sub.alpha[size_t(y) * sub.width + x];
        sum_a += a;
        sx += a * (x + 0.5);
        sy += a * (y + 0.5);
      }
    if (sum_a > 1e-8) {
      Vec2f c0(float(sx / sum_a), float(sy / sum_a));
      std::vector<float> depths;
      for (int i : selected) {
        Vec3f p = scene.positions.row(i).transpose();
        depths.push_back((cam.rotation() * p + cam.translation())[2]);
      }
      std::nth_element(depths.begin(), depths.begin() + depths.size() / 2,
                       depths.end());
      float z = depths[depths.size() / 2];
      if (z > float(kNearPlane)) {
        Vec2f delta = views[best_view].d_gt - c0;
        Vec3f t_cam(delta[0] * z / cam.fx, delta[1] * z / cam.fy, 0.0f);
        t = cam.rotation().transpose() * t_cam;
      }
    }
  }
  Vec3f aa = Vec3f::Zero();

  // Adam state over the 6 pose scalars.
  Eigen::Matrix<double, 6, 1> m = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> v = Eigen::Matrix<double, 6, 1>::Zero();
  const double b1 = 0.9, b2 = 0.999, eps = 1e-15;
  const double lr_t = cfg.lr_translation * extent;
  const double lr_r = cfg.lr_rotation;

  detail::PoseEval ev0 = detail::evaluate_pose(scene, selected, views, pivot,
                                               t, aa, cfg, false);
  require(ev0.any_visible, "selection not visible in any view");
  require(std::isfinite(ev0.loss), "non-finite update loss");
  double best_loss = ev0.loss;
  Vec3f best_t = t, best_aa = aa;
  std::deque<double> best_trace;
  best_trace.push_back(best_loss);
  int steps_done = 0;
  for (int step = 1; step <= cfg.max_steps; ++step) {
    detail::PoseEval ev = detail::evaluate_pose(scene, selected, views, pivot,
                                                t, aa, cfg, true);
    require(std::isfinite(ev.loss), "non-finite update loss");
    if (ev.loss < best_loss) {
      best_loss = ev.loss;
      best_t = t;
      best_aa = aa;
    }
    steps_done = step;
    double bc1 = 1.0 - std::pow(b1, step);
    double bc2 = 1.0 - std::pow(b2, step);
    Eigen::Matrix<double, 6, 1> g;
    g << ev.g_t[0], ev.g_t[1], ev.g_t[2], ev.g_aa[0], ev.g_aa[1], ev.g_aa[2];
    for (int i = 0; i < 6; ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      double step_size = (i < 3 ? lr_t : lr_r);
      double delta = step_size * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
      if (i < 3)
        t[i] -= float(delta);
      else
        aa[i - 3] -= float(delta);
    }
    best_trace.push_back(best_loss);
    if (int(best_trace.size()) > cfg.plateau_window + 1)
      best_trace.pop_front();
    if (int(best_trace.size()) == cfg.plateau_window + 1) {
      double then = best_trace.front(), now = best_trace.back();
      if (then - now < cfg.plateau_rel * std::max(std::abs(then), 1e-12))
        break;
    }
  }
  RigidUpdate out;
  out.translation = best_t;
  out.axis_angle = best_aa;
  out.pivot = pivot;
  out.selected = selected;
  out.final_loss = best_loss;
  out.steps = steps_done;
  return out;
}

struct UpdatePipelineResult {
  ChangeDetection primary;  // largest-area initial detection
  std::vector<int> selected;
  RigidUpdate update;
  bool changed = false;
};

// Full change pipeline: detect against the stale scene, select the moved
// splats by feature similarity, re-estimate each view's observed center
// against the scene minus the selection, then refine the 6-DoF pose.
// Views arrive with image + camera set; detection fields are filled in.
inline UpdatePipelineResult run_update_pipeline(const Scene& scene,
                                                std::vector<UpdateView>& views,
                                                const UpdateConfig& cfg,
                                                float scene_extent_hint = 0.0f) {
  require(!views.empty(), "no update views");
  UpdatePipelineResult res;
  for (auto& view : views) {
    RenderOutput stale = render(scene, view.camera, cfg.threads);
    ChangeDetection det =
        detect_changes(stale, view.image, cfg.change_threshold);
    view.has_detection = det.changed;
    view.d_gt = det.centroid;
    view.change_area = det.area;
    if (det.changed && det.area > res.primary.area)
      res.primary = std::move(det);
  }
  if (!res.primary.changed) return res;
  res.changed = true;
  res.selected =
      select_moved_gaussians(scene, res.primary.mean_feature, cfg.sim_threshold);
  for (auto& view : views) {
    ChangeDetection det =
        observe_new_center(scene, res.selected, view.camera, view.image,
                           cfg.change_threshold, cfg.threads);
    view.has_detection = det.changed;
    view.d_gt = det.centroid;
    view.change_area = det.area;
  }
  res.update =
      optimize_update(scene, res.selected, views, cfg, scene_extent_hint);
  return res;
}

}  // namespace semsplat
