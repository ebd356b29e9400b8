// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <type_traits>

#include "semsplat/camera.hpp"
#include "semsplat/scene.hpp"
#include "semsplat/tensor.hpp"

namespace semsplat {

// Rasterization constants. The 0.3 pixel dilation and the alpha / transmittance
// thresholds are part of the render semantics: the tile renderer and the
// brute-force reference apply exactly the same tests in the same splat order,
// so their outputs agree bitwise.
inline constexpr double kNearPlane = 0.01;
inline constexpr double kCovDilation = 0.3;
inline constexpr double kAlphaClamp = 0.99;
inline constexpr double kMinAlpha = 1.0 / 255.0;
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr int kTileSize = 16;
inline constexpr double kBBoxSigma = 3.0;

template <typename S>
struct PreparedSplat {
  S mx, my;            // 2d mean, pixel coordinates
  S c00, c01, c11;     // conic (inverse of dilated 2d covariance)
  S opacity;           // activated
  S depth;             // camera z
  S tx, ty, tz;        // camera-frame center
  Vec3<S> color;
  int gidx;            // row in the scene
  int x0, x1, y0, y1;  // inclusive pixel bounds of the 3-sigma box
};

template <typename S>
struct RenderOutputT {
  int width = 0, height = 0, feature_dim = 0;
  std::vector<S> rgb;      // H*W*3
  std::vector<S> feature;  // H*W*k
  std::vector<S> alpha;    // H*W
  std::vector<S> depth;    // H*W, weighted camera-z sum; divide by alpha for the mean
  int degenerate_skipped = 0;
};

using RenderOutput = RenderOutputT<float>;

template <typename S>
struct GradientsT {
  RowMat<S> d_position;
  RowMat<S> d_log_scale;
  RowMat<S> d_rotation;
  VecX<S> d_opacity_logit;
  RowMat<S> d_color;
  RowMat<S> d_feature;
  VecX<S> pos2d_grad_norm;     // screen-space positional gradient magnitude
  std::vector<uint8_t> visible;
  int degenerate_skipped = 0;
};

using Gradients = GradientsT<float>;

namespace detail {

template <typename S>
struct ProjectionScratch {
  Mat3<S> w_rot;
  Vec3<S> w_t;
};

// EWA projection of every splat (or the selected subset); output is sorted
// front to back with ties broken by index, which fixes the composite order
// for every renderer and the backward pass.
template <typename S>
inline std::vector<PreparedSplat<S>> project_and_prepare(
    const SceneT<S>& scene, const CameraT<S>& camera,
    const std::vector<uint8_t>* subset_mask, int* degenerate_skipped) {
  const int n = scene.size();
  const Mat3<S> w = camera.rotation();
  const Vec3<S> wt = camera.translation();
  std::vector<PreparedSplat<S>> out;
  out.reserve(static_cast<size_t>(n));
  int degenerate = 0;
  for (int i = 0; i < n; ++i) {
    if (subset_mask && !(*subset_mask)[i]) continue;
    Vec3<S> p = scene.positions.row(i).transpose();
    Vec3<S> t = w * p + wt;
    if (!(t[2] >= S(kNearPlane))) continue;
    Vec4<S> q = scene.rotations.row(i).transpose();
    q /= q.norm();
    Vec3<S> s_act = scene.log_scales.row(i).transpose().array().exp();
    Mat3<S> rot = quat_to_rotation(q);
    Mat3<S> m3 = rot * s_act.asDiagonal();
    Mat3<S> sigma3 = m3 * m3.transpose();
    Eigen::Matrix<S, 2, 3> j;
    S inv_z = S(1) / t[2];
    j(0, 0) = camera.fx * inv_z;
    j(0, 1) = 0;
    j(0, 2) = -camera.fx * t[0] * inv_z * inv_z;
    j(1, 0) = 0;
    j(1, 1) = camera.fy * inv_z;
    j(1, 2) = -camera.fy * t[1] * inv_z * inv_z;
    Eigen::Matrix<S, 2, 3> u = j * w;
    Mat2<S> cov = u * sigma3 * u.transpose();
    cov(0, 0) += S(kCovDilation);
    cov(1, 1) += S(kCovDilation);
    S det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    if (!(det > S(0)) || !std::isfinite(double(det))) {
      ++degenerate;
      continue;
    }
    PreparedSplat<S> ps;
    ps.mx = camera.fx * t[0] * inv_z + camera.cx;
    ps.my = camera.fy * t[1] * inv_z + camera.cy;
    S inv_det = S(1) / det;
    ps.c00 = cov(1, 1) * inv_det;
    ps.c01 = -cov(0, 1) * inv_det;
    ps.c11 = cov(0, 0) * inv_det;
    ps.opacity = sigmoid(scene.opacity_logits[i]);
    ps.depth = t[2];
    ps.tx = t[0];
    ps.ty = t[1];
    ps.tz = t[2];
    ps.color = scene.colors.row(i).transpose();
    ps.gidx = i;
    S mid = (cov(0, 0) + cov(1, 1)) / 2;
    S disc = std::sqrt(std::max(S(0), mid * mid - det));
    S radius = S(kBBoxSigma) * std::sqrt(std::max(S(1e-8), mid + disc));
    ps.x0 = std::max(0, int(std::ceil(double(ps.mx - radius) - 0.5)));
    ps.x1 = std::min(camera.width - 1,
                     int(std::floor(double(ps.mx + radius) - 0.5)));
    ps.y0 = std::max(0, int(std::ceil(double(ps.my - radius) - 0.5)));
    ps.y1 = std::min(camera.height - 1,
                     int(std::floor(double(ps.my + radius) - 0.5)));
    if (ps.x0 > ps.x1 || ps.y0 > ps.y1) continue;
    out.push_back(ps);
  }
  std::sort(out.begin(), out.end(),
            [](const PreparedSplat<S>& a, const PreparedSplat<S>& b) {
              if (a.depth != b.depth) return a.depth < b.depth;
              return a.gidx < b.gidx;
            });
  if (degenerate_skipped) *degenerate_skipped = degenerate;
  return out;
}

// Front-to-back compositing of one pixel over an ordered candidate list.
// Returns the number of candidates consumed (for contributor recording).
template <typename S, typename Visit>
inline void composite_pixel(const std::vector<PreparedSplat<S>>& splats,
                            const int* cand, int cand_count, int ix, int iy,
                            Visit&& visit) {
  const S px = S(ix) + S(0.5);
  const S py = S(iy) + S(0.5);
  S t_acc = S(1);
  for (int c = 0; c < cand_count; ++c) {
    const PreparedSplat<S>& sp = splats[cand[c]];
    if (ix < sp.x0 || ix > sp.x1 || iy < sp.y0 || iy > sp.y1) continue;
    S dx = px - sp.mx;
    S dy = py - sp.my;
    S sigma =
        (sp.c00 * dx * dx + 2 * sp.c01 * dx * dy + sp.c11 * dy * dy) / 2;
    if (!(sigma >= S(0))) continue;
    S g = std::exp(-sigma);
    S a = sp.opacity * g;
    bool clamped = a > S(kAlphaClamp);
    if (clamped) a = S(kAlphaClamp);
    if (a < S(kMinAlpha)) continue;
    S t_next = t_acc * (S(1) - a);
    if (t_next < S(kMinTransmittance)) break;
    visit(cand[c], a, g, t_acc, clamped);
    t_acc = t_next;
  }
}

template <typename S>
inline void run_rows(int height, int threads, const std::function<void(int)>& row_fn) {
  if (threads <= 1) {
    for (int y = 0; y < height; ++y) row_fn(y);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (int y = t; y < height; y += threads) row_fn(y);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

template <typename S>
inline RenderOutputT<S> render_impl(const SceneT<S>& scene,
                                    const CameraT<S>& camera,
                                    const std::vector<int>* subset,
                                    int threads, bool use_tiles) {
  require(scene.size() > 0, "empty scene");
  camera.validate();
  const int w = camera.width, h = camera.height, k = scene.feature_dim();
  std::vector<uint8_t> mask;
  if (subset) {
    mask.assign(scene.size(), 0);
    for (int i : *subset) {
      require(i >= 0 && i < scene.size(), "subset index out of range");
      mask[i] = 1;
    }
  }
  RenderOutputT<S> out;
  out.width = w;
  out.height = h;
  out.feature_dim = k;
  out.rgb.assign(size_t(w) * h * 3, S(0));
  out.feature.assign(size_t(w) * h * k, S(0));
  out.alpha.assign(size_t(w) * h, S(0));
  out.depth.assign(size_t(w) * h, S(0));
  auto splats = detail::project_and_prepare(
      scene, camera, subset ? &mask : nullptr, &out.degenerate_skipped);
  const S* features = scene.features.data();

  std::vector<int> all_idx;
  std::vector<std::vector<int>> tile_lists;
  const int tiles_x = (w + kTileSize - 1) / kTileSize;
  const int tiles_y = (h + kTileSize - 1) / kTileSize;
  if (use_tiles) {
    tile_lists.resize(size_t(tiles_x) * tiles_y);
    for (int si = 0; si < static_cast<int>(splats.size()); ++si) {
      const auto& sp = splats[si];
      for (int ty = sp.y0 / kTileSize; ty <= sp.y1 / kTileSize; ++ty)
        for (int tx = sp.x0 / kTileSize; tx <= sp.x1 / kTileSize; ++tx)
          tile_lists[size_t(ty) * tiles_x + tx].push_back(si);
    }
  } else {
    all_idx.resize(splats.size());
    for (int si = 0; si < static_cast<int>(splats.size()); ++si)
      all_idx[si] = si;
  }

  auto row_fn = [&](int y) {
    for (int x = 0; x < w; ++x) {
      const int* cand;
      int cand_count;
      if (use_tiles) {
        const auto& list =
            tile_lists[size_t(y / kTileSize) * tiles_x + x / kTileSize];
        cand = list.data();
        cand_count = static_cast<int>(list.size());
      } else {
        cand = all_idx.data();
        cand_count = static_cast<int>(all_idx.size());
      }
      size_t pix = size_t(y) * w + x;
      S* rgb = &out.rgb[pix * 3];
      S* feat = &out.feature[pix * k];
      S t_final = S(1);
      detail::composite_pixel<S>(
          splats, cand, cand_count, x, y,
          [&](int si, S a, S /*g*/, S t, bool /*clamped*/) {
            const auto& sp = splats[si];
            S wgt = t * a;
            rgb[0] += wgt * sp.color[0];
            rgb[1] += wgt * sp.color[1];
            rgb[2] += wgt * sp.color[2];
            const S* frow = features + size_t(sp.gidx) * k;
            for (int c = 0; c < k; ++c) feat[c] += wgt * frow[c];
            out.depth[pix] += wgt * sp.depth;
            t_final = t * (S(1) - a);
          });
      out.alpha[pix] = S(1) - t_final;
    }
  };
  detail::run_rows<S>(h, threads, row_fn);
  return out;
}

template <typename S>
inline RenderOutputT<S> render(const SceneT<S>& scene,
                               const CameraT<S>& camera, int threads = 1) {
  return render_impl(scene, camera, nullptr, threads, true);
}

template <typename S>
inline RenderOutputT<S> render_subset(const SceneT<S>& scene,
                                      const CameraT<S>& camera,
                                      const std::vector<int>& selected,
                                      int threads = 1) {
  return render_impl(scene, camera, &selected, threads, true);
}

// Brute-force oracle: every pixel walks the full sorted splat list. Slow
// and simple on purpose; must agree bitwise with the tiled path.
template <typename S>
inline RenderOutputT<S> reference_render(const SceneT<S>& scene,
                                         const CameraT<S>& camera,
                                         const std::vector<int>* subset =
                                             nullptr) {
  return render_impl(scene, camera, subset, 1, false);
}

// Reverse-mode gradients of the full render. Upstream signals: d_rgb is
// required (may be all zero), d_feature and d_alpha optional. When
// alpha_from_rgb_only is set, the feature residual contributes to the
// per-splat feature gradient only; opacity, position and shape receive
// nothing from it. d_alpha always drives geometry.
template <typename S>
inline GradientsT<S> render_backward(
    const SceneT<S>& scene, const CameraT<S>& camera,
    const std::vector<S>& d_rgb,
    std::type_identity_t<const std::vector<S>*> d_feature,
    std::type_identity_t<const std::vector<S>*> d_alpha,
    bool alpha_from_rgb_only = true, const std::vector<int>* subset = nullptr,
    int threads = 1) {
  require(scene.size() > 0, "empty scene");
  camera.validate();
  const int w = camera.width, h = camera.height, k = scene.feature_dim();
  const int n = scene.size();
  require(d_rgb.size() == size_t(w) * h * 3, "d_rgb size mismatch");
  if (d_feature)
    require(d_feature->size() == size_t(w) * h * k, "d_feature size mismatch");
  if (d_alpha)
    require(d_alpha->size() == size_t(w) * h, "d_alpha size mismatch");

  std::vector<uint8_t> mask;
  if (subset) {
    mask.assign(n, 0);
    for (int i : *subset) {
      require(i >= 0 && i < n, "subset index out of range");
      mask[i] = 1;
    }
  }
  GradientsT<S> grads;
  grads.d_position.setZero(n, 3);
  grads.d_log_scale.setZero(n, 3);
  grads.d_rotation.setZero(n, 4);
  grads.d_opacity_logit.setZero(n);
  grads.d_color.setZero(n, 3);
  grads.d_feature.setZero(n, k);
  grads.pos2d_grad_norm.setZero(n);
  grads.visible.assign(n, 0);
  auto splats = detail::project_and_prepare(
      scene, camera, subset ? &mask : nullptr, &grads.degenerate_skipped);
  const int ns = static_cast<int>(splats.size());
  for (const auto& sp : splats) grads.visible[sp.gidx] = 1;
  const S* features = scene.features.data();

  // Per-splat accumulators in splat order (not scene order).
  struct Accum {
    S gmx = 0, gmy = 0;
    S gm00 = 0, gm01 = 0, gm11 = 0;  // conic gradient, gm01 covers both
                                      // off-diagonal slots
    S galpha = 0;
    S gcol[3] = {0, 0, 0};
  };
  const int nthreads = std::max(1, threads);
  std::vector<std::vector<Accum>> acc_tl(nthreads,
                                         std::vector<Accum>(ns));
  std::vector<RowMat<S>> feat_tl(nthreads);
  for (auto& f : feat_tl) f.setZero(ns, k);

  const int tiles_x = (w + kTileSize - 1) / kTileSize;
  const int tiles_y = (h + kTileSize - 1) / kTileSize;
  std::vector<std::vector<int>> tile_lists(size_t(tiles_x) * tiles_y);
  for (int si = 0; si < ns; ++si) {
    const auto& sp = splats[si];
    for (int ty = sp.y0 / kTileSize; ty <= sp.y1 / kTileSize; ++ty)
      for (int tx = sp.x0 / kTileSize; tx <= sp.x1 / kTileSize; ++tx)
        tile_lists[size_t(ty) * tiles_x + tx].push_back(si);
  }

  struct Contributor {
    int si;
    S a, g, t;
    bool clamped;
  };
  auto worker = [&](int tid) {
    std::vector<Accum>& acc = acc_tl[tid];
    RowMat<S>& gfeat = feat_tl[tid];
    std::vector<Contributor> contrib;
    for (int y = tid; y < h; y += nthreads) {
      for (int x = 0; x < w; ++x) {
        const auto& list =
            tile_lists[size_t(y / kTileSize) * tiles_x + x / kTileSize];
        contrib.clear();
        S t_final = S(1);
        detail::composite_pixel<S>(
            splats, list.data(), static_cast<int>(list.size()), x, y,
            [&](int si, S a, S g, S t, bool clamped) {
              contrib.push_back({si, a, g, t, clamped});
              t_final = t * (S(1) - a);
            });
        if (contrib.empty()) continue;
        size_t pix = size_t(y) * w + x;
        const S* dc = &d_rgb[pix * 3];
        const S* df = d_feature ? &(*d_feature)[pix * k] : nullptr;
        S da_pix = d_alpha ? (*d_alpha)[pix] : S(0);
        // Back-to-front weight recurrences; w_* holds the composited value
        // of everything behind the current splat.
        S w_rgb[3] = {0, 0, 0};
        S w_alpha = 0;
        std::vector<S> w_feat;
        bool feat_to_geom = df && !alpha_from_rgb_only;
        if (feat_to_geom) w_feat.assign(k, S(0));
        for (int ci = static_cast<int>(contrib.size()) - 1; ci >= 0; --ci) {
          const Contributor& cb = contrib[ci];
          const PreparedSplat<S>& sp = splats[cb.si];
          Accum& ac = acc[cb.si];
          S wgt = cb.t * cb.a;
          S da_geom = 0;
          for (int ch = 0; ch < 3; ++ch) {
            ac.gcol[ch] += wgt * dc[ch];
            da_geom += dc[ch] * cb.t * (sp.color[ch] - w_rgb[ch]);
            w_rgb[ch] = cb.a * sp.color[ch] + (S(1) - cb.a) * w_rgb[ch];
          }
          if (df) {
            const S* frow = features + size_t(sp.gidx) * k;
            for (int c = 0; c < k; ++c) {
              gfeat(cb.si, c) += wgt * df[c];
              if (feat_to_geom) {
                da_geom += df[c] * cb.t * (frow[c] - w_feat[c]);
                w_feat[c] = cb.a * frow[c] + (S(1) - cb.a) * w_feat[c];
              }
            }
          }
          if (d_alpha) {
            da_geom += da_pix * cb.t * (S(1) - w_alpha);
            w_alpha = cb.a + (S(1) - cb.a) * w_alpha;
          }
          if (!cb.clamped) {
            ac.galpha += cb.g * da_geom;
            S dg = sp.opacity * da_geom;
            S dsigma = -cb.g * dg;
            S dx = S(x) + S(0.5) - sp.mx;
            S dy = S(y) + S(0.5) - sp.my;
            S mdx = sp.c00 * dx + sp.c01 * dy;
            S mdy = sp.c01 * dx + sp.c11 * dy;
            // d sigma / d mean = -conic * d; the minus signs cancel.
            ac.gmx += -dsigma * mdx;
            ac.gmy += -dsigma * mdy;
            ac.gm00 += dsigma * dx * dx / 2;
            ac.gm01 += dsigma * dx * dy;
            ac.gm11 += dsigma * dy * dy / 2;
          }
        }
      }
    }
  };
  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  // Deterministic reduction in thread-index order.
  for (int t = 1; t < nthreads; ++t) {
    for (int si = 0; si < ns; ++si) {
      acc_tl[0][si].gmx += acc_tl[t][si].gmx;
      acc_tl[0][si].gmy += acc_tl[t][si].gmy;
      acc_tl[0][si].gm00 += acc_tl[t][si].gm00;
      acc_tl[0][si].gm01 += acc_tl[t][si].gm01;
      acc_tl[0][si].gm11 += acc_tl[t][si].gm11;
      acc_tl[0][si].galpha += acc_tl[t][si].galpha;
      for (int ch = 0; ch < 3; ++ch)
        acc_tl[0][si].gcol[ch] += acc_tl[t][si].gcol[ch];
    }
    feat_tl[0] += feat_tl[t];
  }

  const Mat3<S> wrot = camera.rotation();
  const S diag_half =
      S(std::sqrt(double(w) * w + double(h) * h) / 2.0);
  for (int si = 0; si < ns; ++si) {
    const Accum& ac = acc_tl[0][si];
    const PreparedSplat<S>& sp = splats[si];
    const int gi = sp.gidx;
    grads.d_color.row(gi) += Eigen::Matrix<S, 1, 3>(ac.gcol[0], ac.gcol[1],
                                                    ac.gcol[2]);
    grads.d_feature.row(gi) += feat_tl[0].row(si);
    S op = sp.opacity;
    grads.d_opacity_logit[gi] += ac.galpha * op * (S(1) - op);
    Vec2<S> gmean(ac.gmx, ac.gmy);
    grads.pos2d_grad_norm[gi] += gmean.norm() * diag_half;

    // Chain through the conic: M = inv(cov2d), dL/dcov2d = -M gM M.
    Mat2<S> conic;
    conic << sp.c00, sp.c01, sp.c01, sp.c11;
    Mat2<S> gm;
    gm << ac.gm00, ac.gm01 / 2, ac.gm01 / 2, ac.gm11;
    Mat2<S> g2 = -(conic * gm * conic);

    // Rebuild per-splat projection intermediates.
    Vec4<S> q_raw = scene.rotations.row(gi).transpose();
    S qn = q_raw.norm();
    Vec4<S> q = q_raw / qn;
    Vec3<S> s_act = scene.log_scales.row(gi).transpose().array().exp();
    Mat3<S> rot = quat_to_rotation(q);
    Mat3<S> m3 = rot * s_act.asDiagonal();
    Mat3<S> sigma3 = m3 * m3.transpose();
    S inv_z = S(1) / sp.tz;
    Eigen::Matrix<S, 2, 3> j;
    j(0, 0) = camera.fx * inv_z;
    j(0, 1) = 0;
    j(0, 2) = -camera.fx * sp.tx * inv_z * inv_z;
    j(1, 0) = 0;
    j(1, 1) = camera.fy * inv_z;
    j(1, 2) = -camera.fy * sp.ty * inv_z * inv_z;
    Eigen::Matrix<S, 2, 3> u = j * wrot;

    Mat3<S> g_sigma3 = u.transpose() * g2 * u;
    Eigen::Matrix<S, 2, 3> g_u = S(2) * g2 * u * sigma3;
    Eigen::Matrix<S, 2, 3> g_j = g_u * wrot.transpose();

    // Projection of the mean plus the J(t) dependency.
    Vec3<S> gt;
    gt[0] = gmean[0] * camera.fx * inv_z;
    gt[1] = gmean[1] * camera.fy * inv_z;
    gt[2] = -gmean[0] * camera.fx * sp.tx * inv_z * inv_z -
            gmean[1] * camera.fy * sp.ty * inv_z * inv_z;
    gt[0] += g_j(0, 2) * (-camera.fx * inv_z * inv_z);
    gt[1] += g_j(1, 2) * (-camera.fy * inv_z * inv_z);
    gt[2] += g_j(0, 0) * (-camera.fx * inv_z * inv_z) +
             g_j(1, 1) * (-camera.fy * inv_z * inv_z) +
             g_j(0, 2) * (S(2) * camera.fx * sp.tx * inv_z * inv_z * inv_z) +
             g_j(1, 2) * (S(2) * camera.fy * sp.ty * inv_z * inv_z * inv_z);
    grads.d_position.row(gi) += (wrot.transpose() * gt).transpose();

    // Sigma3 = (R S)(R S)^T.
    Mat3<S> g_m3 = S(2) * g_sigma3 * m3;
    Vec3<S> g_scale;
    for (int col = 0; col < 3; ++col) {
      S acc_s = 0;
      for (int row = 0; row < 3; ++row) acc_s += rot(row, col) * g_m3(row, col);
      g_scale[col] = acc_s;
    }
    grads.d_log_scale.row(gi) +=
        (g_scale.array() * s_act.array()).matrix().transpose();
    Mat3<S> g_rot;
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col)
        g_rot(row, col) = g_m3(row, col) * s_act[col];
    auto jac = quat_rotation_jacobians(q);
    Vec4<S> g_q_unit;
    for (int d = 0; d < 4; ++d)
      g_q_unit[d] = (jac[d].array() * g_rot.array()).sum();
    grads.d_rotation.row(gi) +=
        quat_normalize_backward(q_raw, g_q_unit).transpose();
  }
  require(grads.d_position.allFinite() && grads.d_log_scale.allFinite() &&
              grads.d_rotation.allFinite() &&
              grads.d_opacity_logit.allFinite() &&
              grads.d_color.allFinite() && grads.d_feature.allFinite(),
          "non-finite gradient");
  return grads;
}

// Plain-tensor views of a render, used by the CLI and the tests.
inline Tensor rgb_tensor(const RenderOutput& r) {
  Tensor t = Tensor::zeros_f32({uint64_t(r.height), uint64_t(r.width), 3});
  t.f32.assign(r.rgb.begin(), r.rgb.end());
  return t;
}

inline Tensor feature_tensor(const RenderOutput& r) {
  Tensor t = Tensor::zeros_f32(
      {uint64_t(r.height), uint64_t(r.width), uint64_t(r.feature_dim)});
  t.f32.assign(r.feature.begin(), r.feature.end());
  return t;
}

inline Tensor alpha_tensor(const RenderOutput& r) {
  Tensor t = Tensor::zeros_f32({uint64_t(r.height), uint64_t(r.width)});
  t.f32.assign(r.alpha.begin(), r.alpha.end());
  return t;
}

inline Tensor depth_tensor(const RenderOutput& r) {
  Tensor t = Tensor::zeros_f32({uint64_t(r.height), uint64_t(r.width)});
  t.f32.assign(r.depth.begin(), r.depth.end());
  return t;
}

}  // namespace semsplat
