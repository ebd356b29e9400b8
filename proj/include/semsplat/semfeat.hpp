// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numeric>

#include "semsplat/pca.hpp"
#include "semsplat/tensor.hpp"

namespace semsplat {

// Nearest-neighbour upsample of an h x w x C map to H x W; source pixel is
// (floor(y * h / H), floor(x * w / W)).
inline Tensor upsample_nearest(const Tensor& src, int out_h, int out_w) {
  require(src.dtype == DType::F32 && src.rank() == 3,
          "upsample needs h x w x C f32");
  const int h = int(src.dims[0]), w = int(src.dims[1]), c = int(src.dims[2]);
  require(h > 0 && w > 0 && out_h >= h && out_w >= w,
          "upsample target smaller than source");
  Tensor out = Tensor::zeros_f32({uint64_t(out_h), uint64_t(out_w),
                                  uint64_t(c)});
  for (int y = 0; y < out_h; ++y) {
    int sy = int(size_t(y) * h / out_h);
    for (int x = 0; x < out_w; ++x) {
      int sx = int(size_t(x) * w / out_w);
      for (int ch = 0; ch < c; ++ch)
        out.at3(y, x, ch) = src.at3(sy, sx, ch);
    }
  }
  return out;
}

struct MaskSet {
  std::vector<Tensor> masks;  // u32 H x W, values 0/1
  int height = 0, width = 0;
};

inline MaskSet make_mask_set(std::vector<Tensor> masks) {
  require(!masks.empty(), "empty mask set");
  MaskSet set;
  set.height = int(masks[0].dims[0]);
  set.width = int(masks[0].dims[1]);
  for (auto& m : masks) {
    require(m.dtype == DType::U32 && m.rank() == 2, "mask must be u32 H x W");
    require(int(m.dims[0]) == set.height && int(m.dims[1]) == set.width,
            "mask size mismatch");
    size_t area = 0;
    for (uint32_t v : m.u32) {
      require(v == 0 || v == 1, "mask values must be 0 or 1");
      area += v;
    }
    require(area > 0, "empty mask");
  }
  set.masks = std::move(masks);
  return set;
}

inline size_t mask_area(const Tensor& m) {
  return std::accumulate(m.u32.begin(), m.u32.end(), size_t(0));
}

// Collapses overlapping instance masks into one label map. Masks are
// ranked by (area, input index) ascending; a pixel covered by several
// masks keeps the smallest one. Label L = 1 + rank, 0 = unlabeled.
inline Tensor resolve_mask_overlaps(const MaskSet& set) {
  const int h = set.height, w = set.width;
  const int n = int(set.masks.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<size_t> areas(n);
  for (int i = 0; i < n; ++i) areas[i] = mask_area(set.masks[i]);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (areas[a] != areas[b]) return areas[a] < areas[b];
    return a < b;
  });
  Tensor labels = Tensor::zeros_u32({uint64_t(h), uint64_t(w)});
  // Painting large to small lets small masks overwrite, which realizes
  // the precedence rule in one pass.
  for (int rank = n - 1; rank >= 0; --rank) {
    const Tensor& m = set.masks[order[rank]];
    uint32_t label = uint32_t(rank) + 1;
    for (size_t i = 0; i < m.u32.size(); ++i)
      if (m.u32[i]) labels.u32[i] = label;
  }
  return labels;
}

// Mean feature vector per label over an H x W x C map. Row L - 1 holds
// label L; labels without pixels keep zero rows.
inline RowMatf average_features_per_mask(const Tensor& features,
                                         const Tensor& labels,
                                         int label_count) {
  require(features.dtype == DType::F32 && features.rank() == 3,
          "feature map must be H x W x C f32");
  require(labels.dtype == DType::U32 && labels.rank() == 2 &&
              labels.dims[0] == features.dims[0] &&
              labels.dims[1] == features.dims[1],
          "label map shape mismatch");
  require(label_count > 0, "no labels");
  const int c = int(features.dims[2]);
  RowMatd sums = RowMatd::Zero(label_count, c);
  std::vector<size_t> counts(label_count, 0);
  const size_t n = labels.u32.size();
  for (size_t i = 0; i < n; ++i) {
    uint32_t l = labels.u32[i];
    if (l == 0) continue;
    require(int(l) <= label_count, "label exceeds mask count");
    for (int ch = 0; ch < c; ++ch)
      sums(l - 1, ch) += double(features.f32[i * c + ch]);
    counts[l - 1] += 1;
  }
  for (int l = 0; l < label_count; ++l)
    if (counts[l] > 0) sums.row(l) /= double(counts[l]);
  return sums.cast<float>();
}

// Per-pixel regression target: row of the compressed per-mask features at
// labeled pixels, zeros elsewhere.
inline Tensor build_target_map(const Tensor& labels, const RowMatf& rows) {
  const int h = int(labels.dims[0]), w = int(labels.dims[1]);
  const int k = int(rows.cols());
  Tensor out = Tensor::zeros_f32({uint64_t(h), uint64_t(w), uint64_t(k)});
  for (size_t i = 0; i < labels.u32.size(); ++i) {
    uint32_t l = labels.u32[i];
    if (l == 0) continue;
    require(int(l) <= rows.rows(), "label exceeds feature rows");
    for (int c = 0; c < k; ++c) out.f32[i * k + c] = rows(l - 1, c);
  }
  return out;
}

struct ViewSemantics {
  Tensor labels;        // u32 H x W
  RowMatf raw_rows;     // mask_count x C, raw per-mask means
  RowMatf pca_rows;     // mask_count x k
  Tensor target_map;    // H x W x k
  int mask_count = 0;
};

struct FeatureBundle {
  std::vector<ViewSemantics> views;
  PcaModel pca;
  int raw_dim = 0;
  int compressed_dim = 0;
};

// Distillation preprocessing: upsample the raw per-view feature maps,
// resolve masks into labels, average per mask, fit one compressor across
// all views, then compress and bake per-pixel target maps.
inline FeatureBundle build_feature_bundle(
    const std::vector<Tensor>& feature_maps,
    const std::vector<MaskSet>& mask_sets, int image_h, int image_w, int k) {
  require(feature_maps.size() == mask_sets.size() && !feature_maps.empty(),
          "feature map and mask set counts differ");
  FeatureBundle bundle;
  bundle.compressed_dim = k;
  bundle.raw_dim = int(feature_maps[0].dims[2]);
  std::vector<RowMatf> per_view_rows;
  size_t total_rows = 0;
  for (size_t v = 0; v < feature_maps.size(); ++v) {
    require(int(feature_maps[v].dims[2]) == bundle.raw_dim,
            "feature dimension mismatch across views");
    ViewSemantics vs;
    require(mask_sets[v].height == image_h && mask_sets[v].width == image_w,
            "mask size mismatch");
    vs.labels = resolve_mask_overlaps(mask_sets[v]);
    vs.mask_count = int(mask_sets[v].masks.size());
    Tensor up = upsample_nearest(feature_maps[v], image_h, image_w);
    vs.raw_rows = average_features_per_mask(up, vs.labels, vs.mask_count);
    total_rows += vs.raw_rows.rows();
    per_view_rows.push_back(vs.raw_rows);
    bundle.views.push_back(std::move(vs));
  }
  RowMatf stacked(total_rows, bundle.raw_dim);
  size_t at = 0;
  for (const auto& rows : per_view_rows) {
    stacked.middleRows(at, rows.rows()) = rows;
    at += rows.rows();
  }
  bundle.pca = pca_fit(stacked, k);
  for (auto& vs : bundle.views) {
    vs.pca_rows = pca_project(bundle.pca, vs.raw_rows);
    vs.target_map = build_target_map(vs.labels, vs.pca_rows);
  }
  return bundle;
}

}  // namespace semsplat
