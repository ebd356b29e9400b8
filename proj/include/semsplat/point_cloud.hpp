// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <unordered_map>

#include "semsplat/math.hpp"
#include "semsplat/tensor.hpp"

namespace semsplat {

struct PointCloud {
  RowMatf positions;  // N x 3
  RowMatf colors;     // N x 3, values in [0, 1]
};

inline PointCloud load_point_cloud(const std::string& points_path,
                                   const std::string& colors_path) {
  Tensor p = read_tensor(points_path);
  Tensor c = read_tensor(colors_path);
  require(p.dtype == DType::F32 && p.rank() == 2 && p.dims[1] == 3,
          "point tensor must be N x 3 f32: " + points_path);
  require(c.dtype == DType::F32 && c.rank() == 2 && c.dims[1] == 3,
          "color tensor must be N x 3 f32: " + colors_path);
  require(p.dims[0] == c.dims[0], "point and color counts differ");
  PointCloud cloud;
  const int n = static_cast<int>(p.dims[0]);
  cloud.positions.resize(n, 3);
  cloud.colors.resize(n, 3);
  std::copy(p.f32.begin(), p.f32.end(), cloud.positions.data());
  std::copy(c.f32.begin(), c.f32.end(), cloud.colors.data());
  return cloud;
}

namespace detail {

struct CellKey {
  int64_t x, y, z;
  bool operator==(const CellKey& o) const {
    return x == o.x && y == o.y && z == o.z;
  }
};

struct CellHash {
  size_t operator()(const CellKey& k) const {
    uint64_t h = uint64_t(k.x) * 73856093u ^ uint64_t(k.y) * 19349663u ^
                 uint64_t(k.z) * 83492791u;
    return static_cast<size_t>(h);
  }
};

inline int count_voxels(const RowMatf& pos, const Vec3f& lo, float voxel) {
  std::unordered_map<CellKey, int, CellHash> cells;
  cells.reserve(static_cast<size_t>(pos.rows()));
  for (int i = 0; i < pos.rows(); ++i) {
    CellKey k{int64_t(std::floor((pos(i, 0) - lo[0]) / voxel)),
              int64_t(std::floor((pos(i, 1) - lo[1]) / voxel)),
              int64_t(std::floor((pos(i, 2) - lo[2]) / voxel))};
    cells.emplace(k, 1);
  }
  return static_cast<int>(cells.size());
}

}  // namespace detail

// Voxel-average downsampling to roughly target_count points. The voxel
// size is found by binary search; occupied voxels collapse to the centroid
// of their members with averaged color. Output order follows the first
// appearance of each voxel in the input, so the result is deterministic
// for a fixed input ordering.
inline PointCloud resample_point_cloud(const PointCloud& cloud,
                                       int target_count) {
  const int n = static_cast<int>(cloud.positions.rows());
  require(n > 0, "empty point cloud");
  require(target_count > 0, "non-positive resample target");
  if (n <= target_count) return cloud;
  Vec3f lo = cloud.positions.colwise().minCoeff().transpose();
  Vec3f hi = cloud.positions.colwise().maxCoeff().transpose();
  float diag = (hi - lo).norm();
  if (diag <= 0) diag = 1.0f;
  float v_lo = diag * 1e-6f, v_hi = diag * 2.0f;
  float best_v = v_hi;
  int best_err = std::numeric_limits<int>::max();
  for (int it = 0; it < 48; ++it) {
    float v = 0.5f * (v_lo + v_hi);
    int m = detail::count_voxels(cloud.positions, lo, v);
    int err = std::abs(m - target_count);
    if (err < best_err) {
      best_err = err;
      best_v = v;
    }
    if (m > target_count)
      v_lo = v;
    else if (m < target_count)
      v_hi = v;
    else
      break;
  }
  std::unordered_map<detail::CellKey, int, detail::CellHash> cell_group;
  cell_group.reserve(static_cast<size_t>(n));
  std::vector<Eigen::Vector3d> pos_sum, col_sum;
  std::vector<int> counts;
  for (int i = 0; i < n; ++i) {
    detail::CellKey k{
        int64_t(std::floor((cloud.positions(i, 0) - lo[0]) / best_v)),
        int64_t(std::floor((cloud.positions(i, 1) - lo[1]) / best_v)),
        int64_t(std::floor((cloud.positions(i, 2) - lo[2]) / best_v))};
    auto [it, fresh] = cell_group.emplace(k, static_cast<int>(counts.size()));
    if (fresh) {
      pos_sum.push_back(Eigen::Vector3d::Zero());
      col_sum.push_back(Eigen::Vector3d::Zero());
      counts.push_back(0);
    }
    int g = it->second;
    pos_sum[g] += cloud.positions.row(i).cast<double>().transpose();
    col_sum[g] += cloud.colors.row(i).cast<double>().transpose();
    counts[g] += 1;
  }
  PointCloud out;
  const int m = static_cast<int>(counts.size());
  out.positions.resize(m, 3);
  out.colors.resize(m, 3);
  for (int g = 0; g < m; ++g) {
    out.positions.row(g) =
        (pos_sum[g] / counts[g]).cast<float>().transpose();
    out.colors.row(g) = (col_sum[g] / counts[g]).cast<float>().transpose();
  }
  return out;
}

// Mean distance to the k nearest neighbours, per point. Grid-accelerated;
// falls back to scanning wider rings until enough candidates are found.
inline Eigen::VectorXf mean_knn_distance(const RowMatf& pos, int k = 3) {
  const int n = static_cast<int>(pos.rows());
  require(n > 0, "empty point cloud");
  Eigen::VectorXf out(n);
  if (n == 1) {
    out[0] = 1.0f;
    return out;
  }
  int kk = std::min(k, n - 1);
  Vec3f lo = pos.colwise().minCoeff().transpose();
  Vec3f hi = pos.colwise().maxCoeff().transpose();
  float diag = (hi - lo).norm();
  if (diag <= 0) {
    out.setConstant(1e-6f);
    return out;
  }
  float cell = diag / std::max(1.0f, std::cbrt(static_cast<float>(n)));
  std::unordered_map<detail::CellKey, std::vector<int>, detail::CellHash> grid;
  auto key_of = [&](int i) {
    return detail::CellKey{int64_t(std::floor((pos(i, 0) - lo[0]) / cell)),
                           int64_t(std::floor((pos(i, 1) - lo[1]) / cell)),
                           int64_t(std::floor((pos(i, 2) - lo[2]) / cell))};
  };
  for (int i = 0; i < n; ++i) grid[key_of(i)].push_back(i);
  std::vector<float> d2;
  for (int i = 0; i < n; ++i) {
    detail::CellKey c = key_of(i);
    bool solved = false;
    // Scanning rings 0..r covers every neighbour closer than r*cell, so
    // the k nearest are exact once the kth distance fits that bound.
    for (int ring = 1; ring <= 64 && !solved; ++ring) {
      d2.clear();
      for (int64_t dx = -ring; dx <= ring; ++dx)
        for (int64_t dy = -ring; dy <= ring; ++dy)
          for (int64_t dz = -ring; dz <= ring; ++dz) {
            auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
            if (it == grid.end()) continue;
            for (int j : it->second) {
              if (j == i) continue;
              d2.push_back((pos.row(i) - pos.row(j)).squaredNorm());
            }
          }
      if (static_cast<int>(d2.size()) >= kk) {
        std::partial_sort(d2.begin(), d2.begin() + kk, d2.end());
        if (std::sqrt(double(d2[kk - 1])) <= double(ring) * cell)
          solved = true;
      }
    }
    if (!solved) {
      d2.clear();
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        d2.push_back((pos.row(i) - pos.row(j)).squaredNorm());
      }
      std::partial_sort(d2.begin(), d2.begin() + kk, d2.end());
    }
    double acc = 0;
    for (int t = 0; t < kk; ++t) acc += std::sqrt(double(d2[t]));
    out[i] = static_cast<float>(acc / kk);
  }
  return out;
}

}  // namespace semsplat
