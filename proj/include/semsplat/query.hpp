// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "semsplat/update.hpp"

namespace semsplat {

struct QueryEmbedding {
  Eigen::VectorXf raw;         // C
  Eigen::VectorXf compressed;  // k, via the scene's compressor
};

inline QueryEmbedding make_query(const Scene& scene,
                                 const Eigen::VectorXf& raw) {
  require(scene.pca.components == scene.feature_dim(),
          "scene has no feature compressor");
  require(int(raw.size()) == scene.pca.input_dim,
          "query embedding dimension mismatch");
  QueryEmbedding q;
  q.raw = raw;
  q.compressed = pca_project_vec(scene.pca, raw);
  require(q.compressed.cast<double>().norm() > 1e-12,
          "query embedding is zero after compression");
  return q;
}

inline QueryEmbedding load_query(const Scene& scene, const std::string& path) {
  Tensor t = read_tensor(path);
  require(t.dtype == DType::F32 && (t.rank() == 1 || t.rank() == 0),
          "query embedding must be a f32 vector: " + path);
  Eigen::VectorXf raw(t.f32.size());
  std::copy(t.f32.begin(), t.f32.end(), raw.data());
  return make_query(scene, raw);
}

// Cosine similarity between the rendered feature map and the compressed
// query, remapped from [-1, 1] to [0, 1]. Pixels with alpha < 0.05 or a
// near-zero rendered feature report 0.
inline Tensor heatmap(const Scene& scene, const Camera& camera,
                      const QueryEmbedding& query, int threads = 1) {
  RenderOutput r = render(scene, camera, threads);
  const int k = r.feature_dim;
  require(int(query.compressed.size()) == k, "query dimension mismatch");
  Eigen::VectorXd q = query.compressed.cast<double>();
  double qn = q.norm();
  require(qn > 1e-12, "zero query embedding");
  Tensor out = Tensor::zeros_f32({uint64_t(r.height), uint64_t(r.width)});
  for (size_t i = 0; i < size_t(r.height) * r.width; ++i) {
    if (r.alpha[i] < 0.05f) continue;
    double dot = 0, fn2 = 0;
    for (int c = 0; c < k; ++c) {
      double f = double(r.feature[i * k + c]);
      dot += f * q[c];
      fn2 += f * f;
    }
    double fn = std::sqrt(fn2);
    if (fn < 1e-12) continue;
    double cosine = dot / (fn * qn);
    out.f32[i] = float((cosine + 1.0) / 2.0);
  }
  return out;
}

struct LocatedObject {
  std::vector<int> indices;
  Vec3f centroid = Vec3f::Zero();  // opacity-weighted
};

inline LocatedObject locate_object(const Scene& scene,
                                   const QueryEmbedding& query,
                                   double sim_threshold = 0.85) {
  LocatedObject obj;
  obj.indices = select_moved_gaussians(scene, query.compressed, sim_threshold);
  double wsum = 0;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (int i : obj.indices) {
    double w = sigmoid(double(scene.opacity_logits[i]));
    wsum += w;
    acc += w * scene.positions.row(i).cast<double>().transpose();
  }
  require(wsum > 1e-12, "selection fully transparent");
  obj.centroid = (acc / wsum).cast<float>();
  return obj;
}

// Intersection over union of the thresholded heatmap against a binary
// ground-truth mask; the empty-union case is defined as 1.
inline double iou_2d(const Tensor& heat, double threshold,
                     const Tensor& gt_mask) {
  require(heat.dtype == DType::F32 && heat.rank() == 2, "heatmap must be f32");
  require(gt_mask.dtype == DType::U32 && gt_mask.rank() == 2 &&
              gt_mask.dims == heat.dims,
          "mask shape mismatch");
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < heat.f32.size(); ++i) {
    bool p = heat.f32[i] >= float(threshold);
    bool g = gt_mask.u32[i] != 0;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return double(inter) / double(uni);
}

struct GraspPose {
  Mat3f rotation = Mat3f::Identity();  // columns: closing, lateral, approach
  Vec3f translation = Vec3f::Zero();
  float width = 0;
  float score = 0;
  bool canonical_fallback = false;
};

// Heuristic antipodal proposals: principal axes of the opacity-weighted
// selected centers, approach along world -z, closing direction fanned
// around the minor axes, width from the second principal extent.
inline std::vector<GraspPose> propose_grasp(const Scene& scene,
                                            const std::vector<int>& selected) {
  require(!selected.empty(), "empty selection");
  double wsum = 0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int i : selected) {
    require(i >= 0 && i < scene.size(), "selected index out of range");
    double w = sigmoid(double(scene.opacity_logits[i]));
    wsum += w;
    mean += w * scene.positions.row(i).cast<double>().transpose();
  }
  require(wsum > 1e-12, "selection fully transparent");
  mean /= wsum;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int i : selected) {
    double w = sigmoid(double(scene.opacity_logits[i]));
    Eigen::Vector3d d =
        scene.positions.row(i).cast<double>().transpose() - mean;
    cov += w * d * d.transpose();
  }
  cov /= wsum;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  // Ascending eigenvalues: col 2 is the major axis.
  Eigen::Vector3d major = es.eigenvectors().col(2);
  Eigen::Vector3d second = es.eigenvectors().col(1);
  double lam_major = std::max(0.0, es.eigenvalues()[2]);
  double lam_second = std::max(0.0, es.eigenvalues()[1]);
  bool degenerate = lam_major < 1e-18 ||
                    lam_second < 1e-9 * lam_major ||
                    int(selected.size()) < 3;
  Vec3f approach(0, 0, -1);
  std::vector<GraspPose> out;
  auto extent_along = [&](const Eigen::Vector3d& axis) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i : selected) {
      double v = scene.positions.row(i).cast<double>().transpose().dot(axis) -
                 mean.dot(axis);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return hi > lo ? hi - lo : 0.0;
  };
  if (degenerate) {
    GraspPose g;
    g.canonical_fallback = true;
    g.rotation.col(0) = Vec3f(1, 0, 0);
    g.rotation.col(1) = Vec3f(0, -1, 0);
    g.rotation.col(2) = approach;
    g.translation = mean.cast<float>();
    double e = extent_along(Eigen::Vector3d(1, 0, 0));
    g.width = float(std::max(1e-3, 1.2 * e));
    g.score = 1.0f / g.width;
    out.push_back(g);
    return out;
  }
  // Closing direction must be perpendicular to the major axis; fan ten
  // candidates around it in the plane orthogonal to the major axis.
  Eigen::Vector3d base = second.normalized();
  Eigen::Vector3d axis = major.normalized();
  double width_extent = extent_along(base);
  const int n_cand = 10;
  for (int c = 0; c < n_cand; ++c) {
    double ang = (double(c) - (n_cand - 1) / 2.0) / double(n_cand - 1) *
                 (M_PI / 2.0);
    Eigen::Vector3d closing =
        (std::cos(ang) * base + std::sin(ang) * axis.cross(base)).normalized();
    GraspPose g;
    Eigen::Vector3d ap(0, 0, -1);
    // Orthonormalize: approach fixed, closing projected off approach.
    Eigen::Vector3d cl = closing - closing.dot(ap) * ap;
    if (cl.norm() < 1e-9) continue;
    cl.normalize();
    Eigen::Vector3d lateral = ap.cross(cl);
    g.rotation.col(0) = cl.cast<float>();
    g.rotation.col(1) = lateral.cast<float>();
    g.rotation.col(2) = ap.cast<float>();
    g.translation = mean.cast<float>();
    double e = extent_along(cl);
    if (e <= 0) e = width_extent;
    g.width = float(std::max(1e-3, 1.2 * e));
    g.score = 1.0f / g.width;
    out.push_back(g);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const GraspPose& a, const GraspPose& b) {
                     return a.score > b.score;
                   });
  if (int(out.size()) > n_cand) out.resize(n_cand);
  if (out.empty()) {
    GraspPose g;
    g.canonical_fallback = true;
    g.rotation.col(0) = Vec3f(1, 0, 0);
    g.rotation.col(1) = Vec3f(0, -1, 0);
    g.rotation.col(2) = approach;
    g.translation = mean.cast<float>();
    g.width = float(std::max(1e-3, 1.2 * extent_along(Eigen::Vector3d(1, 0, 0))));
    g.score = 1.0f / g.width;
    out.push_back(g);
  }
  return out;
}

}  // namespace semsplat
