// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstring>
#include <fstream>

#include "semsplat/pca.hpp"
#include "semsplat/tensor.hpp"

namespace semsplat {

// One splat, as a plain value. Scenes store columns (below); this record
// exists for append/read convenience at the API surface.
struct Gaussian {
  Vec3f position = Vec3f::Zero();
  Vec3f log_scale = Vec3f::Zero();
  Vec4f rotation = Vec4f(1, 0, 0, 0);  // (w, x, y, z), unit norm
  float opacity_logit = 0.0f;
  Vec3f color = Vec3f::Zero();
  Eigen::VectorXf feature;  // compressed semantic vector, k dims
};

// Column-major-of-arrays scene model. Parameter activations: scale =
// exp(log_scale), opacity = sigmoid(opacity_logit); rotation rows are kept
// unit norm by construction and renormalized after every optimizer step.
template <typename S>
struct SceneT {
  RowMat<S> positions;       // N x 3
  RowMat<S> log_scales;      // N x 3
  RowMat<S> rotations;       // N x 4
  VecX<S> opacity_logits;    // N
  RowMat<S> colors;          // N x 3
  RowMat<S> features;        // N x k
  PcaModel pca;
  std::string metadata;      // free-form JSON payload

  int size() const { return static_cast<int>(positions.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }

  void init(int n, int k) {
    positions.setZero(n, 3);
    log_scales.setZero(n, 3);
    rotations.setZero(n, 4);
    rotations.col(0).setOnes();
    opacity_logits.setZero(n);
    colors.setZero(n, 3);
    features.setZero(n, k);
  }

  template <typename T>
  SceneT<T> cast() const {
    SceneT<T> s;
    s.positions = positions.template cast<T>();
    s.log_scales = log_scales.template cast<T>();
    s.rotations = rotations.template cast<T>();
    s.opacity_logits = opacity_logits.template cast<T>();
    s.colors = colors.template cast<T>();
    s.features = features.template cast<T>();
    s.pca = pca;
    s.metadata = metadata;
    return s;
  }

  Gaussian get(int i) const {
    Gaussian g;
    g.position = positions.row(i).template cast<float>().transpose();
    g.log_scale = log_scales.row(i).template cast<float>().transpose();
    g.rotation = rotations.row(i).template cast<float>().transpose();
    g.opacity_logit = static_cast<float>(opacity_logits[i]);
    g.color = colors.row(i).template cast<float>().transpose();
    g.feature = features.row(i).template cast<float>().transpose();
    return g;
  }

  void set(int i, const Gaussian& g) {
    require(g.feature.size() == feature_dim(), "feature dimension mismatch");
    positions.row(i) = g.position.template cast<S>().transpose();
    log_scales.row(i) = g.log_scale.template cast<S>().transpose();
    rotations.row(i) = g.rotation.template cast<S>().transpose();
    opacity_logits[i] = S(g.opacity_logit);
    colors.row(i) = g.color.template cast<S>().transpose();
    features.row(i) = g.feature.template cast<S>().transpose();
  }

  void validate() const {
    require(size() > 0, "scene has no gaussians");
    require(features.rows() == positions.rows(), "feature row mismatch");
    auto finite = [](const auto& m) {
      return m.allFinite();
    };
    require(finite(positions) && finite(log_scales) && finite(rotations) &&
                finite(opacity_logits) && finite(colors) && finite(features),
            "scene has non-finite values");
    for (int i = 0; i < size(); ++i) {
      double n = rotations.row(i).template cast<double>().norm();
      require(std::abs(n - 1.0) < 1e-3, "unnormalized rotation in scene");
    }
    if (pca.components > 0)
      require(pca.components == feature_dim(),
              "feature dimension mismatch between scene and pca");
  }
};

using Scene = SceneT<float>;

// Axis-aligned bounding box diagonal of the splat centers.
template <typename S>
inline S scene_extent(const RowMat<S>& positions) {
  if (positions.rows() == 0) return S(0);
  Vec3<S> lo = positions.colwise().minCoeff().transpose();
  Vec3<S> hi = positions.colwise().maxCoeff().transpose();
  return (hi - lo).norm();
}

namespace detail {

inline void write_f32_block(std::ofstream& out, const float* p, size_t n) {
  write_bytes(out, p, n * 4);
}

inline void read_f32_block(std::ifstream& in, float* p, size_t n,
                           const std::string& path) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * 4));
  if (static_cast<size_t>(in.gcount()) != n * 4)
    fail("truncated scene file: " + path);
}

}  // namespace detail

// Scene container (".sgsc", little endian):
//   magic "SGSC" | u32 version=1 | u32 count | u32 k |
//   positions count*3 | log_scales count*3 | rotations count*4 |
//   opacity_logits count | colors count*3 | features count*k |
//   u32 pca_input_dim | mean C | basis k*C | explained_variance k |
//   u32 metadata_bytes | metadata
// All float payloads are f32. Write then load is bit-exact.
inline void save_scene(const std::string& path, const Scene& scene) {
  scene.validate();
  require(scene.pca.components == scene.feature_dim(),
          "feature dimension mismatch between scene and pca");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open for write: " + path);
  const char magic[4] = {'S', 'G', 'S', 'C'};
  detail::write_bytes(out, magic, 4);
  uint32_t version = 1, count = scene.size(), k = scene.feature_dim();
  detail::write_bytes(out, &version, 4);
  detail::write_bytes(out, &count, 4);
  detail::write_bytes(out, &k, 4);
  detail::write_f32_block(out, scene.positions.data(), count * 3);
  detail::write_f32_block(out, scene.log_scales.data(), count * 3);
  detail::write_f32_block(out, scene.rotations.data(), count * 4);
  detail::write_f32_block(out, scene.opacity_logits.data(), count);
  detail::write_f32_block(out, scene.colors.data(), count * 3);
  detail::write_f32_block(out, scene.features.data(), size_t(count) * k);
  uint32_t c = scene.pca.input_dim;
  detail::write_bytes(out, &c, 4);
  detail::write_f32_block(out, scene.pca.mean.data(), c);
  detail::write_f32_block(out, scene.pca.basis.data(), size_t(k) * c);
  detail::write_f32_block(out, scene.pca.explained_variance.data(), k);
  uint32_t meta_bytes = static_cast<uint32_t>(scene.metadata.size());
  detail::write_bytes(out, &meta_bytes, 4);
  detail::write_bytes(out, scene.metadata.data(), meta_bytes);
  require(out.good(), "write failed: " + path);
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open: " + path);
  char magic[4];
  detail::read_bytes(in, magic, 4, "truncated scene file: " + path);
  if (std::memcmp(magic, "SGSC", 4) != 0) fail("not a scene file: " + path);
  uint32_t version = 0, count = 0, k = 0;
  detail::read_bytes(in, &version, 4, "truncated scene file: " + path);
  if (version != 1) fail("unsupported scene version: " + path);
  detail::read_bytes(in, &count, 4, "truncated scene file: " + path);
  detail::read_bytes(in, &k, 4, "truncated scene file: " + path);
  if (count == 0) fail("scene has no gaussians: " + path);
  if (k == 0 || k > (1u << 20)) fail("bad feature dimension: " + path);
  Scene s;
  s.init(count, k);
  detail::read_f32_block(in, s.positions.data(), count * 3, path);
  detail::read_f32_block(in, s.log_scales.data(), count * 3, path);
  detail::read_f32_block(in, s.rotations.data(), count * 4, path);
  detail::read_f32_block(in, s.opacity_logits.data(), count, path);
  detail::read_f32_block(in, s.colors.data(), count * 3, path);
  detail::read_f32_block(in, s.features.data(), size_t(count) * k, path);
  uint32_t c = 0;
  detail::read_bytes(in, &c, 4, "truncated scene file: " + path);
  if (c == 0 || c > (1u << 20)) fail("bad pca dimension: " + path);
  s.pca.input_dim = c;
  s.pca.components = k;
  s.pca.mean.resize(c);
  s.pca.basis.resize(k, c);
  s.pca.explained_variance.resize(k);
  detail::read_f32_block(in, s.pca.mean.data(), c, path);
  detail::read_f32_block(in, s.pca.basis.data(), size_t(k) * c, path);
  detail::read_f32_block(in, s.pca.explained_variance.data(), k, path);
  uint32_t meta_bytes = 0;
  detail::read_bytes(in, &meta_bytes, 4, "truncated scene file: " + path);
  if (meta_bytes > (1u << 26)) fail("bad metadata size: " + path);
  s.metadata.resize(meta_bytes);
  if (meta_bytes)
    detail::read_bytes(in, s.metadata.data(), meta_bytes, "truncated scene file: " + path);
  s.validate();
  return s;
}

}  // namespace semsplat
