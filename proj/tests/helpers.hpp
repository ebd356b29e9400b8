// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "semsplat/camera.hpp"
#include "semsplat/scene.hpp"

namespace testutil {

inline const std::string& tmp_dir() {
  static const std::string dir = [] {
    auto p = std::filesystem::temp_directory_path() /
             ("semsplat_tests_" + std::to_string(::getpid()));
    std::filesystem::create_directories(p);
    return p.string();
  }();
  return dir;
}

inline std::string tmp_path(const std::string& name) {
  return (std::filesystem::path(tmp_dir()) / name).string();
}

// Identity-pose pinhole camera at the origin looking down +z.
inline semsplat::Camera test_camera(int w = 16, int h = 16, float focal = 0) {
  semsplat::Camera c;
  c.fx = c.fy = focal > 0 ? focal : static_cast<float>(w);
  c.cx = w / 2.0f;
  c.cy = h / 2.0f;
  c.width = w;
  c.height = h;
  return c;
}

// PCA model that maps k-dim raw features to themselves.
inline semsplat::PcaModel identity_pca(int k) {
  semsplat::PcaModel m;
  m.input_dim = k;
  m.components = k;
  m.mean.setZero(k);
  m.basis = semsplat::RowMatf::Identity(k, k);
  m.explained_variance.setOnes(k);
  return m;
}

// Random well-conditioned scene in front of the identity camera.
inline semsplat::Scene random_scene(semsplat::Rng& rng, int n, int k,
                                    float min_z = 2.0f, float max_z = 5.0f) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  semsplat::Scene s;
  s.init(n, k);
  for (int i = 0; i < n; ++i) {
    s.positions(i, 0) = 1.6f * u(rng) - 0.8f;
    s.positions(i, 1) = 1.6f * u(rng) - 0.8f;
    s.positions(i, 2) = min_z + (max_z - min_z) * u(rng);
    for (int d = 0; d < 3; ++d)
      s.log_scales(i, d) = std::log(0.02f + 0.25f * u(rng));
    semsplat::Vec4f q(u(rng) - 0.5f, u(rng) - 0.5f, u(rng) - 0.5f,
                      u(rng) - 0.5f);
    while (q.norm() < 1e-3f)
      q = semsplat::Vec4f(u(rng) - 0.5f, u(rng) - 0.5f, u(rng) - 0.5f,
                          u(rng) - 0.5f);
    s.rotations.row(i) = (q / q.norm()).transpose();
    s.opacity_logits[i] = 5.0f * u(rng) - 2.0f;
    for (int d = 0; d < 3; ++d) s.colors(i, d) = u(rng);
    for (int d = 0; d < k; ++d) s.features(i, d) = 2.0f * u(rng) - 1.0f;
  }
  s.pca.input_dim = k + 3;
  s.pca.components = k;
  s.pca.mean.setZero(k + 3);
  s.pca.basis.setZero(k, k + 3);
  for (int i = 0; i < k; ++i) s.pca.basis(i, i) = 1.0f;
  s.pca.explained_variance.setOnes(k);
  return s;
}

inline std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

inline bool same_file_bytes(const std::string& a, const std::string& b) {
  return slurp(a) == slurp(b);
}

inline bool same_scene_bits(const semsplat::Scene& a,
                            const semsplat::Scene& b) {
  auto eq = [](const auto& x, const auto& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    return std::memcmp(x.data(), y.data(),
                       sizeof(float) * static_cast<size_t>(x.size())) == 0;
  };
  return eq(a.positions, b.positions) && eq(a.log_scales, b.log_scales) &&
         eq(a.rotations, b.rotations) &&
         eq(a.opacity_logits, b.opacity_logits) && eq(a.colors, b.colors) &&
         eq(a.features, b.features) && eq(a.pca.mean, b.pca.mean) &&
         eq(a.pca.basis, b.pca.basis) &&
         eq(a.pca.explained_variance, b.pca.explained_variance) &&
         a.pca.input_dim == b.pca.input_dim &&
         a.pca.components == b.pca.components && a.metadata == b.metadata;
}

}  // namespace testutil
