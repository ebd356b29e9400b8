// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <json.hpp>

#include "semsplat/math.hpp"

namespace semsplat {

// Pinhole camera. world_to_camera maps world points into a +z-forward,
// y-down camera frame; pixel (u, v) has its center at (u + 0.5, v + 0.5).
template <typename S>
struct CameraT {
  S fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  Mat4<S> world_to_camera = Mat4<S>::Identity();

  Mat3<S> rotation() const { return world_to_camera.template block<3, 3>(0, 0); }
  Vec3<S> translation() const { return world_to_camera.template block<3, 1>(0, 3); }

  Vec3<S> to_camera(const Vec3<S>& p) const {
    return rotation() * p + translation();
  }

  Vec3<S> center() const { return -rotation().transpose() * translation(); }

  template <typename T>
  CameraT<T> cast() const {
    CameraT<T> c;
    c.fx = T(fx);
    c.fy = T(fy);
    c.cx = T(cx);
    c.cy = T(cy);
    c.width = width;
    c.height = height;
    c.world_to_camera = world_to_camera.template cast<T>();
    return c;
  }

  void validate() const {
    require(fx > S(0) && fy > S(0), "invalid camera: non-positive focal length");
    require(width > 0 && height > 0, "invalid camera: non-positive size");
    Mat3<S> r = rotation();
    Mat3<S> err = r * r.transpose() - Mat3<S>::Identity();
    require(err.template cast<double>().cwiseAbs().maxCoeff() < 1e-5,
            "invalid camera: rotation not orthonormal");
    require(r.determinant() > S(0), "invalid camera: reflected rotation");
    Mat4<S> bottom_ok = world_to_camera;
    require(bottom_ok(3, 0) == S(0) && bottom_ok(3, 1) == S(0) &&
                bottom_ok(3, 2) == S(0) && bottom_ok(3, 3) == S(1),
            "invalid camera: bad homogeneous row");
  }
};

using Camera = CameraT<float>;

inline Camera load_camera(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("invalid camera json: " + path + ": " + e.what());
  }
  Camera c;
  try {
    c.fx = j.at("fx").get<float>();
    c.fy = j.at("fy").get<float>();
    c.cx = j.at("cx").get<float>();
    c.cy = j.at("cy").get<float>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    auto m = j.at("world_to_camera").get<std::vector<double>>();
    require(m.size() == 16, "invalid camera: world_to_camera needs 16 values");
    for (int r = 0; r < 4; ++r)
      for (int col = 0; col < 4; ++col)
        c.world_to_camera(r, col) = static_cast<float>(m[r * 4 + col]);
  } catch (const nlohmann::json::exception& e) {
    fail("invalid camera json: " + path + ": " + e.what());
  }
  c.validate();
  return c;
}

inline void save_camera(const std::string& path, const Camera& c) {
  nlohmann::json j;
  j["fx"] = c.fx;
  j["fy"] = c.fy;
  j["cx"] = c.cx;
  j["cy"] = c.cy;
  j["width"] = c.width;
  j["height"] = c.height;
  std::vector<double> m(16);
  for (int r = 0; r < 4; ++r)
    for (int col = 0; col < 4; ++col) m[r * 4 + col] = c.world_to_camera(r, col);
  j["world_to_camera"] = m;
  std::ofstream out(path);
  require(out.good(), "cannot open for write: " + path);
  out << j.dump(2) << "\n";
  require(out.good(), "write failed: " + path);
}

// Camera at eye looking at target, world up (0,0,1) unless given.
inline Camera make_look_at_camera(const Vec3f& eye, const Vec3f& target,
                                  float fx, float fy, int width, int height,
                                  const Vec3f& up = Vec3f(0, 0, 1)) {
  Vec3f zc = (target - eye).normalized();
  Vec3f xc = zc.cross(up);
  require(xc.norm() > 1e-6f, "look direction parallel to up");
  xc.normalize();
  Vec3f yc = zc.cross(xc);
  Camera c;
  c.fx = fx;
  c.fy = fy;
  c.cx = width / 2.0f;
  c.cy = height / 2.0f;
  c.width = width;
  c.height = height;
  Mat3f r;
  r.row(0) = xc.transpose();
  r.row(1) = yc.transpose();
  r.row(2) = zc.transpose();
  c.world_to_camera.setIdentity();
  c.world_to_camera.block<3, 3>(0, 0) = r;
  c.world_to_camera.block<3, 1>(0, 3) = -r * eye;
  return c;
}

}  // namespace semsplat
