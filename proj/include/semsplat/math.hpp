// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>

#include "semsplat/common.hpp"

namespace semsplat {

template <typename S>
using Vec2 = Eigen::Matrix<S, 2, 1>;
template <typename S>
using Vec3 = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Vec4 = Eigen::Matrix<S, 4, 1>;
template <typename S>
using Mat2 = Eigen::Matrix<S, 2, 2>;
template <typename S>
using Mat3 = Eigen::Matrix<S, 3, 3>;
template <typename S>
using Mat4 = Eigen::Matrix<S, 4, 4>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using RowMat =
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vec2f = Vec2<float>;
using Vec3f = Vec3<float>;
using Vec4f = Vec4<float>;
using Mat3f = Mat3<float>;
using RowMatf = RowMat<float>;
using RowMatd = RowMat<double>;

// Quaternions are stored (w, x, y, z).
template <typename S>
inline Mat3<S> quat_to_rotation(const Vec4<S>& q_in) {
  S n = q_in.norm();
  if (!(n > S(1e-12))) fail("degenerate rotation");
  Vec4<S> q = q_in / n;
  S w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3<S> r;
  r(0, 0) = 1 - 2 * (y * y + z * z);
  r(0, 1) = 2 * (x * y - w * z);
  r(0, 2) = 2 * (x * z + w * y);
  r(1, 0) = 2 * (x * y + w * z);
  r(1, 1) = 1 - 2 * (x * x + z * z);
  r(1, 2) = 2 * (y * z - w * x);
  r(2, 0) = 2 * (x * z - w * y);
  r(2, 1) = 2 * (y * z + w * x);
  r(2, 2) = 1 - 2 * (x * x + y * y);
  return r;
}

// d(rotation)/d(unit quaternion component), evaluated at unit q.
template <typename S>
inline std::array<Mat3<S>, 4> quat_rotation_jacobians(const Vec4<S>& q) {
  S w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Mat3<S>, 4> d;
  d[0] << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
  d[1] << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
  d[2] << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
  d[3] << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;
  return d;
}

// Pulls dL/d(unit q) back through q_hat = q / |q|.
template <typename S>
inline Vec4<S> quat_normalize_backward(const Vec4<S>& q_raw,
                                       const Vec4<S>& d_unit) {
  S n = q_raw.norm();
  Vec4<S> q = q_raw / n;
  return (d_unit - q * q.dot(d_unit)) / n;
}

template <typename S>
inline Vec4<S> quat_multiply(const Vec4<S>& a, const Vec4<S>& b) {
  Vec4<S> r;
  r[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
  r[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2];
  r[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1];
  r[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0];
  return r;
}

// dL/da for c = a * b given dL/dc.
template <typename S>
inline Vec4<S> quat_multiply_backward_left(const Vec4<S>& b,
                                           const Vec4<S>& dc) {
  Vec4<S> da;
  da[0] = b[0] * dc[0] + b[1] * dc[1] + b[2] * dc[2] + b[3] * dc[3];
  da[1] = -b[1] * dc[0] + b[0] * dc[1] - b[3] * dc[2] + b[2] * dc[3];
  da[2] = -b[2] * dc[0] + b[3] * dc[1] + b[0] * dc[2] - b[1] * dc[3];
  da[3] = -b[3] * dc[0] - b[2] * dc[1] + b[1] * dc[2] + b[0] * dc[3];
  return da;
}

template <typename S>
inline Vec4<S> quat_from_axis_angle(const Vec3<S>& aa) {
  S a = aa.norm();
  S half = a / 2;
  // sin(a/2)/a, series below the switch point to stay smooth at zero.
  S s = (a < S(1e-4)) ? S(0.5) - a * a / S(48) : std::sin(half) / a;
  Vec4<S> q;
  q[0] = std::cos(half);
  q[1] = s * aa[0];
  q[2] = s * aa[1];
  q[3] = s * aa[2];
  return q;
}

// d(quat_from_axis_angle)/d(axis angle), 4x3.
template <typename S>
inline Eigen::Matrix<S, 4, 3> quat_from_axis_angle_jacobian(
    const Vec3<S>& aa) {
  S a = aa.norm();
  S half = a / 2;
  S s, sp_over_a;
  if (a < S(1e-4)) {
    s = S(0.5) - a * a / S(48);
    sp_over_a = S(-1) / S(24);
  } else {
    s = std::sin(half) / a;
    S sp = (a * std::cos(half) / 2 - std::sin(half)) / (a * a);
    sp_over_a = sp / a;
  }
  Eigen::Matrix<S, 4, 3> j;
  for (int c = 0; c < 3; ++c) j(0, c) = -s / 2 * aa[c];
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c)
      j(i + 1, c) = s * (i == c ? S(1) : S(0)) + aa[i] * aa[c] * sp_over_a;
  return j;
}

template <typename S>
inline Mat3<S> rotation_from_axis_angle(const Vec3<S>& aa) {
  return quat_to_rotation(quat_from_axis_angle(aa));
}

// dR/d(axis angle component) for all three components.
template <typename S>
inline std::array<Mat3<S>, 3> rotation_axis_angle_jacobians(
    const Vec3<S>& aa) {
  Vec4<S> q = quat_from_axis_angle(aa);
  auto dq = quat_rotation_jacobians(q);
  auto jq = quat_from_axis_angle_jacobian(aa);
  std::array<Mat3<S>, 3> out;
  for (int c = 0; c < 3; ++c) {
    out[c].setZero();
    for (int d = 0; d < 4; ++d) out[c] += dq[d] * jq(d, c);
  }
  return out;
}

// Sigma = R S S R^T with S = diag(scale).
template <typename S>
inline Mat3<S> covariance_3d(const Vec3<S>& scale, const Vec4<S>& quat) {
  for (int i = 0; i < 3; ++i)
    if (!(scale[i] > S(0))) fail("non-positive scale");
  Mat3<S> r = quat_to_rotation(quat);
  Mat3<S> m = r * scale.asDiagonal();
  return m * m.transpose();
}

}  // namespace semsplat
