// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Eigenvalues>

#include "semsplat/math.hpp"

namespace semsplat {

// Linear compressor for high-dimensional semantic vectors. Fit runs in
// double regardless of the working scalar; basis rows are orthonormal,
// ordered by decreasing explained variance, and sign-fixed so the largest
// magnitude entry of each row is positive.
struct PcaModel {
  Eigen::VectorXf mean;               // C
  RowMatf basis;                      // k x C
  Eigen::VectorXf explained_variance; // k, non-increasing
  int input_dim = 0;
  int components = 0;
};

inline PcaModel pca_fit(const RowMatf& rows, int k) {
  const int n = static_cast<int>(rows.rows());
  const int c = static_cast<int>(rows.cols());
  require(n >= 1 && c >= 1, "pca: empty input");
  require(k >= 1 && k <= std::min(n, c),
          "pca: component count exceeds min(samples, dim)");
  RowMatd x = rows.cast<double>();
  Eigen::VectorXd mean = x.colwise().mean();
  x.rowwise() -= mean.transpose();
  Eigen::MatrixXd cov = x.transpose() * x;
  if (n > 1) cov /= double(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  require(es.info() == Eigen::Success, "pca: eigensolver failed");
  PcaModel m;
  m.input_dim = c;
  m.components = k;
  m.mean = mean.cast<float>();
  m.basis.resize(k, c);
  m.explained_variance.resize(k);
  // Eigen returns ascending eigenvalues; take the top k reversed.
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd v = es.eigenvectors().col(c - 1 - i);
    int arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    m.basis.row(i) = v.cast<float>().transpose();
    m.explained_variance[i] =
        static_cast<float>(std::max(0.0, es.eigenvalues()[c - 1 - i]));
  }
  return m;
}

inline RowMatf pca_project(const PcaModel& m, const RowMatf& rows) {
  require(static_cast<int>(rows.cols()) == m.input_dim,
          "pca: input dimension mismatch");
  RowMatd x = rows.cast<double>();
  x.rowwise() -= m.mean.cast<double>().transpose();
  RowMatd out = x * m.basis.cast<double>().transpose();
  return out.cast<float>();
}

inline RowMatf pca_unproject(const PcaModel& m, const RowMatf& rows) {
  require(static_cast<int>(rows.cols()) == m.components,
          "pca: compressed dimension mismatch");
  RowMatd out = rows.cast<double>() * m.basis.cast<double>();
  out.rowwise() += m.mean.cast<double>().transpose();
  return out.cast<float>();
}

inline Eigen::VectorXf pca_project_vec(const PcaModel& m,
                                       const Eigen::VectorXf& v) {
  RowMatf row(1, v.size());
  row.row(0) = v.transpose();
  return pca_project(m, row).row(0).transpose();
}

}  // namespace semsplat
