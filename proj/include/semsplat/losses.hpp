// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "semsplat/raster.hpp"
#include "semsplat/tensor.hpp"

namespace semsplat {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

namespace detail {

inline const std::array<double, kSsimWindow>& ssim_taps() {
  static const std::array<double, kSsimWindow> taps = [] {
    std::array<double, kSsimWindow> t{};
    double sum = 0;
    for (int i = 0; i < kSsimWindow; ++i) {
      double d = i - (kSsimWindow - 1) / 2.0;
      t[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
      sum += t[i];
    }
    for (auto& v : t) v /= sum;
    return t;
  }();
  return taps;
}

// Separable valid-region convolution. in is h x w; out is vh x vw with
// vh = h - 10, vw = w - 10, out(y, x) centered at in(y + 5, x + 5).
inline void conv_valid(const std::vector<double>& in, int h, int w,
                       std::vector<double>& tmp, std::vector<double>& out) {
  const auto& taps = ssim_taps();
  const int r = kSsimWindow / 2;
  const int vw = w - 2 * r, vh = h - 2 * r;
  tmp.assign(size_t(h) * vw, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < vw; ++x) {
      double acc = 0;
      for (int t = 0; t < kSsimWindow; ++t) acc += taps[t] * in[y * w + x + t];
      tmp[y * vw + x] = acc;
    }
  out.assign(size_t(vh) * vw, 0.0);
  for (int y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      double acc = 0;
      for (int t = 0; t < kSsimWindow; ++t)
        acc += taps[t] * tmp[(y + t) * vw + x];
      out[y * vw + x] = acc;
    }
}

// Adjoint of conv_valid: spreads window-center values back onto the full
// image grid.
inline void conv_valid_adjoint(const std::vector<double>& s, int h, int w,
                               std::vector<double>& tmp,
                               std::vector<double>& out) {
  const auto& taps = ssim_taps();
  const int r = kSsimWindow / 2;
  const int vw = w - 2 * r, vh = h - 2 * r;
  tmp.assign(size_t(h) * vw, 0.0);
  for (int y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      double v = s[y * vw + x];
      if (v == 0) continue;
      for (int t = 0; t < kSsimWindow; ++t) tmp[(y + t) * vw + x] += taps[t] * v;
    }
  out.assign(size_t(h) * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < vw; ++x) {
      double v = tmp[y * vw + x];
      if (v == 0) continue;
      for (int t = 0; t < kSsimWindow; ++t) out[y * w + x + t] += taps[t] * v;
    }
}

}  // namespace detail

// Mean structural similarity over all windows fully inside the image,
// averaged over channels. Internally double precision. When grad_a is
// given it receives d(mean ssim)/d(a) scaled by grad_scale, accumulated.
template <typename S>
inline double ssim(const S* a, const S* b, int h, int w, int channels,
                   std::vector<S>* grad_a = nullptr, double grad_scale = 1.0) {
  require(h >= kSsimWindow && w >= kSsimWindow, "ssim window exceeds image");
  const int r = kSsimWindow / 2;
  const int vw = w - 2 * r, vh = h - 2 * r;
  const size_t n_win = size_t(vh) * vw * channels;
  std::vector<double> ca(size_t(h) * w), cb(size_t(h) * w),
      caa(size_t(h) * w), cbb(size_t(h) * w), cab(size_t(h) * w);
  std::vector<double> tmp, m_a, m_b, m_aa, m_bb, m_ab;
  std::vector<double> coef_a, coef_aa, coef_ab, back, back2;
  double total = 0;
  if (grad_a) grad_a->resize(size_t(h) * w * channels, S(0));
  for (int ch = 0; ch < channels; ++ch) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double va = double(a[(size_t(y) * w + x) * channels + ch]);
        double vb = double(b[(size_t(y) * w + x) * channels + ch]);
        size_t i = size_t(y) * w + x;
        ca[i] = va;
        cb[i] = vb;
        caa[i] = va * va;
        cbb[i] = vb * vb;
        cab[i] = va * vb;
      }
    detail::conv_valid(ca, h, w, tmp, m_a);
    detail::conv_valid(cb, h, w, tmp, m_b);
    detail::conv_valid(caa, h, w, tmp, m_aa);
    detail::conv_valid(cbb, h, w, tmp, m_bb);
    detail::conv_valid(cab, h, w, tmp, m_ab);
    if (grad_a) {
      coef_a.assign(size_t(vh) * vw, 0.0);
      coef_aa.assign(size_t(vh) * vw, 0.0);
      coef_ab.assign(size_t(vh) * vw, 0.0);
    }
    for (size_t i = 0; i < size_t(vh) * vw; ++i) {
      double mu_a = m_a[i], mu_b = m_b[i];
      double var_a = m_aa[i] - mu_a * mu_a;
      double var_b = m_bb[i] - mu_b * mu_b;
      double cov = m_ab[i] - mu_a * mu_b;
      double a1 = 2 * mu_a * mu_b + kSsimC1;
      double a2 = 2 * cov + kSsimC2;
      double b1 = mu_a * mu_a + mu_b * mu_b + kSsimC1;
      double b2 = var_a + var_b + kSsimC2;
      double s_val = (a1 * a2) / (b1 * b2);
      total += s_val;
      if (grad_a) {
        double ds_dmu_a = 2 * mu_b * a2 / (b1 * b2) - 2 * mu_a * s_val / b1;
        double ds_dvar_a = -s_val / b2;
        double ds_dcov = 2 * a1 / (b1 * b2);
        coef_a[i] = ds_dmu_a - 2 * mu_a * ds_dvar_a - mu_b * ds_dcov;
        coef_aa[i] = ds_dvar_a;
        coef_ab[i] = ds_dcov;
      }
    }
    if (grad_a) {
      double scale = grad_scale / double(n_win);
      detail::conv_valid_adjoint(coef_a, h, w, tmp, back);
      for (size_t i = 0; i < back.size(); ++i)
        (*grad_a)[i * channels + ch] += S(back[i] * scale);
      detail::conv_valid_adjoint(coef_aa, h, w, tmp, back);
      for (size_t i = 0; i < back.size(); ++i)
        (*grad_a)[i * channels + ch] += S(2.0 * ca[i] * back[i] * scale);
      detail::conv_valid_adjoint(coef_ab, h, w, tmp, back2);
      for (size_t i = 0; i < back2.size(); ++i)
        (*grad_a)[i * channels + ch] += S(cb[i] * back2[i] * scale);
    }
  }
  return total / double(n_win);
}

template <typename S>
inline double l1(const S* a, const S* b, size_t n) {
  require(n > 0, "l1 over empty range");
  double acc = 0;
  for (size_t i = 0; i < n; ++i) acc += std::abs(double(a[i]) - double(b[i]));
  return acc / double(n);
}

struct LossBreakdown {
  double l1_rgb = 0;
  double dssim = 0;
  double l1_sem = 0;
  double total = 0;
  size_t labeled_pixels = 0;
};

// Weighted combination used for the training objective.
inline double combine_losses(double l1_rgb, double dssim, double l1_sem,
                             double l1_weight, double sem_weight) {
  return (1.0 - l1_weight) * l1_rgb + l1_weight * dssim +
         sem_weight * l1_sem;
}

// L = (1 - l1_weight) L1_rgb + l1_weight DSSIM + sem_weight L1_sem, where
// the semantic term averages only over pixels with a non-zero label.
// d_rgb / d_feature receive dL/d(render) and are overwritten.
template <typename S>
inline LossBreakdown total_loss(const RenderOutputT<S>& r,
                                const Tensor& gt_rgb,
                                const Tensor* target_feature,
                                const Tensor* labels, double l1_weight,
                                double sem_weight, std::vector<S>& d_rgb,
                                std::vector<S>& d_feature) {
  const int h = r.height, w = r.width, k = r.feature_dim;
  require(gt_rgb.dtype == DType::F32 && gt_rgb.rank() == 3 &&
              int(gt_rgb.dims[0]) == h && int(gt_rgb.dims[1]) == w &&
              gt_rgb.dims[2] == 3,
          "ground truth image shape mismatch");
  LossBreakdown out;
  const size_t n_rgb = size_t(h) * w * 3;
  d_rgb.assign(n_rgb, S(0));
  d_feature.assign(size_t(h) * w * k, S(0));

  double acc = 0;
  for (size_t i = 0; i < n_rgb; ++i) {
    double diff = double(r.rgb[i]) - double(gt_rgb.f32[i]);
    acc += std::abs(diff);
    double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
    d_rgb[i] = S((1.0 - l1_weight) * sgn / double(n_rgb));
  }
  out.l1_rgb = acc / double(n_rgb);

  std::vector<S> ssim_grad(n_rgb, S(0));
  double mean_ssim =
      ssim(r.rgb.data(), gt_rgb.f32.data(), h, w, 3, &ssim_grad,
           -0.5 * l1_weight);
  out.dssim = (1.0 - mean_ssim) / 2.0;
  for (size_t i = 0; i < n_rgb; ++i) d_rgb[i] += ssim_grad[i];

  if (target_feature && labels) {
    require(target_feature->dtype == DType::F32 &&
                target_feature->rank() == 3 &&
                int(target_feature->dims[0]) == h &&
                int(target_feature->dims[1]) == w &&
                int(target_feature->dims[2]) == k,
            "semantic target shape mismatch");
    require(labels->dtype == DType::U32 && labels->rank() == 2 &&
                int(labels->dims[0]) == h && int(labels->dims[1]) == w,
            "label map shape mismatch");
    size_t labeled = 0;
    for (size_t i = 0; i < size_t(h) * w; ++i)
      if (labels->u32[i] != 0) ++labeled;
    out.labeled_pixels = labeled;
    if (labeled > 0) {
      double sem_acc = 0;
      const double denom = double(labeled) * k;
      for (size_t i = 0; i < size_t(h) * w; ++i) {
        if (labels->u32[i] == 0) continue;
        for (int c = 0; c < k; ++c) {
          double diff = double(r.feature[i * k + c]) -
                        double(target_feature->f32[i * k + c]);
          sem_acc += std::abs(diff);
          double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
          d_feature[i * k + c] = S(sem_weight * sgn / denom);
        }
      }
      out.l1_sem = sem_acc / denom;
    }
  }
  out.total =
      combine_losses(out.l1_rgb, out.dssim, out.l1_sem, l1_weight, sem_weight);
  return out;
}

// Peak signal-to-noise ratio for [0, 1] images, capped at 100 dB.
template <typename S>
inline double psnr(const S* a, const S* b, size_t n) {
  require(n > 0, "psnr over empty range");
  double acc = 0;
  for (size_t i = 0; i < n; ++i) {
    double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  double mse = acc / double(n);
  if (mse <= 0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

inline double psnr(const Tensor& a, const Tensor& b) {
  require(a.dims == b.dims && a.dtype == DType::F32 && b.dtype == DType::F32,
          "psnr shape mismatch");
  return psnr(a.f32.data(), b.f32.data(), a.f32.size());
}

}  // namespace semsplat
