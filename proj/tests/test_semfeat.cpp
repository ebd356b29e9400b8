#include "helpers.hpp"
#include "semsplat/semfeat.hpp"

#include <Eigen/SVD>

using namespace semsplat;
using Catch::Approx;

namespace {

Tensor mask_from_string(int h, int w, const std::string& cells) {
  Tensor t = Tensor::zeros_u32({uint64_t(h), uint64_t(w)});
  REQUIRE(int(cells.size()) == h * w);
  for (int i = 0; i < h * w; ++i) t.u32[i] = cells[i] == '1' ? 1 : 0;
  return t;
}

// Brute-force precedence oracle: every pixel independently scans all masks,
// keeps the covering mask that sorts first by (area, input index) ascending,
// and reports one plus its sorted position.
Tensor overlap_oracle(const std::vector<Tensor>& masks, int h, int w) {
  const int n = int(masks.size());
  std::vector<size_t> areas(n);
  for (int i = 0; i < n; ++i)
    areas[i] = std::accumulate(masks[i].u32.begin(), masks[i].u32.end(),
                               size_t(0));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (areas[a] != areas[b]) return areas[a] < areas[b];
    return a < b;
  });
  std::vector<int> rank_of(n);
  for (int r = 0; r < n; ++r) rank_of[order[r]] = r;
  Tensor labels = Tensor::zeros_u32({uint64_t(h), uint64_t(w)});
  for (int p = 0; p < h * w; ++p) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (!masks[i].u32[p]) continue;
      if (best == -1 || rank_of[i] < rank_of[best]) best = i;
    }
    if (best >= 0) labels.u32[p] = uint32_t(rank_of[best]) + 1;
  }
  return labels;
}

}  // namespace

TEST_CASE("nearest-neighbour upsampling follows the floor rule") {
  SECTION("1x1 source broadcasts") {
    Tensor src = Tensor::zeros_f32({1, 1, 2});
    src.f32 = {3.0f, -1.0f};
    Tensor up = upsample_nearest(src, 4, 4);
    REQUIRE(up.dims == std::vector<uint64_t>{4, 4, 2});
    for (int p = 0; p < 16; ++p) {
      CHECK(up.f32[p * 2 + 0] == 3.0f);
      CHECK(up.f32[p * 2 + 1] == -1.0f);
    }
  }
  SECTION("2x2 source forms half-size blocks") {
    Tensor src = Tensor::zeros_f32({2, 2, 1});
    src.f32 = {1, 2, 3, 4};
    Tensor up = upsample_nearest(src, 4, 4);
    std::vector<float> expect = {1, 1, 2, 2, 1, 1, 2, 2,
                                 3, 3, 4, 4, 3, 3, 4, 4};
    CHECK(up.f32 == expect);
  }
  SECTION("3x3 source uses source index floor(out * in / out_size)") {
    Tensor src = Tensor::zeros_f32({3, 3, 1});
    src.f32 = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    Tensor up = upsample_nearest(src, 4, 4);
    // Rows/cols map 0,1,2,3 -> floor(i * 3 / 4) = 0,0,1,2.
    std::vector<float> expect = {1, 1, 2, 3, 1, 1, 2, 3,
                                 4, 4, 5, 6, 7, 7, 8, 9};
    CHECK(up.f32 == expect);
  }
  SECTION("general sizes agree with the direct index formula") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (auto [h, w, H, W] :
         {std::tuple{2, 3, 7, 9}, std::tuple{5, 4, 16, 16},
          std::tuple{3, 3, 3, 3}}) {
      Tensor src = Tensor::zeros_f32({uint64_t(h), uint64_t(w), 2});
      for (auto& v : src.f32) v = u(rng);
      Tensor up = upsample_nearest(src, H, W);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          int sy = y * h / H, sx = x * w / W;
          for (int c = 0; c < 2; ++c)
            CHECK(up.f32[(size_t(y) * W + x) * 2 + c] ==
                  src.f32[(size_t(sy) * w + sx) * 2 + c]);
        }
    }
  }
  SECTION("shrinking is rejected") {
    Tensor src = Tensor::zeros_f32({4, 4, 1});
    REQUIRE_THROWS(upsample_nearest(src, 2, 4));
  }
}

TEST_CASE("mask precedence gives smaller masks the win") {
  // A 3x4 image: a large L-shaped mask and a small 2-pixel mask that
  // overlaps it. The small mask sorts first, so it takes labels 1.
  Tensor big = mask_from_string(3, 4,
                                "1110"
                                "1110"
                                "0000");
  Tensor small = mask_from_string(3, 4,
                                  "0000"
                                  "0110"
                                  "0000");
  MaskSet set = make_mask_set({big, small});
  Tensor labels = resolve_mask_overlaps(set);
  std::vector<uint32_t> expect = {2, 2, 2, 0,
                                  2, 1, 1, 0,
                                  0, 0, 0, 0};
  CHECK(labels.u32 == expect);

  SECTION("equal areas break ties by input order") {
    Tensor a = mask_from_string(3, 4,
                                "1100"
                                "0000"
                                "0000");
    Tensor b = mask_from_string(3, 4,
                                "1100"
                                "0000"
                                "0000");
    Tensor lab = resolve_mask_overlaps(make_mask_set({a, b}));
    // Both cover the same two pixels; the first input wins with label 1.
    CHECK(lab.u32[0] == 1);
    CHECK(lab.u32[1] == 1);
  }
}

TEST_CASE("mask precedence agrees with the brute-force oracle") {
  std::mt19937 rng(22);
  std::uniform_int_distribution<int> n_masks(1, 8);
  std::uniform_int_distribution<int> coord(0, 15);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int trial = 0; trial < 200; ++trial) {
    int n = n_masks(rng);
    std::vector<Tensor> masks;
    for (int i = 0; i < n; ++i) {
      Tensor m = Tensor::zeros_u32({16, 16});
      // A random rectangle (possibly empty) plus salt noise produces
      // overlapping masks with frequent exact-area ties.
      int x0 = coord(rng), x1 = coord(rng), y0 = coord(rng), y1 = coord(rng);
      if (x1 < x0) std::swap(x0, x1);
      if (y1 < y0) std::swap(y0, y1);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) m.u32[size_t(y) * 16 + x] = 1;
      if (u(rng) < 0.3f)
        for (int s = 0; s < 5; ++s)
          m.u32[size_t(coord(rng)) * 16 + coord(rng)] = 1;
      masks.push_back(std::move(m));
    }
    Tensor expect = overlap_oracle(masks, 16, 16);
    Tensor got = resolve_mask_overlaps(make_mask_set(masks));
    REQUIRE(got.u32 == expect.u32);
  }

  SECTION("masks without any pixel are rejected up front") {
    Tensor empty = Tensor::zeros_u32({16, 16});
    REQUIRE_THROWS_WITH(make_mask_set({empty}),
                        Catch::Matchers::ContainsSubstring("empty mask"));
  }
}

TEST_CASE("per-mask feature averaging matches a naive loop") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  const int h = 12, w = 10, c = 6, n_labels = 4;
  Tensor features = Tensor::zeros_f32({uint64_t(h), uint64_t(w), uint64_t(c)});
  for (auto& v : features.f32) v = u(rng);
  Tensor labels = Tensor::zeros_u32({uint64_t(h), uint64_t(w)});
  std::uniform_int_distribution<uint32_t> lab(0, n_labels);
  for (auto& v : labels.u32) v = lab(rng);
  // Guarantee label 3 is empty to exercise the zero-row path.
  for (auto& v : labels.u32)
    if (v == 3) v = 0;

  RowMatf got = average_features_per_mask(features, labels, n_labels);
  REQUIRE(got.rows() == n_labels);
  REQUIRE(got.cols() == c);

  for (int l = 1; l <= n_labels; ++l) {
    std::vector<double> sum(c, 0.0);
    size_t count = 0;
    for (int p = 0; p < h * w; ++p) {
      if (labels.u32[p] != uint32_t(l)) continue;
      for (int ch = 0; ch < c; ++ch) sum[ch] += features.f32[size_t(p) * c + ch];
      ++count;
    }
    for (int ch = 0; ch < c; ++ch) {
      double expect = count ? sum[ch] / double(count) : 0.0;
      CHECK(double(got(l - 1, ch)) == Approx(expect).margin(1e-6));
    }
  }
}

TEST_CASE("pca mean and orthonormal sign-fixed basis") {
  std::mt19937 rng(24);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  RowMatf rows(40, 7);
  for (int i = 0; i < rows.size(); ++i) rows.data()[i] = u(rng);
  PcaModel m = pca_fit(rows, 4);
  CHECK(m.input_dim == 7);
  CHECK(m.components == 4);

  Eigen::VectorXf mean = rows.colwise().mean();
  for (int c = 0; c < 7; ++c)
    CHECK(m.mean[c] == Approx(mean[c]).margin(1e-6));

  RowMatf gram = m.basis * m.basis.transpose();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(double(gram(i, j)) == Approx(i == j ? 1.0 : 0.0).margin(1e-5));

  for (int i = 0; i < 4; ++i) {
    int arg = 0;
    m.basis.row(i).cwiseAbs().maxCoeff(&arg);
    CHECK(m.basis(i, arg) > 0.0f);
  }

  for (int i = 1; i < 4; ++i)
    CHECK(m.explained_variance[i] <= m.explained_variance[i - 1] + 1e-7f);

  SECTION("component count above min(samples, dim) is rejected") {
    REQUIRE_THROWS_WITH(pca_fit(rows, 8),
                        Catch::Matchers::ContainsSubstring("component"));
    RowMatf tiny(3, 7);
    tiny.setZero();
    REQUIRE_THROWS(pca_fit(tiny, 4));
  }
}

TEST_CASE("pca recovers a two-dimensional plane exactly") {
  std::mt19937 rng(25);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  // Points x = o + a*d1 + b*d2 embedded in 6 dimensions.
  Eigen::VectorXf o(6), d1(6), d2(6);
  o << 0.5f, -0.2f, 0.1f, 0.0f, 0.3f, -0.4f;
  d1 << 1, 2, 0, -1, 0.5f, 0;
  d2 << 0, -1, 1, 0.5f, 2, 1;
  RowMatf rows(30, 6);
  for (int i = 0; i < 30; ++i)
    rows.row(i) = (o + u(rng) * d1 + u(rng) * d2).transpose();
  PcaModel m = pca_fit(rows, 2);
  RowMatf recon = pca_unproject(m, pca_project(m, rows));
  CHECK((recon - rows).cwiseAbs().maxCoeff() < 1e-5f);
  // Third component of a rank-2 cloud carries no variance.
  PcaModel m3 = pca_fit(rows, 3);
  CHECK(m3.explained_variance[2] < 1e-6f);
}

TEST_CASE("pca with full components is the identity") {
  std::mt19937 rng(26);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  RowMatf rows(25, 5);
  for (int i = 0; i < rows.size(); ++i) rows.data()[i] = u(rng);
  PcaModel m = pca_fit(rows, 5);
  RowMatf recon = pca_unproject(m, pca_project(m, rows));
  CHECK((recon - rows).cwiseAbs().maxCoeff() < 1e-5f);
}

TEST_CASE("pca reconstruction error equals the singular value tail energy") {
  std::mt19937 rng(27);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  RowMatf rows(100, 32);
  for (int i = 0; i < rows.size(); ++i) rows.data()[i] = u(rng);
  const int k = 8;
  PcaModel m = pca_fit(rows, k);
  RowMatf recon = pca_unproject(m, pca_project(m, rows));
  double err = (recon - rows).cast<double>().squaredNorm();

  RowMatd centered = rows.cast<double>();
  centered.rowwise() -= centered.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  double tail = 0;
  for (int i = k; i < svd.singularValues().size(); ++i)
    tail += svd.singularValues()[i] * svd.singularValues()[i];
  CHECK(std::abs(err - tail) / tail < 1e-4);
}

TEST_CASE("pca projection geometry") {
  std::mt19937 rng(28);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  RowMatf rows(20, 6);
  for (int i = 0; i < rows.size(); ++i) rows.data()[i] = u(rng);
  PcaModel m = pca_fit(rows, 3);

  // The mean itself projects to the origin.
  RowMatf mean_row(1, 6);
  mean_row.row(0) = m.mean.transpose();
  RowMatf at_mean = pca_project(m, mean_row);
  CHECK(at_mean.cwiseAbs().maxCoeff() < 1e-6f);

  // Orthogonal projection never lengthens a centered vector.
  RowMatf proj = pca_project(m, rows);
  for (int i = 0; i < rows.rows(); ++i) {
    double centered =
        (rows.row(i) - m.mean.transpose()).cast<double>().norm();
    CHECK(double(proj.row(i).norm()) <= centered + 1e-5);
  }

  SECTION("dimension mismatches are rejected") {
    RowMatf bad(2, 5);
    bad.setZero();
    REQUIRE_THROWS(pca_project(m, bad));
    REQUIRE_THROWS(pca_unproject(m, bad.leftCols(4)));
  }
}

TEST_CASE("target maps place compressed rows at labeled pixels only") {
  Tensor labels = Tensor::zeros_u32({2, 3});
  labels.u32 = {0, 1, 2, 2, 0, 1};
  RowMatf rows(2, 2);
  rows << 10, 11, 20, 21;
  Tensor t = build_target_map(labels, rows);
  REQUIRE(t.dims == std::vector<uint64_t>{2, 3, 2});
  std::vector<float> expect = {0, 0, 10, 11, 20, 21, 20, 21, 0, 0, 10, 11};
  CHECK(t.f32 == expect);
}

TEST_CASE("feature bundle wires labels, compression and targets together") {
  std::mt19937 rng(29);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const int H = 12, W = 12, C = 8, k = 3;

  std::vector<Tensor> fmaps;
  std::vector<MaskSet> msets;
  for (int v = 0; v < 2; ++v) {
    Tensor fm = Tensor::zeros_f32({6, 6, C});  // lower-res than the image
    for (auto& x : fm.f32) x = u(rng);
    fmaps.push_back(std::move(fm));
    Tensor m1 = Tensor::zeros_u32({uint64_t(H), uint64_t(W)});
    Tensor m2 = Tensor::zeros_u32({uint64_t(H), uint64_t(W)});
    for (int y = 1; y < 6; ++y)
      for (int x = 1; x < 6; ++x) m1.u32[size_t(y) * W + x] = 1;
    for (int y = 4; y < 11; ++y)
      for (int x = 6; x < 11; ++x) m2.u32[size_t(y) * W + x] = 1;
    msets.push_back(make_mask_set({m1, m2}));
  }

  FeatureBundle bundle = build_feature_bundle(fmaps, msets, H, W, k);
  CHECK(bundle.raw_dim == C);
  CHECK(bundle.compressed_dim == k);
  CHECK(bundle.pca.input_dim == C);
  CHECK(bundle.pca.components == k);
  REQUIRE(bundle.views.size() == 2);

  for (const auto& vs : bundle.views) {
    REQUIRE(vs.mask_count == 2);
    CHECK(vs.raw_rows.rows() == 2);
    CHECK(vs.raw_rows.cols() == C);
    CHECK(vs.pca_rows.rows() == 2);
    CHECK(vs.pca_rows.cols() == k);
    REQUIRE(vs.target_map.dims ==
            std::vector<uint64_t>{uint64_t(H), uint64_t(W), uint64_t(k)});
    // The compressed rows are the projection of the raw rows.
    RowMatf expect = pca_project(bundle.pca, vs.raw_rows);
    CHECK((vs.pca_rows - expect).cwiseAbs().maxCoeff() < 1e-6f);
    // Spot-check target placement across every pixel.
    for (int p = 0; p < H * W; ++p) {
      uint32_t l = vs.labels.u32[p];
      for (int c = 0; c < k; ++c) {
        float want = l == 0 ? 0.0f : vs.pca_rows(int(l) - 1, c);
        REQUIRE(vs.target_map.f32[size_t(p) * k + c] == want);
      }
    }
  }
}
