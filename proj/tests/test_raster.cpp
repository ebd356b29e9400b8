#include "helpers.hpp"
#include "semsplat/raster.hpp"

using namespace semsplat;
using Catch::Approx;

namespace {

// Scene with a single splat placed in camera space (identity pose camera).
Scene one_splat_scene(const Vec3f& pos, float log_scale, float opacity_logit,
                      const Vec3f& color, int k = 2) {
  Scene s;
  s.init(1, k);
  s.positions.row(0) = pos.transpose();
  s.log_scales.row(0).setConstant(log_scale);
  s.rotations.row(0) << 1, 0, 0, 0;
  s.opacity_logits[0] = opacity_logit;
  s.colors.row(0) = color.transpose();
  s.pca = testutil::identity_pca(k);
  return s;
}

float logit(float p) { return std::log(p / (1.0f - p)); }

}  // namespace

TEST_CASE("projection places an on-axis gaussian at the principal point") {
  Camera cam = testutil::test_camera(16, 16, 100.0f);
  Scene s = one_splat_scene(Vec3f(0, 0, 2), std::log(0.05f), 0.0f,
                            Vec3f(1, 0, 0));
  auto splats = detail::project_and_prepare<float>(s, cam, nullptr, nullptr);
  REQUIRE(splats.size() == 1);
  CHECK(splats[0].mx == Approx(cam.cx).margin(1e-5));
  CHECK(splats[0].my == Approx(cam.cy).margin(1e-5));
  CHECK(splats[0].depth == Approx(2.0f));
}

TEST_CASE("projection culls gaussians behind the near plane") {
  Camera cam = testutil::test_camera(16, 16);
  Scene s = one_splat_scene(Vec3f(0, 0, -2), std::log(0.05f), 0.0f,
                            Vec3f(1, 0, 0));
  auto splats = detail::project_and_prepare<float>(s, cam, nullptr, nullptr);
  CHECK(splats.empty());
  Scene s2 = one_splat_scene(Vec3f(0, 0, 0.009f), std::log(0.05f), 0.0f,
                             Vec3f(1, 0, 0));
  CHECK(detail::project_and_prepare<float>(s2, cam, nullptr, nullptr).empty());
}

TEST_CASE("on-axis isotropic gaussian projects to (fx*s/z)^2 I before dilation") {
  const float fx = 100.0f, s_world = 0.04f, z = 2.5f;
  Camera cam = testutil::test_camera(32, 32, fx);
  Scene s = one_splat_scene(Vec3f(0, 0, z), std::log(s_world), 0.0f,
                            Vec3f(1, 0, 0));
  auto splats = detail::project_and_prepare<float>(s, cam, nullptr, nullptr);
  REQUIRE(splats.size() == 1);
  // The prepared splat stores the conic of the dilated covariance; invert
  // and remove the +0.3 diagonal term to recover the raw projection.
  const auto& ps = splats[0];
  float det_conic = ps.c00 * ps.c11 - ps.c01 * ps.c01;
  REQUIRE(det_conic > 0);
  float cov00 = ps.c11 / det_conic - 0.3f;
  float cov11 = ps.c00 / det_conic - 0.3f;
  float cov01 = -ps.c01 / det_conic;
  const float expected = (fx * s_world / z) * (fx * s_world / z);
  CHECK(cov00 == Approx(expected).epsilon(1e-4));
  CHECK(cov11 == Approx(expected).epsilon(1e-4));
  CHECK(cov01 == Approx(0.0f).margin(1e-4 * expected));
}

TEST_CASE("single saturated splat composites to 0.99 of its color") {
  Camera cam = testutil::test_camera(16, 16);
  // Position chosen so the mean lands exactly on the center of pixel (7,7).
  const float z = 2.0f;
  const float px = (7.5f - cam.cx) / cam.fx * z;
  const float py = (7.5f - cam.cy) / cam.fy * z;
  Scene s = one_splat_scene(Vec3f(px, py, z), std::log(0.08f), 30.0f,
                            Vec3f(1, 0, 0));
  RenderOutput out = render(s, cam);
  size_t pix = 7 * 16 + 7;
  CHECK(out.rgb[pix * 3 + 0] == Approx(0.99f).margin(1e-6));
  CHECK(out.rgb[pix * 3 + 1] == Approx(0.0f).margin(1e-7));
  CHECK(out.rgb[pix * 3 + 2] == Approx(0.0f).margin(1e-7));
  CHECK(out.alpha[pix] == Approx(0.99f).margin(1e-6));
}

TEST_CASE("two centered splats composite rgb and features identically") {
  Camera cam = testutil::test_camera(16, 16);
  const float z1 = 2.0f, z2 = 3.0f;
  auto at_pixel_center = [&](float z) {
    return Vec3f((7.5f - cam.cx) / cam.fx * z, (7.5f - cam.cy) / cam.fy * z,
                 z);
  };
  Scene s;
  s.init(2, 2);
  s.positions.row(0) = at_pixel_center(z1).transpose();
  s.positions.row(1) = at_pixel_center(z2).transpose();
  s.log_scales.row(0).setConstant(std::log(0.08f));
  s.log_scales.row(1).setConstant(std::log(0.12f));
  s.rotations << 1, 0, 0, 0, 1, 0, 0, 0;
  s.opacity_logits[0] = logit(0.5f);  // front, red
  s.opacity_logits[1] = 30.0f;        // back, saturates to the 0.99 clamp
  s.colors.row(0) << 1, 0, 0;
  s.colors.row(1) << 0, 0, 1;
  s.features.row(0) << 1, 0;  // e1
  s.features.row(1) << 0, 1;  // e2
  s.pca = testutil::identity_pca(2);

  RenderOutput out = render(s, cam);
  size_t pix = 7 * 16 + 7;
  // Front contributes a=0.5; behind it T=0.5 and the clamped a=0.99.
  CHECK(out.rgb[pix * 3 + 0] == Approx(0.5f).margin(2e-6));
  CHECK(out.rgb[pix * 3 + 1] == Approx(0.0f).margin(1e-7));
  CHECK(out.rgb[pix * 3 + 2] == Approx(0.495f).margin(2e-6));
  CHECK(out.feature[pix * 2 + 0] == Approx(0.5f).margin(2e-6));
  CHECK(out.feature[pix * 2 + 1] == Approx(0.495f).margin(2e-6));
  CHECK(out.alpha[pix] == Approx(1.0f - 0.5f * 0.01f).margin(2e-6));

  SECTION("subset of the front splat alone") {
    RenderOutput front = render_subset(s, cam, {0});
    CHECK(front.rgb[pix * 3 + 0] == Approx(0.5f).margin(2e-6));
    CHECK(front.rgb[pix * 3 + 2] == Approx(0.0f).margin(1e-7));
    CHECK(front.feature[pix * 2 + 1] == Approx(0.0f).margin(1e-7));
  }
  SECTION("subset of everything is bit-identical to render") {
    RenderOutput all = render_subset(s, cam, {0, 1});
    RenderOutput full = render(s, cam);
    CHECK(all.rgb == full.rgb);
    CHECK(all.feature == full.feature);
    CHECK(all.alpha == full.alpha);
    CHECK(all.depth == full.depth);
  }
  SECTION("empty subset renders black with zero alpha") {
    RenderOutput none = render_subset(s, cam, {});
    for (float v : none.rgb) CHECK(v == 0.0f);
    for (float v : none.alpha) CHECK(v == 0.0f);
  }
}

TEST_CASE("depth channel is the alpha-weighted camera-z sum") {
  Camera cam = testutil::test_camera(16, 16);
  const float z = 2.0f;
  Scene s = one_splat_scene(
      Vec3f((7.5f - cam.cx) / cam.fx * z, (7.5f - cam.cy) / cam.fy * z, z),
      std::log(0.08f), 30.0f, Vec3f(1, 0, 0));
  RenderOutput out = render(s, cam);
  size_t pix = 7 * 16 + 7;
  REQUIRE(out.alpha[pix] > 0.5f);
  CHECK(out.depth[pix] / out.alpha[pix] == Approx(z).epsilon(1e-5));
}

TEST_CASE("alpha channel equals one minus final transmittance and stays in range") {
  std::mt19937 rng(991);
  for (int rep = 0; rep < 5; ++rep) {
    Scene s = testutil::random_scene(rng, 40, 3);
    Camera cam = testutil::test_camera(24, 24);
    RenderOutput out = render(s, cam);
    for (float a : out.alpha) {
      CHECK(a >= 0.0f);
      CHECK(a <= 1.0f);
    }
    // Conservation: rgb of a white-colored clone can't exceed the alpha.
    Scene white = s;
    white.colors.setOnes();
    RenderOutput wout = render(white, cam);
    for (size_t i = 0; i < wout.alpha.size(); ++i)
      CHECK(wout.rgb[i * 3] == Approx(wout.alpha[i]).margin(1e-5));
  }
}

TEST_CASE("render output is invariant to gaussian storage order") {
  std::mt19937 rng(123);
  Scene s = testutil::random_scene(rng, 30, 2);
  Camera cam = testutil::test_camera(20, 20);
  RenderOutput base = render(s, cam);

  // Apply a random permutation to every per-gaussian array.
  std::vector<int> perm(static_cast<size_t>(s.size()));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Scene p = s;
  for (int i = 0; i < s.size(); ++i) {
    p.positions.row(i) = s.positions.row(perm[static_cast<size_t>(i)]);
    p.log_scales.row(i) = s.log_scales.row(perm[static_cast<size_t>(i)]);
    p.rotations.row(i) = s.rotations.row(perm[static_cast<size_t>(i)]);
    p.colors.row(i) = s.colors.row(perm[static_cast<size_t>(i)]);
    p.features.row(i) = s.features.row(perm[static_cast<size_t>(i)]);
    p.opacity_logits[i] = s.opacity_logits[perm[static_cast<size_t>(i)]];
  }
  RenderOutput shuffled = render(p, cam);
  CHECK(shuffled.rgb == base.rgb);
  CHECK(shuffled.feature == base.feature);
  CHECK(shuffled.alpha == base.alpha);
  CHECK(shuffled.depth == base.depth);
}

TEST_CASE("tile renderer matches the per-pixel reference renderer") {
  std::mt19937 rng(2024);
  for (int rep = 0; rep < 8; ++rep) {
    int n = 1 + int(rng() % 120);
    Scene s = testutil::random_scene(rng, n, 4);
    Camera cam = testutil::test_camera(33, 29);  // odd sizes hit partial tiles
    RenderOutput tiled = render(s, cam);
    RenderOutput ref = reference_render(s, cam);
    REQUIRE(tiled.rgb.size() == ref.rgb.size());
    float linf = 0;
    for (size_t i = 0; i < tiled.rgb.size(); ++i)
      linf = std::max(linf, std::abs(tiled.rgb[i] - ref.rgb[i]));
    for (size_t i = 0; i < tiled.alpha.size(); ++i) {
      linf = std::max(linf, std::abs(tiled.alpha[i] - ref.alpha[i]));
      linf = std::max(linf, std::abs(tiled.depth[i] - ref.depth[i]));
    }
    for (size_t i = 0; i < tiled.feature.size(); ++i)
      linf = std::max(linf, std::abs(tiled.feature[i] - ref.feature[i]));
    CHECK(linf < 1e-5f);
  }
}

TEST_CASE("multithreaded render is bit-identical to single-threaded") {
  std::mt19937 rng(77);
  Scene s = testutil::random_scene(rng, 80, 3);
  Camera cam = testutil::test_camera(30, 22);
  RenderOutput a = render(s, cam, 1);
  RenderOutput b = render(s, cam, 3);
  CHECK(a.rgb == b.rgb);
  CHECK(a.feature == b.feature);
  CHECK(a.alpha == b.alpha);
  CHECK(a.depth == b.depth);
}

TEST_CASE("splats behind a saturated wall do not change the output") {
  Camera cam = testutil::test_camera(16, 16);
  // Four stacked full-frame splats; transmittance collapses below the
  // early-termination threshold within the first three at every pixel.
  Scene wall;
  int k = 2;
  wall.init(4, k);
  for (int i = 0; i < 4; ++i) {
    wall.positions.row(i) << 0.0f, 0.0f, 2.0f + 0.001f * float(i);
    wall.log_scales.row(i).setConstant(std::log(5.0f));
    wall.rotations.row(i) << 1, 0, 0, 0;
    wall.opacity_logits[i] = 30.0f;
    wall.colors.row(i) << 0.2f, 0.7f, 0.4f;
    wall.features.row(i) << 1, 0;
  }
  wall.pca = testutil::identity_pca(k);
  RenderOutput before = render(wall, cam);
  // Occupancy sanity: the wall covers every pixel near-opaquely. (With the
  // 0.99 alpha clamp, one clamped layer already drives the transmittance
  // below the termination threshold, so alpha settles at 0.99, not higher.)
  for (float a : before.alpha) CHECK(a > 0.98f);

  Scene with_extra = wall;
  with_extra.init(5, k);
  with_extra.positions.topRows(4) = wall.positions;
  with_extra.log_scales.topRows(4) = wall.log_scales;
  with_extra.rotations.topRows(4) = wall.rotations;
  with_extra.colors.topRows(4) = wall.colors;
  with_extra.features.topRows(4) = wall.features;
  with_extra.opacity_logits.head(4) = wall.opacity_logits;
  with_extra.positions.row(4) << 0, 0, 5.0f;  // far behind the wall
  with_extra.log_scales.row(4).setConstant(std::log(0.5f));
  with_extra.rotations.row(4) << 1, 0, 0, 0;
  with_extra.opacity_logits[4] = 30.0f;
  with_extra.colors.row(4) << 1, 1, 1;
  with_extra.features.row(4) << 0, 1;
  with_extra.pca = wall.pca;
  RenderOutput after = render(with_extra, cam);
  CHECK(before.rgb == after.rgb);
  CHECK(before.feature == after.feature);
  CHECK(before.alpha == after.alpha);
}

TEST_CASE("negligible-alpha splats are skipped entirely") {
  Camera cam = testutil::test_camera(16, 16);
  // Opacity so small that a = sigmoid(logit)*g < 1/255 everywhere.
  Scene s = one_splat_scene(Vec3f(0, 0, 2), std::log(0.3f), logit(0.003f),
                            Vec3f(1, 1, 1));
  RenderOutput out = render(s, cam);
  for (float v : out.rgb) CHECK(v == 0.0f);
  for (float v : out.alpha) CHECK(v == 0.0f);
}

TEST_CASE("non-finite projections are skipped and counted") {
  Camera cam = testutil::test_camera(16, 16);
  Scene s = one_splat_scene(Vec3f(0, 0, 2), 100.0f, 0.0f, Vec3f(1, 0, 0));
  RenderOutput out = render(s, cam);
  CHECK(out.degenerate_skipped == 1);
  for (float v : out.rgb) CHECK(v == 0.0f);
}

TEST_CASE("rendering an empty-subset scene leaves the black background") {
  std::mt19937 rng(5);
  Scene s = testutil::random_scene(rng, 10, 2);
  Camera cam = testutil::test_camera(8, 8);
  // A camera looking away from every splat: rotate 180 degrees about y.
  Camera away = cam;
  away.world_to_camera.block<3, 3>(0, 0) =
      Eigen::DiagonalMatrix<float, 3>(-1.0f, 1.0f, -1.0f).toDenseMatrix();
  RenderOutput out = render(s, away);
  for (float v : out.rgb) CHECK(v == 0.0f);
  for (float v : out.depth) CHECK(v == 0.0f);
}

TEST_CASE("tensor views of a render carry the right shapes") {
  std::mt19937 rng(6);
  Scene s = testutil::random_scene(rng, 12, 5);
  Camera cam = testutil::test_camera(9, 7);
  RenderOutput out = render(s, cam);
  Tensor rgb = rgb_tensor(out), feat = feature_tensor(out),
         alpha = alpha_tensor(out), depth = depth_tensor(out);
  CHECK(rgb.dims == std::vector<uint64_t>{7, 9, 3});
  CHECK(feat.dims == std::vector<uint64_t>{7, 9, 5});
  CHECK(alpha.dims == std::vector<uint64_t>{7, 9});
  CHECK(depth.dims == std::vector<uint64_t>{7, 9});
  CHECK(std::equal(rgb.f32.begin(), rgb.f32.end(), out.rgb.begin()));
}
