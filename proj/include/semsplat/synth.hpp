// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "semsplat/camera.hpp"
#include "semsplat/image.hpp"
#include "semsplat/manifest.hpp"
#include "semsplat/point_cloud.hpp"
#include "semsplat/raster.hpp"
#include "semsplat/scene.hpp"
#include "semsplat/tensor.hpp"

namespace semsplat {

// Procedural tabletop scenes: primitive objects on a ground plane circle,
// observed by a camera ring. Ground truth renders come from the reference
// rasterizer so every derived artifact (images, masks, features) is exactly
// reproducible from the seed.
struct SyntheticSpec {
  int objects = 5;
  int image_size = 64;
  int train_views = 3;
  int holdout_views = 1;
  int raw_feature_dim = 32;
  int gaussians_per_object = 500;
  int cloud_points_per_object = 600;
  float feature_noise = 0.02f;
  float color_jitter = 0.08f;
  // Smooth per-object color ramp (channel d follows local axis d) so that
  // orientation is photometrically observable, like texture on real objects.
  float color_gradient = 0.25f;
  float ring_radius = 1.7f;
  float ring_height = 2.9f;
  float placement_radius = 0.56f;
  float min_size = 0.28f;
  float max_size = 0.32f;
  float focal_factor = 1.8f;
  int feature_downsample = 2;
  // Tabletop the objects rest on. It carries its own orthogonal feature
  // direction, so silhouette fringes blend object and table semantics the
  // way real captures do instead of staying pure-object at any opacity.
  bool ground_plane = true;
  float ground_radius = 1.15f;
  int ground_gaussians = 2400;
  int ground_cloud_points = 2400;
  std::uint32_t seed = 42;

  int feature_slots() const { return objects + (ground_plane ? 1 : 0); }

  void validate() const {
    require(objects >= 1 && objects <= 64, "synthetic: bad object count");
    require(image_size >= 16 && image_size <= 1024, "synthetic: bad image size");
    require(train_views >= 1, "synthetic: need at least one training view");
    require(holdout_views >= 0, "synthetic: bad holdout count");
    require(raw_feature_dim >= feature_slots(),
            "synthetic: feature dim must cover every object signature");
    require(!ground_plane || (ground_radius > 0 && ground_gaussians >= 16 &&
                              ground_cloud_points >= 16),
            "synthetic: bad ground plane parameters");
    require(gaussians_per_object >= 8, "synthetic: too few gaussians");
    require(cloud_points_per_object >= 8, "synthetic: too few cloud points");
    require(feature_downsample >= 1 &&
                image_size % feature_downsample == 0,
            "synthetic: feature downsample must divide image size");
    require(min_size > 0 && max_size >= min_size, "synthetic: bad size range");
  }
};

struct SyntheticObject {
  std::string name;
  std::string shape;  // "sphere" or "box"
  Vec3f center = Vec3f::Zero();
  Vec3f half_extent = Vec3f::Zero();  // sphere stores (r, r, r)
  Vec3f color = Vec3f::Zero();
  Eigen::VectorXf feature;
  int first_gaussian = 0;
  int gaussian_count = 0;
};

struct SyntheticDataset {
  SyntheticSpec spec;
  Scene gt_scene;
  std::vector<SyntheticObject> objects;
  PointCloud cloud;
  std::vector<Camera> train_cameras;
  std::vector<Camera> holdout_cameras;
  std::vector<Tensor> train_images;    // H x W x 3 float
  std::vector<Tensor> holdout_images;  // H x W x 3 float
  std::vector<Tensor> feature_maps;    // per train view, h x w x C float
  // masks[view][object]: H x W u32, all-zero when the object is hidden
  std::vector<std::vector<Tensor>> train_masks;
  std::vector<std::vector<Tensor>> holdout_masks;
};

inline Vec3f hsv_to_rgb(float h, float s, float v) {
  h = h - std::floor(h);
  const float c = v * s;
  const float hp = h * 6.0f;
  const float x = c * (1.0f - std::fabs(std::fmod(hp, 2.0f) - 1.0f));
  float r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const float m = v - c;
  return Vec3f(r + m, g + m, b + m);
}

namespace detail {

inline Vec3f sample_sphere_surface(Rng& rng) {
  std::normal_distribution<float> nd(0.0f, 1.0f);
  Vec3f d(nd(rng), nd(rng), nd(rng));
  float n = d.norm();
  while (n < 1e-6f) {
    d = Vec3f(nd(rng), nd(rng), nd(rng));
    n = d.norm();
  }
  return d / n;
}

inline Vec3f sample_box_surface(Rng& rng, const Vec3f& half) {
  std::uniform_real_distribution<float> ud(0.0f, 1.0f);
  const float ax = half.y() * half.z();
  const float ay = half.x() * half.z();
  const float az = half.x() * half.y();
  const float total = 2.0f * (ax + ay + az);
  float pick = ud(rng) * total;
  auto span = [&](float h) { return (ud(rng) * 2.0f - 1.0f) * h; };
  for (int axis = 0; axis < 3; ++axis) {
    const float area = axis == 0 ? ax : (axis == 1 ? ay : az);
    for (int side = 0; side < 2; ++side) {
      if (pick < area) {
        Vec3f p;
        p[axis] = (side == 0 ? 1.0f : -1.0f) * half[axis];
        p[(axis + 1) % 3] = span(half[(axis + 1) % 3]);
        p[(axis + 2) % 3] = span(half[(axis + 2) % 3]);
        return p;
      }
      pick -= area;
    }
  }
  return Vec3f(half.x(), 0.0f, 0.0f);
}

// Orthonormalize rows of a random gaussian matrix; keeps object signatures
// maximally separable so query heatmaps have a clean decision margin.
inline std::vector<Eigen::VectorXf> orthonormal_features(int count, int dim,
                                                         Rng& rng) {
  std::normal_distribution<float> nd(0.0f, 1.0f);
  std::vector<Eigen::VectorXf> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXf v(dim);
    for (int d = 0; d < dim; ++d) v[d] = nd(rng);
    for (const auto& prev : out) v -= prev.dot(v) * prev;
    float n = v.norm();
    require(n > 1e-4f, "synthetic: feature orthogonalization collapsed");
    out.push_back(v / n);
  }
  return out;
}

inline Camera scaled_camera(const Camera& cam, int h, int w) {
  Camera c = cam;
  const float sy = static_cast<float>(h) / static_cast<float>(cam.height);
  const float sx = static_cast<float>(w) / static_cast<float>(cam.width);
  c.fx *= sx;
  c.cx *= sx;
  c.fy *= sy;
  c.cy *= sy;
  c.width = w;
  c.height = h;
  return c;
}

// Ray/shape hit distances for the exact silhouettes. Rays are given in
// world space with a normalized direction; a miss returns a negative value.
inline float ray_sphere_hit(const Vec3f& origin, const Vec3f& dir,
                            const Vec3f& center, float radius) {
  const Vec3f oc = origin - center;
  const float b = oc.dot(dir);
  const float disc = b * b - (oc.squaredNorm() - radius * radius);
  if (disc < 0.0f) return -1.0f;
  const float root = std::sqrt(disc);
  float t = -b - root;
  if (t <= 0.0f) t = -b + root;
  return t > 0.0f ? t : -1.0f;
}

inline float ray_box_hit(const Vec3f& origin, const Vec3f& dir,
                         const Vec3f& center, const Vec3f& half) {
  float t_near = -std::numeric_limits<float>::infinity();
  float t_far = std::numeric_limits<float>::infinity();
  for (int ax = 0; ax < 3; ++ax) {
    const float lo = center[ax] - half[ax], hi = center[ax] + half[ax];
    if (std::abs(dir[ax]) < 1e-12f) {
      if (origin[ax] < lo || origin[ax] > hi) return -1.0f;
      continue;
    }
    float t0 = (lo - origin[ax]) / dir[ax];
    float t1 = (hi - origin[ax]) / dir[ax];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return -1.0f;
  }
  const float t = t_near > 0.0f ? t_near : t_far;
  return t > 0.0f ? t : -1.0f;
}

// Visible-surface masks by exact ray casting: a pixel belongs to the object
// with the nearest surface hit along its viewing ray. Masks are mutually
// disjoint and match the analytic silhouettes bit for bit.
inline std::vector<Tensor> front_object_masks(
    const std::vector<SyntheticObject>& objects, const Camera& cam) {
  const int h = cam.height, w = cam.width;
  const std::size_t n = objects.size();
  std::vector<Tensor> masks(n);
  for (auto& m : masks) m = Tensor::zeros_u32({static_cast<std::uint64_t>(h),
                                               static_cast<std::uint64_t>(w)});
  const Mat3f rot = cam.rotation();
  const Vec3f origin = cam.center();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Vec3f dir_cam((static_cast<float>(x) + 0.5f - cam.cx) / cam.fx,
                    (static_cast<float>(y) + 0.5f - cam.cy) / cam.fy, 1.0f);
      Vec3f dir = (rot.transpose() * dir_cam).normalized();
      int winner = -1;
      float best_t = 0.0f;
      for (std::size_t o = 0; o < n; ++o) {
        const auto& obj = objects[o];
        const float t =
            obj.shape == "sphere"
                ? ray_sphere_hit(origin, dir, obj.center,
                                 obj.half_extent.x())
                : ray_box_hit(origin, dir, obj.center, obj.half_extent);
        if (t > 0.0f && (winner < 0 || t < best_t)) {
          winner = static_cast<int>(o);
          best_t = t;
        }
      }
      if (winner >= 0)
        masks[static_cast<std::size_t>(winner)]
            .u32[static_cast<std::size_t>(y * w + x)] = 1u;
    }
  return masks;
}

}  // namespace detail

// Analytic silhouette of a sphere: pixel is inside when its viewing ray
// passes within `radius` of the center, in front of the camera.
inline Tensor sphere_silhouette_mask(const Camera& cam, const Vec3f& center,
                                     float radius) {
  Tensor mask = Tensor::zeros_u32({static_cast<std::uint64_t>(cam.height),
                                   static_cast<std::uint64_t>(cam.width)});
  const Vec3f c = cam.to_camera(center);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      Vec3f dir((static_cast<float>(x) + 0.5f - cam.cx) / cam.fx,
                (static_cast<float>(y) + 0.5f - cam.cy) / cam.fy, 1.0f);
      dir.normalize();
      const float along = c.dot(dir);
      if (along <= 0) continue;
      const float dist2 = (c - along * dir).squaredNorm();
      if (dist2 <= radius * radius)
        mask.u32[static_cast<std::size_t>(y * cam.width + x)] = 1u;
    }
  return mask;
}

inline SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticDataset ds;
  ds.spec = spec;
  Rng rng(spec.seed);
  std::uniform_real_distribution<float> ud(0.0f, 1.0f);
  std::normal_distribution<float> nd(0.0f, 1.0f);

  // One signature per object plus, when enabled, one for the tabletop.
  const auto features = detail::orthonormal_features(
      spec.feature_slots(), spec.raw_feature_dim, rng);
  // Smooth low-frequency gray texture; high-frequency noise would not be
  // learnable from three views and would only hurt novel-view fidelity.
  auto ground_color = [](float x, float y) {
    return 0.44f + 0.10f * std::cos(4.0f * x) * std::cos(4.0f * y + 1.3f);
  };

  // Object layout: evenly spaced on a circle, resting on the z = 0 plane.
  std::vector<SyntheticObject> objects;
  for (int o = 0; o < spec.objects; ++o) {
    SyntheticObject obj;
    obj.name = "object_" + std::to_string(o);
    obj.shape = (o % 2 == 0) ? "sphere" : "box";
    const float angle = 2.0f * static_cast<float>(M_PI) *
                        static_cast<float>(o) / static_cast<float>(spec.objects);
    const float size =
        spec.min_size + (spec.max_size - spec.min_size) * ud(rng);
    const float rad = spec.objects == 1 ? 0.0f : spec.placement_radius;
    if (obj.shape == "sphere") {
      obj.half_extent = Vec3f(size, size, size);
    } else {
      obj.half_extent = Vec3f(size * (0.7f + 0.3f * ud(rng)),
                              size * (0.7f + 0.3f * ud(rng)), size);
    }
    obj.center = Vec3f(rad * std::cos(angle), rad * std::sin(angle),
                       obj.half_extent.z());
    obj.color = hsv_to_rgb(static_cast<float>(o) /
                               static_cast<float>(spec.objects) + 0.05f,
                           0.8f, 0.85f);
    obj.feature = features[static_cast<std::size_t>(o)];
    objects.push_back(obj);
  }

  // Ground-truth scene: surface splats with jittered color and scale.
  const int n_ground = spec.ground_plane ? spec.ground_gaussians : 0;
  const int n_total = spec.objects * spec.gaussians_per_object + n_ground;
  Scene scene;
  scene.init(n_total, spec.raw_feature_dim);
  scene.pca.input_dim = spec.raw_feature_dim;
  scene.pca.components = spec.raw_feature_dim;
  scene.pca.mean = Eigen::VectorXf::Zero(spec.raw_feature_dim);
  scene.pca.basis =
      RowMatf::Identity(spec.raw_feature_dim, spec.raw_feature_dim);
  scene.pca.explained_variance =
      Eigen::VectorXf::Ones(spec.raw_feature_dim);
  int cursor = 0;
  for (auto& obj : objects) {
    obj.first_gaussian = cursor;
    obj.gaussian_count = spec.gaussians_per_object;
    const float size = obj.half_extent.maxCoeff();
    const float sigma =
        0.9f * size / std::sqrt(static_cast<float>(spec.gaussians_per_object));
    // Splat centers sit one sigma inside the surface so the rendered opacity
    // transition straddles the true silhouette instead of overshooting it —
    // the best finite-splat discretization of a solid boundary.
    const Vec3f inset =
        (obj.half_extent.array() - sigma).max(0.5f * sigma).matrix();
    for (int i = 0; i < spec.gaussians_per_object; ++i, ++cursor) {
      Vec3f local = obj.shape == "sphere"
                        ? detail::sample_sphere_surface(rng) * inset.x()
                        : detail::sample_box_surface(rng, inset);
      for (int d = 0; d < 3; ++d) {
        scene.positions(cursor, d) = obj.center[d] + local[d];
        scene.log_scales(cursor, d) =
            std::log(sigma * (0.9f + 0.2f * ud(rng)));
        scene.colors(cursor, d) = clamp(
            obj.color[d] +
                spec.color_gradient * local[d] / obj.half_extent[d] +
                spec.color_jitter * (2.0f * ud(rng) - 1.0f),
            0.15f, 0.98f);
      }
      scene.opacity_logits[cursor] = logit(0.92f + 0.02f * (ud(rng) - 0.5f));
      scene.features.row(cursor) = obj.feature.transpose();
    }
  }
  if (n_ground > 0) {
    const Eigen::VectorXf& gfeat = features[static_cast<std::size_t>(
        spec.objects)];
    const float gspacing =
        spec.ground_radius *
        std::sqrt(static_cast<float>(M_PI) / static_cast<float>(n_ground));
    const float gsigma = 0.75f * gspacing;
    for (int i = 0; i < n_ground; ++i, ++cursor) {
      const float r = spec.ground_radius * std::sqrt(ud(rng));
      const float th = 2.0f * static_cast<float>(M_PI) * ud(rng);
      const float gx = r * std::cos(th), gy = r * std::sin(th);
      scene.positions.row(cursor) << gx, gy, 0.0f;
      scene.log_scales(cursor, 0) = std::log(gsigma * (0.9f + 0.2f * ud(rng)));
      scene.log_scales(cursor, 1) = std::log(gsigma * (0.9f + 0.2f * ud(rng)));
      scene.log_scales(cursor, 2) = std::log(0.3f * gsigma);
      const float shade =
          clamp(ground_color(gx, gy) + 0.02f * (2.0f * ud(rng) - 1.0f),
                0.2f, 0.8f);
      scene.colors.row(cursor).setConstant(shade);
      scene.opacity_logits[cursor] = logit(0.96f);
      scene.features.row(cursor) = gfeat.transpose();
    }
  }
  ds.gt_scene = scene;
  ds.objects = objects;

  // Camera ring; holdout views sit between training azimuths.
  const float ims = static_cast<float>(spec.image_size);
  auto ring_camera = [&](float azimuth) {
    const Vec3f eye(spec.ring_radius * std::cos(azimuth),
                    spec.ring_radius * std::sin(azimuth), spec.ring_height);
    const Vec3f target(0.0f, 0.0f, 0.6f * spec.max_size);
    return make_look_at_camera(eye, target, spec.focal_factor * ims,
                               spec.focal_factor * ims, spec.image_size,
                               spec.image_size);
  };
  for (int v = 0; v < spec.train_views; ++v)
    ds.train_cameras.push_back(ring_camera(
        2.0f * static_cast<float>(M_PI) * static_cast<float>(v) /
        static_cast<float>(spec.train_views)));
  for (int v = 0; v < spec.holdout_views; ++v)
    ds.holdout_cameras.push_back(ring_camera(
        2.0f * static_cast<float>(M_PI) *
        (static_cast<float>(v) + 0.5f) /
        static_cast<float>(spec.train_views)));

  // Renders, masks, and half-resolution feature maps.
  const int fh = spec.image_size / spec.feature_downsample;
  const int fw = fh;
  const int C = spec.raw_feature_dim;
  for (const auto& cam : ds.train_cameras) {
    ds.train_images.push_back(rgb_tensor(reference_render(scene, cam)));
    ds.train_masks.push_back(detail::front_object_masks(objects, cam));
    const Camera fcam = detail::scaled_camera(cam, fh, fw);
    const auto fmask = detail::front_object_masks(objects, fcam);
    const Mat3f frot_t = fcam.rotation().transpose();
    const Vec3f feye = fcam.center();
    Tensor fmap = Tensor::zeros_f32({static_cast<std::uint64_t>(fh),
                                     static_cast<std::uint64_t>(fw),
                                     static_cast<std::uint64_t>(C)});
    for (int y = 0; y < fh; ++y)
      for (int x = 0; x < fw; ++x) {
        const std::size_t px = static_cast<std::size_t>(y * fw + x);
        const Eigen::VectorXf* sig = nullptr;
        for (std::size_t o = 0; o < objects.size(); ++o)
          if (fmask[o].u32[px] != 0u) { sig = &objects[o].feature; break; }
        if (!sig && spec.ground_plane) {
          // Visible tabletop: the ray below the objects hits the disk.
          Vec3f dir = frot_t * Vec3f((static_cast<float>(x) + 0.5f - fcam.cx) /
                                         fcam.fx,
                                     (static_cast<float>(y) + 0.5f - fcam.cy) /
                                         fcam.fy,
                                     1.0f);
          if (dir.z() < -1e-9f) {
            const float t = -feye.z() / dir.z();
            const Vec3f hit = feye + t * dir;
            if (hit.head<2>().norm() <= spec.ground_radius)
              sig = &features[static_cast<std::size_t>(spec.objects)];
          }
        }
        for (int c = 0; c < C; ++c) {
          float val = spec.feature_noise * nd(rng);
          if (sig) val += (*sig)[c];
          fmap.f32[px * static_cast<std::size_t>(C) +
                   static_cast<std::size_t>(c)] = val;
        }
      }
    ds.feature_maps.push_back(std::move(fmap));
  }
  for (const auto& cam : ds.holdout_cameras) {
    ds.holdout_images.push_back(rgb_tensor(reference_render(scene, cam)));
    ds.holdout_masks.push_back(
        detail::front_object_masks(objects, cam));
  }

  // Dense colored point cloud sampled independently of the splats.
  const int n_ground_cloud = spec.ground_plane ? spec.ground_cloud_points : 0;
  const int n_cloud =
      spec.objects * spec.cloud_points_per_object + n_ground_cloud;
  ds.cloud.positions.resize(n_cloud, 3);
  ds.cloud.colors.resize(n_cloud, 3);
  int pc = 0;
  for (const auto& obj : objects) {
    for (int i = 0; i < spec.cloud_points_per_object; ++i, ++pc) {
      Vec3f local = obj.shape == "sphere"
                        ? detail::sample_sphere_surface(rng) *
                              obj.half_extent.x()
                        : detail::sample_box_surface(rng, obj.half_extent);
      const float jitter = 0.01f * obj.half_extent.maxCoeff();
      for (int d = 0; d < 3; ++d) {
        ds.cloud.positions(pc, d) = obj.center[d] + local[d] + jitter * nd(rng);
        ds.cloud.colors(pc, d) =
            clamp(obj.color[d] + 0.06f * (2.0f * ud(rng) - 1.0f), 0.0f, 1.0f);
      }
    }
  }
  for (int i = 0; i < n_ground_cloud; ++i, ++pc) {
    const float r = spec.ground_radius * std::sqrt(ud(rng));
    const float th = 2.0f * static_cast<float>(M_PI) * ud(rng);
    const float gx = r * std::cos(th), gy = r * std::sin(th);
    ds.cloud.positions.row(pc) << gx, gy, 0.003f * nd(rng);
    ds.cloud.colors.row(pc).setConstant(
        clamp(ground_color(gx, gy) + 0.03f * (2.0f * ud(rng) - 1.0f), 0.0f,
              1.0f));
  }
  return ds;
}

namespace detail {

inline Tensor vector_tensor(const Eigen::VectorXf& v) {
  Tensor t = Tensor::zeros_f32({static_cast<std::uint64_t>(v.size())});
  for (Eigen::Index i = 0; i < v.size(); ++i)
    t.f32[static_cast<std::size_t>(i)] = v[static_cast<Eigen::Index>(i)];
  return t;
}

inline std::uint64_t mask_area(const Tensor& m) {
  std::uint64_t a = 0;
  for (auto v : m.u32) a += v != 0u ? 1u : 0u;
  return a;
}

}  // namespace detail

// Writes every dataset artifact plus a manifest; returns the manifest path.
inline std::string write_synthetic(const SyntheticDataset& ds,
                                   const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto at = [&](const std::string& name) {
    return (fs::path(dir) / name).string();
  };
  Manifest m;
  m.name = "synthetic";
  m.base_dir = dir;
  m.points = at("cloud_points.sgtn");
  m.colors = at("cloud_colors.sgtn");
  {
    const std::uint64_t n = static_cast<std::uint64_t>(ds.cloud.positions.rows());
    Tensor pts = Tensor::zeros_f32({n, 3});
    Tensor cols = Tensor::zeros_f32({n, 3});
    std::copy(ds.cloud.positions.data(),
              ds.cloud.positions.data() + ds.cloud.positions.size(),
              pts.f32.begin());
    std::copy(ds.cloud.colors.data(),
              ds.cloud.colors.data() + ds.cloud.colors.size(),
              cols.f32.begin());
    write_tensor(m.points, pts);
    write_tensor(m.colors, cols);
  }
  auto write_view = [&](const std::string& stem, const Tensor& image,
                        const Camera& cam, const Tensor* fmap,
                        const std::vector<Tensor>* masks) {
    ManifestView v;
    v.image = at(stem + "_image.sgtn");
    v.camera = at(stem + "_camera.json");
    write_tensor(v.image, image);
    write_ppm(at(stem + "_image.ppm"), image);
    save_camera(v.camera, cam);
    if (fmap != nullptr) {
      v.features = at(stem + "_features.sgtn");
      write_tensor(v.features, *fmap);
    }
    if (masks != nullptr) {
      for (std::size_t o = 0; o < masks->size(); ++o) {
        const Tensor& mk = (*masks)[o];
        if (detail::mask_area(mk) == 0) {
          v.masks.emplace_back();
          continue;
        }
        const std::string path =
            at(stem + "_mask_" + std::to_string(o) + ".sgtn");
        write_tensor(path, mk);
        v.masks.push_back(path);
      }
    }
    return v;
  };
  for (std::size_t v = 0; v < ds.train_cameras.size(); ++v)
    m.views.push_back(write_view("view_" + std::to_string(v),
                                 ds.train_images[v], ds.train_cameras[v],
                                 &ds.feature_maps[v], &ds.train_masks[v]));
  for (std::size_t v = 0; v < ds.holdout_cameras.size(); ++v)
    m.holdout_views.push_back(write_view("holdout_" + std::to_string(v),
                                         ds.holdout_images[v],
                                         ds.holdout_cameras[v], nullptr,
                                         &ds.holdout_masks[v]));
  for (const auto& obj : ds.objects) {
    ManifestObject mo;
    mo.name = obj.name;
    mo.embedding = at(obj.name + "_embedding.sgtn");
    write_tensor(mo.embedding, detail::vector_tensor(obj.feature));
    m.objects.push_back(mo);
  }
  const std::string manifest_path = at("manifest.json");
  save_manifest(manifest_path, m, dir);
  return manifest_path;
}

}  // namespace semsplat
