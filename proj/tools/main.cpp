// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: dataset synthesis, training, rendering, semantic
// queries, rigid scene updates, evaluation metrics, and grasp proposals.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "semsplat/manifest.hpp"
#include "semsplat/query.hpp"
#include "semsplat/synth.hpp"
#include "semsplat/train.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace semsplat;

void emit(const json& j, const std::string& out_path) {
  std::cout << j.dump(2) << std::endl;
  if (!out_path.empty()) {
    fs::path p(out_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(out_path);
    require(f.good(), "cannot open for write: " + out_path);
    f << j.dump(2) << "\n";
    require(f.good(), "write failed: " + out_path);
  }
}

json vec3_json(const Vec3f& v) { return json::array({v.x(), v.y(), v.z()}); }

void warn_degenerate(const RenderOutput& r) {
  if (r.degenerate_skipped > 0)
    std::cerr << "warning: skipped " << r.degenerate_skipped
              << " degenerate gaussians during projection\n";
}

struct SynthArgs {
  std::string out_dir;
  SyntheticSpec spec;
};

int cmd_synth(const SynthArgs& a) {
  SyntheticDataset ds = generate_synthetic(a.spec);
  const std::string manifest = write_synthetic(ds, a.out_dir);
  json j;
  j["manifest"] = manifest;
  j["objects"] = a.spec.objects;
  j["train_views"] = a.spec.train_views;
  j["holdout_views"] = a.spec.holdout_views;
  j["gaussians"] = ds.gt_scene.size();
  j["cloud_points"] = static_cast<int>(ds.cloud.positions.rows());
  emit(j, "");
  return 0;
}

struct TrainArgs {
  std::string manifest;
  std::string out_dir = "out";
  std::string config;
  int iterations = -1;
  int feature_dim = -1;
  int threads = -1;
  long long seed = -1;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config.empty()) cfg = load_train_config(a.config);
  if (a.iterations >= 0) cfg.iterations = a.iterations;
  if (a.feature_dim >= 0) cfg.feature_dim = a.feature_dim;
  if (a.threads >= 0) cfg.threads = a.threads;
  if (a.seed >= 0) cfg.seed = static_cast<uint32_t>(a.seed);
  cfg.validate();

  Manifest m = load_manifest(a.manifest);
  require(!m.points.empty() && !m.colors.empty(),
          "manifest has no point cloud: " + a.manifest);
  PointCloud cloud = load_point_cloud(m.points, m.colors);

  std::vector<TrainView> views;
  std::vector<Tensor> fmaps;
  std::vector<MaskSet> msets;
  std::vector<size_t> sem_views;
  for (size_t v = 0; v < m.views.size(); ++v) {
    const ManifestView& mv = m.views[v];
    TrainView tv;
    tv.image = load_image(mv.image);
    tv.camera = load_camera(mv.camera);
    require(int(tv.image.dims[0]) == tv.camera.height &&
                int(tv.image.dims[1]) == tv.camera.width,
            "image size does not match camera: " + mv.image);
    if (!mv.features.empty()) {
      std::vector<Tensor> masks;
      for (const auto& mp : mv.masks)
        if (!mp.empty()) masks.push_back(read_tensor(mp));
      if (!masks.empty()) {
        fmaps.push_back(read_tensor(mv.features));
        msets.push_back(make_mask_set(std::move(masks)));
        sem_views.push_back(v);
      }
    }
    views.push_back(std::move(tv));
  }
  FeatureBundle bundle;
  const bool have_sem = !fmaps.empty();
  if (have_sem) {
    const int h = int(views[0].image.dims[0]);
    const int w = int(views[0].image.dims[1]);
    for (size_t i : sem_views)
      require(int(views[i].image.dims[0]) == h &&
                  int(views[i].image.dims[1]) == w,
              "semantic views must share one resolution");
    bundle = build_feature_bundle(fmaps, msets, h, w, cfg.feature_dim);
    for (size_t i = 0; i < sem_views.size(); ++i) {
      TrainView& tv = views[sem_views[i]];
      tv.target_map = bundle.views[i].target_map;
      tv.labels = bundle.views[i].labels;
      tv.has_semantics = true;
    }
  }

  const int report = std::max(1, cfg.iterations / 10);
  TrainState st = train(
      cloud, views, have_sem ? &bundle : nullptr, cfg,
      [&](const TrainState& s, const LossRow& row) {
        if (row.iteration % report == 0 || row.iteration == cfg.iterations)
          std::cerr << "iter " << row.iteration << "/" << cfg.iterations
                    << " loss " << row.total << " gaussians "
                    << row.gaussian_count << "\n";
        (void)s;
      });

  fs::create_directories(a.out_dir);
  const std::string scene_path = (fs::path(a.out_dir) / "scene.sgsc").string();
  const std::string csv_path = (fs::path(a.out_dir) / "loss.csv").string();
  save_scene(scene_path, st.scene);
  write_loss_csv(csv_path, st.history);
  json j;
  j["scene"] = scene_path;
  j["loss_csv"] = csv_path;
  j["iterations"] = cfg.iterations;
  j["gaussians"] = st.scene.size();
  if (!st.history.empty()) {
    const LossRow& last = st.history.back();
    j["final_loss"] = {{"l1_rgb", last.l1_rgb},
                       {"dssim", last.dssim},
                       {"l1_sem", last.l1_sem},
                       {"total", last.total}};
  }
  emit(j, "");
  return 0;
}

struct RenderArgs {
  std::string scene;
  std::string camera;
  std::string out_prefix;
  bool with_alpha = false;
  bool with_depth = false;
  bool with_features = false;
  int threads = 1;
};

int cmd_render(const RenderArgs& a) {
  Scene s = load_scene(a.scene);
  Camera cam = load_camera(a.camera);
  RenderOutput r = render(s, cam, a.threads);
  warn_degenerate(r);
  fs::path prefix(a.out_prefix);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  json j;
  Tensor rgb = rgb_tensor(r);
  write_tensor(a.out_prefix + "_rgb.sgtn", rgb);
  write_ppm(a.out_prefix + "_rgb.ppm", rgb);
  j["rgb"] = a.out_prefix + "_rgb.sgtn";
  j["preview"] = a.out_prefix + "_rgb.ppm";
  if (a.with_alpha) {
    write_tensor(a.out_prefix + "_alpha.sgtn", alpha_tensor(r));
    j["alpha"] = a.out_prefix + "_alpha.sgtn";
  }
  if (a.with_depth) {
    write_tensor(a.out_prefix + "_depth.sgtn", depth_tensor(r));
    j["depth"] = a.out_prefix + "_depth.sgtn";
  }
  if (a.with_features) {
    write_tensor(a.out_prefix + "_features.sgtn", feature_tensor(r));
    j["features"] = a.out_prefix + "_features.sgtn";
  }
  j["width"] = r.width;
  j["height"] = r.height;
  j["degenerate_skipped"] = r.degenerate_skipped;
  emit(j, "");
  return 0;
}

struct QueryArgs {
  std::string scene;
  std::string embedding;
  std::string camera;
  std::string out_prefix;
  std::string gt_mask;
  double threshold = 0.6;
  double sim_threshold = 0.85;
  int threads = 1;
};

int cmd_query(const QueryArgs& a) {
  Scene s = load_scene(a.scene);
  QueryEmbedding q = load_query(s, a.embedding);
  Camera cam = load_camera(a.camera);
  Tensor heat = heatmap(s, cam, q, a.threads);
  fs::path prefix(a.out_prefix);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  write_tensor(a.out_prefix + "_heat.sgtn", heat);
  write_pgm(a.out_prefix + "_heat.pgm", heat);
  json j;
  j["heatmap"] = a.out_prefix + "_heat.sgtn";
  j["preview"] = a.out_prefix + "_heat.pgm";
  float max_heat = 0;
  for (float v : heat.f32) max_heat = std::max(max_heat, v);
  j["max_heat"] = max_heat;
  try {
    LocatedObject obj = locate_object(s, q, a.sim_threshold);
    j["found"] = true;
    j["matched"] = static_cast<int>(obj.indices.size());
    j["centroid"] = vec3_json(obj.centroid);
  } catch (const Error& e) {
    j["found"] = false;
    j["reason"] = e.what();
  }
  if (!a.gt_mask.empty()) {
    Tensor mask = read_tensor(a.gt_mask);
    j["iou"] = iou_2d(heat, a.threshold, mask);
    j["iou_threshold"] = a.threshold;
  }
  emit(j, "");
  return 0;
}

struct UpdateArgs {
  std::string scene;
  std::string manifest;
  std::string out_dir = "out";
  std::string config;
  int threads = 1;
};

void update_config_apply_json(UpdateConfig& c, const json& j) {
  if (j.contains("change_threshold"))
    c.change_threshold = j.at("change_threshold").get<double>();
  if (j.contains("sim_threshold"))
    c.sim_threshold = j.at("sim_threshold").get<double>();
  if (j.contains("centroid_weight"))
    c.centroid_weight = j.at("centroid_weight").get<double>();
  if (j.contains("lr_translation"))
    c.lr_translation = j.at("lr_translation").get<double>();
  if (j.contains("lr_rotation"))
    c.lr_rotation = j.at("lr_rotation").get<double>();
  if (j.contains("max_steps")) c.max_steps = j.at("max_steps").get<int>();
  if (j.contains("plateau_window"))
    c.plateau_window = j.at("plateau_window").get<int>();
  if (j.contains("plateau_rel"))
    c.plateau_rel = j.at("plateau_rel").get<double>();
  if (j.contains("use_photometric"))
    c.use_photometric = j.at("use_photometric").get<bool>();
  if (j.contains("use_centroid"))
    c.use_centroid = j.at("use_centroid").get<bool>();
}

int cmd_update(const UpdateArgs& a) {
  Scene s = load_scene(a.scene);
  Manifest m = load_manifest(a.manifest);
  UpdateConfig cfg;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    require(in.good(), "cannot open: " + a.config);
    json j;
    in >> j;
    update_config_apply_json(cfg, j);
  }
  std::vector<UpdateView> views;
  ChangeDetection best;
  for (const auto& mv : m.views) {
    UpdateView uv;
    uv.image = load_image(mv.image);
    uv.camera = load_camera(mv.camera);
    RenderOutput r = render(s, uv.camera, a.threads);
    warn_degenerate(r);
    ChangeDetection det = detect_changes(r, uv.image, cfg.change_threshold);
    uv.has_detection = det.changed;
    uv.d_gt = det.centroid;
    uv.change_area = det.area;
    if (det.changed && det.area > best.area) best = det;
    views.push_back(std::move(uv));
  }
  const std::string out_json = (fs::path(a.out_dir) / "update.json").string();
  fs::create_directories(a.out_dir);
  if (!best.changed) {
    std::cerr << "no change detected\n";
    json j;
    j["changed"] = false;
    emit(j, out_json);
    return 0;
  }
  std::vector<int> selected =
      select_moved_gaussians(s, best.mean_feature, cfg.sim_threshold);
  RigidUpdate u = optimize_update(s, selected, views, cfg);
  Scene updated = apply_update(s, u);
  const std::string scene_path =
      (fs::path(a.out_dir) / "updated_scene.sgsc").string();
  save_scene(scene_path, updated);
  json j;
  j["changed"] = true;
  j["translation"] = vec3_json(u.translation);
  j["axis_angle"] = vec3_json(u.axis_angle);
  j["pivot"] = vec3_json(u.pivot);
  j["selected_count"] = static_cast<int>(u.selected.size());
  j["final_loss"] = u.final_loss;
  j["steps"] = u.steps;
  j["scene"] = scene_path;
  emit(j, out_json);
  return 0;
}

struct MetricsArgs {
  std::string scene;
  std::string manifest;
  std::string out;
  double threshold = 0.6;
  int threads = 1;
};

int cmd_metrics(const MetricsArgs& a) {
  Scene s = load_scene(a.scene);
  Manifest m = load_manifest(a.manifest);
  json j;
  auto view_metrics = [&](const std::vector<ManifestView>& vs,
                          const char* stem) {
    json arr = json::array();
    for (size_t v = 0; v < vs.size(); ++v) {
      Tensor image = load_image(vs[v].image);
      Camera cam = load_camera(vs[v].camera);
      RenderOutput r = render(s, cam, a.threads);
      warn_degenerate(r);
      json e;
      e["name"] = stem + std::to_string(v);
      e["psnr"] = psnr(rgb_tensor(r), image);
      arr.push_back(e);
    }
    return arr;
  };
  j["views"] = view_metrics(m.views, "view_");
  j["holdout_views"] = view_metrics(m.holdout_views, "holdout_");
  json objs = json::array();
  for (size_t o = 0; o < m.objects.size(); ++o) {
    QueryEmbedding q = load_query(s, m.objects[o].embedding);
    json entry;
    entry["name"] = m.objects[o].name;
    auto iou_over = [&](const std::vector<ManifestView>& vs) {
      json arr = json::array();
      for (const auto& mv : vs) {
        if (mv.masks.size() <= o || mv.masks[o].empty()) {
          arr.push_back(nullptr);
          continue;
        }
        Camera cam = load_camera(mv.camera);
        Tensor heat = heatmap(s, cam, q, a.threads);
        arr.push_back(iou_2d(heat, a.threshold, read_tensor(mv.masks[o])));
      }
      return arr;
    };
    entry["iou"] = iou_over(m.views);
    entry["holdout_iou"] = iou_over(m.holdout_views);
    objs.push_back(entry);
  }
  j["objects"] = objs;
  j["gaussian_count"] = s.size();
  j["iou_threshold"] = a.threshold;
  emit(j, a.out);
  return 0;
}

struct GraspArgs {
  std::string scene;
  std::string embedding;
  std::string out;
  double sim_threshold = 0.85;
};

int cmd_grasp(const GraspArgs& a) {
  Scene s = load_scene(a.scene);
  QueryEmbedding q = load_query(s, a.embedding);
  LocatedObject obj = locate_object(s, q, a.sim_threshold);
  std::vector<GraspPose> grasps = propose_grasp(s, obj.indices);
  json j;
  j["matched"] = static_cast<int>(obj.indices.size());
  j["centroid"] = vec3_json(obj.centroid);
  json arr = json::array();
  for (const auto& g : grasps) {
    json e;
    json rot = json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot.push_back(g.rotation(r, c));
    e["rotation"] = rot;
    e["translation"] = vec3_json(g.translation);
    e["width"] = g.width;
    e["score"] = g.score;
    e["canonical_fallback"] = g.canonical_fallback;
    arr.push_back(e);
  }
  j["grasps"] = arr;
  emit(j, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantic gaussian splatting toolkit"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", sa.out_dir, "output directory")->required();
  synth->add_option("--objects", sa.spec.objects, "object count");
  synth->add_option("--image-size", sa.spec.image_size, "square image size");
  synth->add_option("--views", sa.spec.train_views, "training view count");
  synth->add_option("--holdout", sa.spec.holdout_views, "holdout view count");
  synth->add_option("--feature-dim", sa.spec.raw_feature_dim,
                    "raw feature channels");
  synth->add_option("--gaussians-per-object", sa.spec.gaussians_per_object,
                    "ground-truth splats per object");
  synth->add_option("--cloud-points", sa.spec.cloud_points_per_object,
                    "cloud points per object");
  synth->add_option("--noise", sa.spec.feature_noise, "feature noise sigma");
  synth->add_option("--seed", sa.spec.seed, "random seed");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "reconstruct a scene from a dataset");
  tr->add_option("--manifest", ta.manifest, "dataset manifest")->required();
  tr->add_option("--out", ta.out_dir, "output directory");
  tr->add_option("--config", ta.config, "training config json");
  tr->add_option("--iterations", ta.iterations, "iteration override");
  tr->add_option("--feature-dim", ta.feature_dim,
                 "compressed feature dimension override");
  tr->add_option("--threads", ta.threads, "worker thread override");
  tr->add_option("--seed", ta.seed, "seed override");

  RenderArgs ra;
  auto* re = app.add_subcommand("render", "render a reconstructed scene");
  re->add_option("--scene", ra.scene, "scene file")->required();
  re->add_option("--camera", ra.camera, "camera json")->required();
  re->add_option("--out", ra.out_prefix, "output path prefix")->required();
  re->add_flag("--alpha", ra.with_alpha, "also write the alpha map");
  re->add_flag("--depth", ra.with_depth, "also write the depth map");
  re->add_flag("--features", ra.with_features, "also write the feature map");
  re->add_option("--threads", ra.threads, "worker threads");

  QueryArgs qa;
  auto* qu = app.add_subcommand("query", "open-vocabulary heatmap query");
  qu->add_option("--scene", qa.scene, "scene file")->required();
  qu->add_option("--embedding", qa.embedding, "query embedding tensor")
      ->required();
  qu->add_option("--camera", qa.camera, "camera json")->required();
  qu->add_option("--out", qa.out_prefix, "output path prefix")->required();
  qu->add_option("--gt-mask", qa.gt_mask, "ground-truth mask for iou");
  qu->add_option("--threshold", qa.threshold, "heatmap binarize threshold");
  qu->add_option("--sim-threshold", qa.sim_threshold,
                 "gaussian selection cosine threshold");
  qu->add_option("--threads", qa.threads, "worker threads");

  UpdateArgs ua;
  auto* up = app.add_subcommand("update", "rigid update from new frames");
  up->add_option("--scene", ua.scene, "scene file")->required();
  up->add_option("--manifest", ua.manifest, "current-frame manifest")
      ->required();
  up->add_option("--out", ua.out_dir, "output directory");
  up->add_option("--config", ua.config, "update config json");
  up->add_option("--threads", ua.threads, "worker threads");

  MetricsArgs ma;
  auto* me = app.add_subcommand("metrics", "psnr and iou evaluation");
  me->add_option("--scene", ma.scene, "scene file")->required();
  me->add_option("--manifest", ma.manifest, "dataset manifest")->required();
  me->add_option("--out", ma.out, "metrics json path");
  me->add_option("--threshold", ma.threshold, "heatmap binarize threshold");
  me->add_option("--threads", ma.threads, "worker threads");

  GraspArgs ga;
  auto* gr = app.add_subcommand("grasp", "propose grasps for a queried object");
  gr->add_option("--scene", ga.scene, "scene file")->required();
  gr->add_option("--embedding", ga.embedding, "query embedding tensor")
      ->required();
  gr->add_option("--out", ga.out, "grasp json path");
  gr->add_option("--sim-threshold", ga.sim_threshold,
                 "gaussian selection cosine threshold");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) return cmd_synth(sa);
    if (tr->parsed()) return cmd_train(ta);
    if (re->parsed()) return cmd_render(ra);
    if (qu->parsed()) return cmd_query(qa);
    if (up->parsed()) return cmd_update(ua);
    if (me->parsed()) return cmd_metrics(ma);
    if (gr->parsed()) return cmd_grasp(ga);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
