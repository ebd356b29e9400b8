// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "semsplat/common.hpp"

namespace semsplat {

// Dataset manifest. All paths are stored relative to the manifest file and
// resolved on load. views[].masks is indexed by object; an empty entry
// (JSON null) means the object is invisible in that view.
struct ManifestView {
  std::string image;
  std::string camera;
  std::string features;             // optional
  std::vector<std::string> masks;   // per object, "" when absent
};

struct ManifestObject {
  std::string name;
  std::string embedding;  // raw C-dim query vector
};

struct Manifest {
  std::string name;
  std::string points;
  std::string colors;
  std::vector<ManifestView> views;
  std::vector<ManifestView> holdout_views;
  std::vector<ManifestObject> objects;
  std::string base_dir;
};

namespace detail {

inline std::string resolve_path(const std::string& base,
                                const std::string& rel) {
  if (rel.empty()) return rel;
  std::filesystem::path p(rel);
  if (p.is_absolute()) return rel;
  return (std::filesystem::path(base) / p).string();
}

inline void check_exists(const std::string& path) {
  if (path.empty()) return;
  if (!std::filesystem::exists(path)) fail("missing file: " + path);
}

inline ManifestView parse_view(const nlohmann::json& j,
                               const std::string& base) {
  ManifestView v;
  v.image = resolve_path(base, j.at("image").get<std::string>());
  v.camera = resolve_path(base, j.at("camera").get<std::string>());
  if (j.contains("features") && !j.at("features").is_null())
    v.features = resolve_path(base, j.at("features").get<std::string>());
  if (j.contains("masks"))
    for (const auto& m : j.at("masks"))
      v.masks.push_back(m.is_null()
                            ? std::string()
                            : resolve_path(base, m.get<std::string>()));
  return v;
}

}  // namespace detail

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("invalid manifest json: " + path + ": " + e.what());
  }
  Manifest m;
  m.base_dir = std::filesystem::path(path).parent_path().string();
  try {
    m.name = j.value("name", std::string("scene"));
    if (j.contains("points"))
      m.points = detail::resolve_path(m.base_dir, j.at("points").get<std::string>());
    if (j.contains("colors"))
      m.colors = detail::resolve_path(m.base_dir, j.at("colors").get<std::string>());
    for (const auto& v : j.value("views", nlohmann::json::array()))
      m.views.push_back(detail::parse_view(v, m.base_dir));
    for (const auto& v : j.value("holdout_views", nlohmann::json::array()))
      m.holdout_views.push_back(detail::parse_view(v, m.base_dir));
    for (const auto& o : j.value("objects", nlohmann::json::array())) {
      ManifestObject obj;
      obj.name = o.at("name").get<std::string>();
      obj.embedding =
          detail::resolve_path(m.base_dir, o.at("embedding").get<std::string>());
      m.objects.push_back(obj);
    }
  } catch (const nlohmann::json::exception& e) {
    fail("invalid manifest json: " + path + ": " + e.what());
  }
  require(!m.views.empty(), "manifest has no views");
  detail::check_exists(m.points);
  detail::check_exists(m.colors);
  auto check_view = [](const ManifestView& v) {
    require(!v.image.empty(), "manifest view missing image");
    require(!v.camera.empty(), "manifest view missing camera");
    detail::check_exists(v.image);
    detail::check_exists(v.camera);
    detail::check_exists(v.features);
    for (const auto& mk : v.masks) detail::check_exists(mk);
  };
  for (const auto& v : m.views) check_view(v);
  for (const auto& v : m.holdout_views) check_view(v);
  for (const auto& o : m.objects) detail::check_exists(o.embedding);
  return m;
}

inline void save_manifest(const std::string& path, const Manifest& m,
                          const std::string& relative_to) {
  auto rel = [&](const std::string& p) -> nlohmann::json {
    if (p.empty()) return nullptr;
    return std::filesystem::relative(p, relative_to).string();
  };
  nlohmann::json j;
  j["name"] = m.name;
  if (!m.points.empty()) j["points"] = rel(m.points);
  if (!m.colors.empty()) j["colors"] = rel(m.colors);
  auto view_json = [&](const ManifestView& v) {
    nlohmann::json jv;
    jv["image"] = rel(v.image);
    jv["camera"] = rel(v.camera);
    if (!v.features.empty()) jv["features"] = rel(v.features);
    if (!v.masks.empty()) {
      nlohmann::json masks = nlohmann::json::array();
      for (const auto& mk : v.masks) masks.push_back(rel(mk));
      jv["masks"] = masks;
    }
    return jv;
  };
  j["views"] = nlohmann::json::array();
  for (const auto& v : m.views) j["views"].push_back(view_json(v));
  j["holdout_views"] = nlohmann::json::array();
  for (const auto& v : m.holdout_views)
    j["holdout_views"].push_back(view_json(v));
  j["objects"] = nlohmann::json::array();
  for (const auto& o : m.objects) {
    nlohmann::json jo;
    jo["name"] = o.name;
    jo["embedding"] = rel(o.embedding);
    j["objects"].push_back(jo);
  }
  std::ofstream out(path);
  require(out.good(), "cannot open for write: " + path);
  out << j.dump(2) << "\n";
  require(out.good(), "write failed: " + path);
}

}  // namespace semsplat
