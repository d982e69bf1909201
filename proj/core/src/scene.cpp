#include "more3d/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "more3d/errors.hpp"
#include "more3d/relations.hpp"

namespace more3d {

using json = nlohmann::json;

void check_cloud(const PointCloud& cloud) {
  if (cloud.points.empty()) throw DataError("point cloud is empty");
  if (cloud.colors.size() != cloud.points.size()) {
    throw DataError("cloud has " + std::to_string(cloud.points.size()) +
                    " points but " + std::to_string(cloud.colors.size()) +
                    " colors");
  }
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      if (!std::isfinite(cloud.points[i][static_cast<size_t>(a)])) {
        throw DataError("non-finite coordinate at point index " +
                        std::to_string(i));
      }
      if (!std::isfinite(cloud.colors[i][static_cast<size_t>(a)])) {
        throw DataError("non-finite color at point index " + std::to_string(i));
      }
    }
  }
}

size_t InstanceMask::popcount() const {
  size_t n = 0;
  for (auto b : bits) n += (b != 0);
  return n;
}

bool InstanceMask::intersects(const InstanceMask& other) const {
  const size_t n = std::min(bits.size(), other.bits.size());
  for (size_t i = 0; i < n; ++i) {
    if (bits[i] && other.bits[i]) return true;
  }
  return false;
}

const char* relation_kind_name(RelationKind kind) {
  switch (kind) {
    case RelationKind::kLeftOf: return "left-of";
    case RelationKind::kRightOf: return "right-of";
    case RelationKind::kInFrontOf: return "in-front-of";
    case RelationKind::kBehind: return "behind";
    case RelationKind::kNextTo: return "next-to";
    case RelationKind::kOnTopOf: return "on-top-of";
    case RelationKind::kBetween: return "between";
  }
  return "unknown";
}

const SceneObject* Scene::find_object(int instance_id) const {
  for (const auto& obj : objects) {
    if (obj.instance_id == instance_id) return &obj;
  }
  return nullptr;
}

void check_scene(const Scene& scene) {
  check_cloud(scene.cloud);
  std::set<int> ids;
  for (const auto& obj : scene.objects) {
    if (obj.instance_id < 1) {
      throw DataError("instance_id must be >= 1, got " +
                      std::to_string(obj.instance_id));
    }
    if (!ids.insert(obj.instance_id).second) {
      throw DataError("duplicate instance_id " +
                      std::to_string(obj.instance_id));
    }
    if (obj.class_name != class_name(obj.class_id)) {
      throw DataError("object " + std::to_string(obj.instance_id) +
                      ": class_name '" + obj.class_name +
                      "' does not match class_id " +
                      std::to_string(obj.class_id));
    }
    if (obj.mask.size() != scene.cloud.size()) {
      throw DataError("object " + std::to_string(obj.instance_id) +
                      ": mask length " + std::to_string(obj.mask.size()) +
                      " != cloud size " + std::to_string(scene.cloud.size()));
    }
    if (obj.mask.popcount() == 0) {
      throw DataError("object " + std::to_string(obj.instance_id) +
                      " has an empty mask");
    }
  }
  for (size_t i = 0; i < scene.objects.size(); ++i) {
    for (size_t j = i + 1; j < scene.objects.size(); ++j) {
      if (scene.objects[i].mask.intersects(scene.objects[j].mask)) {
        throw DataError("masks of instances " +
                        std::to_string(scene.objects[i].instance_id) + " and " +
                        std::to_string(scene.objects[j].instance_id) +
                        " overlap");
      }
    }
  }
  for (const auto& rel : scene.relations) {
    if (!scene.find_object(rel.subject)) {
      throw DataError("relation subject " + std::to_string(rel.subject) +
                      " not in scene");
    }
    for (int obj_id : rel.objects) {
      if (!scene.find_object(obj_id)) {
        throw DataError("relation object " + std::to_string(obj_id) +
                        " not in scene");
      }
    }
  }
}

CanonicalizeResult canonicalize(const PointCloud& cloud) {
  check_cloud(cloud);
  std::vector<int> order(cloud.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ia = static_cast<size_t>(a);
    const auto ib = static_cast<size_t>(b);
    if (cloud.points[ia] != cloud.points[ib]) {
      return cloud.points[ia] < cloud.points[ib];
    }
    if (cloud.colors[ia] != cloud.colors[ib]) {
      return cloud.colors[ia] < cloud.colors[ib];
    }
    return a < b;
  });
  CanonicalizeResult result;
  result.permutation = order;
  result.cloud.points.reserve(cloud.size());
  result.cloud.colors.reserve(cloud.size());
  for (int old_index : order) {
    result.cloud.points.push_back(cloud.points[static_cast<size_t>(old_index)]);
    result.cloud.colors.push_back(cloud.colors[static_cast<size_t>(old_index)]);
  }
  return result;
}

InstanceMask apply_permutation(const InstanceMask& mask,
                               const std::vector<int>& permutation) {
  if (mask.size() != permutation.size()) {
    throw DataError("mask length " + std::to_string(mask.size()) +
                    " != permutation length " +
                    std::to_string(permutation.size()));
  }
  InstanceMask out;
  out.bits.resize(mask.size());
  for (size_t i = 0; i < permutation.size(); ++i) {
    out.bits[i] = mask.bits[static_cast<size_t>(permutation[i])];
  }
  return out;
}

Scene canonicalize_scene(const Scene& scene) {
  Scene out = scene;
  auto canon = canonicalize(scene.cloud);
  out.cloud = std::move(canon.cloud);
  for (auto& obj : out.objects) {
    obj.mask = apply_permutation(obj.mask, canon.permutation);
  }
  return out;
}

std::vector<int> instance_id_per_point(const Scene& scene) {
  std::vector<int> ids(scene.cloud.size(), 0);
  for (const auto& obj : scene.objects) {
    for (size_t i = 0; i < obj.mask.size(); ++i) {
      if (obj.mask.bits[i]) ids[i] = obj.instance_id;
    }
  }
  return ids;
}

std::string scene_to_json(const Scene& scene) {
  check_scene(scene);
  json j;
  j["id"] = scene.id;
  json points = json::array();
  json colors = json::array();
  for (size_t i = 0; i < scene.cloud.size(); ++i) {
    const auto& p = scene.cloud.points[i];
    const auto& c = scene.cloud.colors[i];
    points.push_back({p[0], p[1], p[2]});
    colors.push_back({c[0], c[1], c[2]});
  }
  j["points"] = std::move(points);
  j["colors"] = std::move(colors);
  j["instance_ids"] = instance_id_per_point(scene);
  json objects = json::array();
  for (const auto& obj : scene.objects) {
    objects.push_back({{"instance_id", obj.instance_id},
                       {"class_id", obj.class_id},
                       {"class_name", obj.class_name}});
  }
  j["objects"] = std::move(objects);
  return j.dump();
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw DataError(where + ": unknown field '" + it.key() + "'");
    }
  }
}

}  // namespace

Scene scene_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("scene JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw DataError("scene JSON root must be an object");
  reject_unknown_keys(j, {"id", "points", "colors", "instance_ids", "objects"},
                      "scene");
  Scene scene;
  try {
    scene.id = j.at("id").get<std::string>();
    for (const auto& p : j.at("points")) {
      scene.cloud.points.push_back(
          {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    }
    for (const auto& c : j.at("colors")) {
      scene.cloud.colors.push_back(
          {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()});
    }
    std::vector<int> instance_ids = j.at("instance_ids").get<std::vector<int>>();
    if (instance_ids.size() != scene.cloud.size()) {
      throw DataError("instance_ids length " +
                      std::to_string(instance_ids.size()) +
                      " != points length " + std::to_string(scene.cloud.size()));
    }
    for (const auto& jo : j.at("objects")) {
      reject_unknown_keys(jo, {"instance_id", "class_id", "class_name"},
                          "scene object");
      SceneObject obj;
      obj.instance_id = jo.at("instance_id").get<int>();
      obj.class_id = jo.at("class_id").get<int>();
      obj.class_name = jo.at("class_name").get<std::string>();
      obj.mask.bits.assign(scene.cloud.size(), 0);
      for (size_t i = 0; i < instance_ids.size(); ++i) {
        if (instance_ids[i] == obj.instance_id) obj.mask.bits[i] = 1;
      }
      scene.objects.push_back(std::move(obj));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("scene JSON schema error: ") + e.what());
  }
  check_scene(scene);
  scene.relations = extract_relations(scene);
  return scene;
}

void write_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << scene_to_json(scene) << "\n";
  if (!out) throw DataError("write failed: " + path);
}

Scene read_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open scene file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return scene_from_json(buffer.str());
}

}  // namespace more3d
