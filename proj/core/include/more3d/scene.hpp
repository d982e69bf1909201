#ifndef MORE3D_SCENE_HPP_
#define MORE3D_SCENE_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace more3d {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

// Point cloud in meters with per-point rgb in [0,1].
struct PointCloud {
  std::vector<std::array<double, 3>> points;
  std::vector<std::array<double, 3>> colors;

  size_t size() const { return points.size(); }
};

// Throws DataError naming the first offending index if a coordinate or color
// entry is non-finite, sizes disagree, or the cloud is empty.
void check_cloud(const PointCloud& cloud);

// Binary membership over the owning scene's points.
struct InstanceMask {
  std::vector<std::uint8_t> bits;

  size_t size() const { return bits.size(); }
  size_t popcount() const;
  bool intersects(const InstanceMask& other) const;
};

struct SceneObject {
  int instance_id = 0;  // >= 1; 0 is reserved for background/floor points
  int class_id = 0;
  std::string class_name;
  InstanceMask mask;
};

enum class RelationKind {
  kLeftOf = 0,
  kRightOf,
  kInFrontOf,
  kBehind,
  kNextTo,
  kOnTopOf,
  kBetween,
};

const char* relation_kind_name(RelationKind kind);

struct SpatialRelation {
  RelationKind kind = RelationKind::kNextTo;
  int subject = 0;              // instance_id being located
  std::vector<int> objects;     // 1 reference object, 2 for kBetween
  std::string phrase;           // natural-language rendering
};

struct Scene {
  std::string id;
  PointCloud cloud;
  std::vector<SceneObject> objects;
  std::vector<SpatialRelation> relations;

  const SceneObject* find_object(int instance_id) const;
};

// Full consistency check: cloud validity, unique positive instance ids,
// mask lengths, non-empty masks, pairwise disjointness, relation references.
void check_scene(const Scene& scene);

struct CanonicalizeResult {
  PointCloud cloud;
  // permutation[new_index] == old_index; masks re-index via
  // new_bits[i] = old_bits[permutation[i]].
  std::vector<int> permutation;
};

// Sorts points lexicographically by (x,y,z), ties by (r,g,b), then by
// original index. Rejects non-finite input naming the offending index.
CanonicalizeResult canonicalize(const PointCloud& cloud);

// Applies a canonicalize() permutation to a mask.
InstanceMask apply_permutation(const InstanceMask& mask,
                               const std::vector<int>& permutation);

// Re-orders the whole scene's cloud and masks into canonical order.
Scene canonicalize_scene(const Scene& scene);

// Per-point instance ids (0 = background), derived from object masks.
std::vector<int> instance_id_per_point(const Scene& scene);

// Scene file schema:
// {"id", "points": [[x,y,z],...], "colors": [[r,g,b],...],
//  "instance_ids": [int,...], "objects": [{"instance_id","class_id",
//  "class_name"},...]}
// Unknown keys are rejected. Relations are recomputed on load.
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);
void write_scene(const Scene& scene, const std::string& path);
Scene read_scene(const std::string& path);

}  // namespace more3d

#endif  // MORE3D_SCENE_HPP_
