#ifndef MORE3D_RELATIONS_HPP_
#define MORE3D_RELATIONS_HPP_

#include <array>
#include <vector>

#include "more3d/scene.hpp"

namespace more3d {

// Geometry thresholds for relation extraction. The viewer convention is
// world +x = "right", +y = "front".
struct RelationThresholds {
  double next_to_gap = 0.25;        // max AABB-to-AABB distance
  double axis_min_offset = 0.5;     // min dominant horizontal centroid offset
  double on_top_contact = 0.15;     // max vertical gap base-above-top
  double on_top_sink = 0.05;        // tolerated base sink below the top
  double between_dist = 0.3;        // max centroid-to-segment distance
};

struct ObjectGeometry {
  Vec3 centroid;
  Vec3 aabb_min;
  Vec3 aabb_max;
};

// Centroid and axis-aligned bounds of the object's masked points.
ObjectGeometry object_geometry(const Scene& scene, const SceneObject& object);

// Relations from centroids and AABBs under the given thresholds, ordered by
// (kind, subject id, object ids). Single-object scenes yield an empty list.
std::vector<SpatialRelation> extract_relations(
    const Scene& scene, const RelationThresholds& thresholds = {});

}  // namespace more3d

#endif  // MORE3D_RELATIONS_HPP_
