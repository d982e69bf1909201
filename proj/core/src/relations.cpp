#include "more3d/relations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "more3d/errors.hpp"

namespace more3d {

namespace {

double aabb_distance(const ObjectGeometry& a, const ObjectGeometry& b) {
  const double gx = std::max({0.0, a.aabb_min.x - b.aabb_max.x,
                              b.aabb_min.x - a.aabb_max.x});
  const double gy = std::max({0.0, a.aabb_min.y - b.aabb_max.y,
                              b.aabb_min.y - a.aabb_max.y});
  const double gz = std::max({0.0, a.aabb_min.z - b.aabb_max.z,
                              b.aabb_min.z - a.aabb_max.z});
  return std::sqrt(gx * gx + gy * gy + gz * gz);
}

double horizontal_distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Circumradius of the horizontal footprint rectangle.
double footprint_radius(const ObjectGeometry& g) {
  return 0.5 * std::hypot(g.aabb_max.x - g.aabb_min.x,
                          g.aabb_max.y - g.aabb_min.y);
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const double dx = b.x - a.x, dy = b.y - a.y, dz = b.z - a.z;
  const double len2 = dx * dx + dy * dy + dz * dz;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((p.x - a.x) * dx + (p.y - a.y) * dy + (p.z - a.z) * dz) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double cx = a.x + t * dx - p.x;
  const double cy = a.y + t * dy - p.y;
  const double cz = a.z + t * dz - p.z;
  return std::sqrt(cx * cx + cy * cy + cz * cz);
}

std::string article_name(const Scene& scene, int instance_id) {
  const SceneObject* obj = scene.find_object(instance_id);
  return "the " + (obj ? obj->class_name : std::string("object"));
}

std::string render_phrase(const Scene& scene, const SpatialRelation& rel) {
  const std::string subj = article_name(scene, rel.subject);
  switch (rel.kind) {
    case RelationKind::kLeftOf:
      return subj + " is to the left of " + article_name(scene, rel.objects[0]);
    case RelationKind::kRightOf:
      return subj + " is to the right of " + article_name(scene, rel.objects[0]);
    case RelationKind::kInFrontOf:
      return subj + " is in front of " + article_name(scene, rel.objects[0]);
    case RelationKind::kBehind:
      return subj + " is behind " + article_name(scene, rel.objects[0]);
    case RelationKind::kNextTo:
      return subj + " is next to " + article_name(scene, rel.objects[0]);
    case RelationKind::kOnTopOf:
      return subj + " is on top of " + article_name(scene, rel.objects[0]);
    case RelationKind::kBetween:
      return subj + " is between " + article_name(scene, rel.objects[0]) +
             " and " + article_name(scene, rel.objects[1]);
  }
  return subj;
}

}  // namespace

ObjectGeometry object_geometry(const Scene& scene, const SceneObject& object) {
  if (object.mask.size() != scene.cloud.size()) {
    throw DataError("object mask length does not match scene cloud");
  }
  ObjectGeometry g;
  g.aabb_min = {std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
  g.aabb_max = {-std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
  double sx = 0.0, sy = 0.0, sz = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < object.mask.size(); ++i) {
    if (!object.mask.bits[i]) continue;
    const auto& p = scene.cloud.points[i];
    sx += p[0];
    sy += p[1];
    sz += p[2];
    g.aabb_min.x = std::min(g.aabb_min.x, p[0]);
    g.aabb_min.y = std::min(g.aabb_min.y, p[1]);
    g.aabb_min.z = std::min(g.aabb_min.z, p[2]);
    g.aabb_max.x = std::max(g.aabb_max.x, p[0]);
    g.aabb_max.y = std::max(g.aabb_max.y, p[1]);
    g.aabb_max.z = std::max(g.aabb_max.z, p[2]);
    ++n;
  }
  if (n == 0) throw DataError("object has an empty mask");
  g.centroid = {sx / static_cast<double>(n), sy / static_cast<double>(n),
                sz / static_cast<double>(n)};
  return g;
}

std::vector<SpatialRelation> extract_relations(
    const Scene& scene, const RelationThresholds& thresholds) {
  if (scene.objects.empty()) throw DataError("scene has no objects");

  std::vector<ObjectGeometry> geom;
  geom.reserve(scene.objects.size());
  for (const auto& obj : scene.objects) {
    geom.push_back(object_geometry(scene, obj));
  }

  std::vector<SpatialRelation> out;
  const size_t n = scene.objects.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const int a_id = scene.objects[i].instance_id;
      const int b_id = scene.objects[j].instance_id;
      const auto& a = geom[i];
      const auto& b = geom[j];

      // Dominant horizontal axis, subject relative to object.
      const double dx = a.centroid.x - b.centroid.x;
      const double dy = a.centroid.y - b.centroid.y;
      if (std::abs(dx) >= std::abs(dy) &&
          std::abs(dx) >= thresholds.axis_min_offset) {
        out.push_back({dx < 0 ? RelationKind::kLeftOf : RelationKind::kRightOf,
                       a_id,
                       {b_id},
                       ""});
      } else if (std::abs(dy) > std::abs(dx) &&
                 std::abs(dy) >= thresholds.axis_min_offset) {
        out.push_back(
            {dy > 0 ? RelationKind::kInFrontOf : RelationKind::kBehind,
             a_id,
             {b_id},
             ""});
      }

      if (aabb_distance(a, b) < thresholds.next_to_gap) {
        out.push_back({RelationKind::kNextTo, a_id, {b_id}, ""});
      }

      const double lift = a.aabb_min.z - b.aabb_max.z;
      if (lift >= -thresholds.on_top_sink && lift <= thresholds.on_top_contact &&
          horizontal_distance(a.centroid, b.centroid) <
              0.5 * footprint_radius(b)) {
        out.push_back({RelationKind::kOnTopOf, a_id, {b_id}, ""});
      }
    }
  }

  // between: subject centroid close to the segment joining two other
  // centroids; the pair is reported once with ids in ascending order.
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      for (size_t k = j + 1; k < n; ++k) {
        if (i == j || i == k) continue;
        if (point_segment_distance(geom[i].centroid, geom[j].centroid,
                                   geom[k].centroid) <
            thresholds.between_dist) {
          const auto [lo, hi] = std::minmax(scene.objects[j].instance_id,
                                            scene.objects[k].instance_id);
          out.push_back({RelationKind::kBetween,
                         scene.objects[i].instance_id,
                         {lo, hi},
                         ""});
        }
      }
    }
  }

  std::sort(out.begin(), out.end(),
            [](const SpatialRelation& a, const SpatialRelation& b) {
              if (a.kind != b.kind) return a.kind < b.kind;
              if (a.subject != b.subject) return a.subject < b.subject;
              return a.objects < b.objects;
            });
  for (auto& rel : out) rel.phrase = render_phrase(scene, rel);
  return out;
}

}  // namespace more3d
