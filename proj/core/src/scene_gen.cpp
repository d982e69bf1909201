#include "more3d/scene_gen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "more3d/classes.hpp"
#include "more3d/errors.hpp"
#include "more3d/relations.hpp"
#include "more3d/rng.hpp"

namespace more3d {

namespace {

struct SizeRange {
  double min_x, max_x, min_y, max_y, min_z, max_z;
  double lift_min = 0.0, lift_max = 0.0;  // base height above the floor
  bool cylinder = false;
};

// Rough real-world dimensions per class, meters.
const SizeRange& size_range(int class_id) {
  static const std::map<std::string, SizeRange> table = {
      {"wall", {2.0, 4.0, 0.1, 0.2, 2.2, 2.5}},
      {"floor", {2.0, 4.0, 2.0, 4.0, 0.02, 0.05}},
      {"cabinet", {0.6, 1.2, 0.4, 0.6, 0.9, 1.8}},
      {"bed", {1.6, 2.1, 1.4, 1.9, 0.4, 0.7}},
      {"chair", {0.4, 0.6, 0.4, 0.6, 0.8, 1.1}},
      {"sofa", {1.5, 2.3, 0.8, 1.1, 0.7, 1.0}},
      {"table", {1.0, 1.9, 0.7, 1.1, 0.7, 0.8}},
      {"door", {0.9, 1.1, 0.1, 0.15, 1.9, 2.1}},
      {"window", {0.8, 1.6, 0.08, 0.12, 1.0, 1.5, 0.8, 1.0}},
      {"bookshelf", {0.8, 1.4, 0.3, 0.45, 1.5, 2.0}},
      {"picture", {0.4, 0.9, 0.03, 0.06, 0.3, 0.6, 1.2, 1.6}},
      {"counter", {1.2, 2.4, 0.6, 0.7, 0.85, 0.95}},
      {"desk", {1.1, 1.6, 0.6, 0.8, 0.72, 0.78}},
      {"curtain", {1.0, 2.0, 0.05, 0.1, 1.8, 2.2, 0.3, 0.4}},
      {"refrigerator", {0.6, 0.8, 0.6, 0.8, 1.6, 2.0}},
      {"shower curtain", {1.0, 1.6, 0.05, 0.1, 1.7, 2.0, 0.2, 0.3}},
      {"toilet", {0.36, 0.44, 0.36, 0.44, 0.4, 0.45, 0.0, 0.0, true}},
      {"sink", {0.3, 0.5, 0.3, 0.5, 0.15, 0.25, 0.8, 0.9, true}},
      {"bathtub", {1.5, 1.8, 0.7, 0.8, 0.5, 0.6}},
      {"otherfurniture", {0.25, 0.9, 0.25, 0.9, 0.3, 1.2}},
  };
  return table.at(class_name(class_id));
}

struct Box {
  double min[3];
  double max[3];

  bool overlaps(const Box& other, double margin) const {
    for (int a = 0; a < 3; ++a) {
      if (min[a] - margin >= other.max[a] || other.min[a] - margin >= max[a]) {
        return false;
      }
    }
    return true;
  }
};

bool class_supports_stacking(int class_id) {
  const std::string& name = class_name(class_id);
  return name == "table" || name == "desk" || name == "counter" ||
         name == "cabinet";
}

}  // namespace

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.n_objects < 1) {
    throw UsageError("n_objects must be >= 1, got " +
                     std::to_string(spec.n_objects));
  }
  const std::vector<int>& pool =
      spec.class_pool.empty() ? default_class_pool() : spec.class_pool;

  Rng rng(Rng::mix(seed, 0x5ce9e));
  Scene scene;
  scene.id = spec.id;

  constexpr double kMargin = 0.02;
  std::vector<Box> placed;
  std::vector<int> placed_class;

  struct Pending {
    Box box;
    int class_id;
    bool cylinder;
  };
  std::vector<Pending> pending;

  for (int i = 0; i < spec.n_objects; ++i) {
    const int class_id =
        pool[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
    const SizeRange& range = size_range(class_id);
    const double sx = rng.uniform(range.min_x, range.max_x);
    const double sy = rng.uniform(range.min_y, range.max_y);
    const double sz = rng.uniform(range.min_z, range.max_z);

    // Sometimes rest a small object on an earlier support with a flat top.
    int support = -1;
    if (rng.bernoulli(spec.stack_probability)) {
      for (size_t p = 0; p < placed.size(); ++p) {
        const double top_x = placed[p].max[0] - placed[p].min[0];
        const double top_y = placed[p].max[1] - placed[p].min[1];
        if (class_supports_stacking(placed_class[p]) && sx < 0.6 * top_x &&
            sy < 0.6 * top_y) {
          support = static_cast<int>(p);
          break;
        }
      }
    }

    bool ok = false;
    Box box{};
    for (int attempt = 0; attempt < spec.max_placement_retries; ++attempt) {
      double cx, cy, base;
      if (support >= 0) {
        const Box& s = placed[static_cast<size_t>(support)];
        const double slack_x = (s.max[0] - s.min[0] - sx) * 0.5 - kMargin;
        const double slack_y = (s.max[1] - s.min[1] - sy) * 0.5 - kMargin;
        const double mid_x = 0.5 * (s.min[0] + s.max[0]);
        const double mid_y = 0.5 * (s.min[1] + s.max[1]);
        cx = mid_x + rng.uniform(-slack_x, slack_x);
        cy = mid_y + rng.uniform(-slack_y, slack_y);
        base = s.max[2] + 0.01;
      } else {
        cx = rng.uniform(sx * 0.5, spec.room_x - sx * 0.5);
        cy = rng.uniform(sy * 0.5, spec.room_y - sy * 0.5);
        base = rng.uniform(range.lift_min, range.lift_max);
      }
      box = Box{{cx - sx * 0.5, cy - sy * 0.5, base},
                {cx + sx * 0.5, cy + sy * 0.5, base + sz}};
      ok = true;
      for (const Box& other : placed) {
        if (box.overlaps(other, kMargin)) {
          ok = false;
          break;
        }
      }
      if (ok) break;
      // Fall back to a free-floor try after a few failed stacked ones.
      if (support >= 0 && attempt >= 10) support = -1;
    }
    if (!ok) {
      throw RuntimeFault("object " + std::to_string(i) + " (" +
                         class_name(class_id) + "): placement failed after " +
                         std::to_string(spec.max_placement_retries) +
                         " retries");
    }
    placed.push_back(box);
    placed_class.push_back(class_id);
    pending.push_back({box, class_id, size_range(class_id).cylinder});
  }

  // Floor sheet, instance id 0.
  {
    const int n_floor = std::max(
        64, static_cast<int>(spec.room_x * spec.room_y * spec.floor_points_per_m2));
    for (int i = 0; i < n_floor; ++i) {
      const double x = rng.uniform(0.0, spec.room_x);
      const double y = rng.uniform(0.0, spec.room_y);
      const double z = rng.uniform(0.0, 0.02);
      scene.cloud.points.push_back({x, y, z});
      const double shade = 0.45 + 0.08 * rng.uniform();
      scene.cloud.colors.push_back({shade, shade * 0.96, shade * 0.9});
    }
  }

  // Object volumes. Point membership is recorded per original index and
  // remapped after canonicalization.
  std::vector<std::vector<size_t>> member_indices(pending.size());
  for (size_t oi = 0; oi < pending.size(); ++oi) {
    const Pending& p = pending[oi];
    const double ex = p.box.max[0] - p.box.min[0];
    const double ey = p.box.max[1] - p.box.min[1];
    const double ez = p.box.max[2] - p.box.min[2];
    double volume = ex * ey * ez;
    if (p.cylinder) volume *= 0.7853981633974483;  // pi/4 of the bounding box
    const int n_points = std::max(spec.min_points_per_object,
                                  static_cast<int>(std::lround(volume * spec.density)));
    const auto base_color = class_base_color(p.class_id);
    for (int k = 0; k < n_points; ++k) {
      double x, y;
      if (p.cylinder) {
        const double r = 0.5 * std::min(ex, ey) * std::sqrt(rng.uniform());
        const double phi = rng.uniform(0.0, 6.283185307179586);
        x = 0.5 * (p.box.min[0] + p.box.max[0]) + r * std::cos(phi);
        y = 0.5 * (p.box.min[1] + p.box.max[1]) + r * std::sin(phi);
      } else {
        x = rng.uniform(p.box.min[0], p.box.max[0]);
        y = rng.uniform(p.box.min[1], p.box.max[1]);
      }
      const double z = rng.uniform(p.box.min[2], p.box.max[2]);
      member_indices[oi].push_back(scene.cloud.points.size());
      scene.cloud.points.push_back({x, y, z});
      scene.cloud.colors.push_back(
          {std::clamp(base_color[0] + rng.uniform(-0.05, 0.05), 0.0, 1.0),
           std::clamp(base_color[1] + rng.uniform(-0.05, 0.05), 0.0, 1.0),
           std::clamp(base_color[2] + rng.uniform(-0.05, 0.05), 0.0, 1.0)});
    }
  }

  const size_t total = scene.cloud.size();
  for (size_t oi = 0; oi < pending.size(); ++oi) {
    SceneObject obj;
    obj.instance_id = static_cast<int>(oi) + 1;
    obj.class_id = pending[oi].class_id;
    obj.class_name = class_name(obj.class_id);
    obj.mask.bits.assign(total, 0);
    for (size_t idx : member_indices[oi]) obj.mask.bits[idx] = 1;
    scene.objects.push_back(std::move(obj));
  }

  scene = canonicalize_scene(scene);
  scene.relations = extract_relations(scene);
  check_scene(scene);
  return scene;
}

}  // namespace more3d
