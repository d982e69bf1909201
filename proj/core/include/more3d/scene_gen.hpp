#ifndef MORE3D_SCENE_GEN_HPP_
#define MORE3D_SCENE_GEN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "more3d/scene.hpp"

namespace more3d {

struct SceneSpec {
  std::string id = "scene";
  int n_objects = 4;
  std::vector<int> class_pool;       // empty -> default_class_pool()
  double room_x = 4.0;               // room extent in meters
  double room_y = 4.0;
  double density = 800.0;            // object points per cubic meter
  double floor_points_per_m2 = 60.0;
  int min_points_per_object = 50;
  double stack_probability = 0.3;    // chance to place an object on a support
  int max_placement_retries = 100;
};

// Procedural room: axis-aligned boxes/cylinders without pairwise volume
// overlap, floor points carrying instance id 0, canonical point order,
// relations populated. Deterministic for fixed (spec, seed).
Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

}  // namespace more3d

#endif  // MORE3D_SCENE_GEN_HPP_
