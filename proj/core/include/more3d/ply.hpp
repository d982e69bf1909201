#ifndef MORE3D_PLY_HPP_
#define MORE3D_PLY_HPP_

#include <string>
#include <vector>

#include "more3d/scene.hpp"

namespace more3d {

// Deterministic instance colors by mask order; background points are gray.
std::array<int, 3> instance_color(int order_index);

// ASCII PLY with per-point uchar colors assigned by mask membership. Masks
// must match the cloud length; later masks win on (invalid) overlaps.
void write_colored_ply(const PointCloud& cloud,
                       const std::vector<InstanceMask>& masks,
                       const std::string& path);

}  // namespace more3d

#endif  // MORE3D_PLY_HPP_
