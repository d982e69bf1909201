#include "more3d/ply.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "more3d/errors.hpp"

namespace more3d {

std::array<int, 3> instance_color(int order_index) {
  static const std::array<std::array<int, 3>, 10> palette = {{
      {230, 75, 60},  {60, 130, 230}, {70, 190, 90},  {240, 180, 40},
      {160, 90, 210}, {240, 120, 40}, {60, 190, 190}, {220, 90, 170},
      {150, 160, 40}, {100, 110, 230},
  }};
  const auto& base = palette[static_cast<size_t>(order_index) % palette.size()];
  // Later cycles darken so colors stay distinct-ish.
  const int cycle = order_index / static_cast<int>(palette.size());
  const double scale = 1.0 / (1.0 + 0.35 * cycle);
  return {static_cast<int>(base[0] * scale), static_cast<int>(base[1] * scale),
          static_cast<int>(base[2] * scale)};
}

void write_colored_ply(const PointCloud& cloud,
                       const std::vector<InstanceMask>& masks,
                       const std::string& path) {
  check_cloud(cloud);
  for (size_t k = 0; k < masks.size(); ++k) {
    if (masks[k].size() != cloud.size()) {
      throw DataError("mask " + std::to_string(k) + " length " +
                      std::to_string(masks[k].size()) + " != cloud size " +
                      std::to_string(cloud.size()));
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "ply\n"
      << "format ascii 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "end_header\n";
  constexpr std::array<int, 3> kBackground = {128, 128, 128};
  char line[128];
  for (size_t i = 0; i < cloud.size(); ++i) {
    std::array<int, 3> color = kBackground;
    for (size_t k = 0; k < masks.size(); ++k) {
      if (masks[k].bits[i]) color = instance_color(static_cast<int>(k));
    }
    const auto& p = cloud.points[i];
    std::snprintf(line, sizeof(line), "%.6f %.6f %.6f %d %d %d\n", p[0], p[1],
                  p[2], color[0], color[1], color[2]);
    out << line;
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace more3d
