#include "more3d/classes.hpp"

#include "more3d/errors.hpp"

namespace more3d {

const std::array<std::string, kNumClasses>& class_names() {
  static const std::array<std::string, kNumClasses> names = {
      "wall",           "floor",   "cabinet", "bed",          "chair",
      "sofa",           "table",   "door",    "window",       "bookshelf",
      "picture",        "counter", "desk",    "curtain",      "refrigerator",
      "shower curtain", "toilet",  "sink",    "bathtub",      "otherfurniture"};
  return names;
}

int class_id_from_name(const std::string& name) {
  const auto& names = class_names();
  for (int i = 0; i < kNumClasses; ++i) {
    if (names[static_cast<size_t>(i)] == name) return i;
  }
  return -1;
}

const std::string& class_name(int class_id) {
  if (class_id < 0 || class_id >= kNumClasses) {
    throw DataError("class_id out of range [0,19]: " + std::to_string(class_id));
  }
  return class_names()[static_cast<size_t>(class_id)];
}

std::array<double, 3> class_base_color(int class_id) {
  static const std::array<std::array<double, 3>, kNumClasses> palette = {{
      {0.68, 0.78, 0.91}, {0.59, 0.87, 0.54}, {0.12, 0.47, 0.71},
      {1.00, 0.73, 0.47}, {0.74, 0.61, 0.42}, {0.55, 0.34, 0.29},
      {1.00, 0.60, 0.59}, {0.84, 0.15, 0.16}, {0.77, 0.69, 0.84},
      {0.58, 0.40, 0.74}, {0.77, 0.61, 0.58}, {0.09, 0.75, 0.81},
      {0.78, 0.78, 0.78}, {0.86, 0.86, 0.55}, {1.00, 0.50, 0.05},
      {0.65, 0.81, 0.89}, {0.17, 0.63, 0.17}, {0.98, 0.60, 0.84},
      {0.50, 0.50, 0.00}, {0.44, 0.44, 0.56},
  }};
  class_name(class_id);  // range check
  return palette[static_cast<size_t>(class_id)];
}

const std::vector<int>& default_class_pool() {
  static const std::vector<int> pool = {
      class_id_from_name("cabinet"),      class_id_from_name("bed"),
      class_id_from_name("chair"),        class_id_from_name("sofa"),
      class_id_from_name("table"),        class_id_from_name("bookshelf"),
      class_id_from_name("counter"),      class_id_from_name("desk"),
      class_id_from_name("refrigerator"), class_id_from_name("toilet"),
      class_id_from_name("sink"),         class_id_from_name("bathtub"),
      class_id_from_name("otherfurniture")};
  return pool;
}

}  // namespace more3d
