#ifndef MORE3D_CLASSES_HPP_
#define MORE3D_CLASSES_HPP_

#include <array>
#include <string>
#include <vector>

namespace more3d {

inline constexpr int kNumClasses = 20;

// ScanNet-20 label palette. class_id is the index into this table.
const std::array<std::string, kNumClasses>& class_names();

// -1 if the name is not one of the 20 canonical names.
int class_id_from_name(const std::string& name);

const std::string& class_name(int class_id);

// Deterministic display color for a class, rgb in [0,1].
std::array<double, 3> class_base_color(int class_id);

// Default class pool for procedural scenes: free-standing furniture only.
const std::vector<int>& default_class_pool();

}  // namespace more3d

#endif  // MORE3D_CLASSES_HPP_
