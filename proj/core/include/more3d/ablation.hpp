#ifndef MORE3D_ABLATION_HPP_
#define MORE3D_ABLATION_HPP_

#include <string>
#include <vector>

#include "more3d/losses.hpp"
#include "more3d/model.hpp"
#include "more3d/qa.hpp"
#include "more3d/train.hpp"

namespace more3d {

struct AblationCell {
  std::string name;
  LossToggles losses;
  HeadMode head_mode = HeadMode::kSeparated;
};

struct AblationResult {
  std::string name;
  bool trained = false;
  double ciou = 0.0;
  double giou = 0.0;
  std::string error;
};

// Trains every cell with a shared seed and budget (fresh model per cell) and
// evaluates on the given split. A failing cell is marked, not fatal.
std::vector<AblationResult> run_ablation(const std::vector<AblationCell>& cells,
                                         const Dataset& train,
                                         const Dataset& eval_split,
                                         const ModelConfig& base_config,
                                         const TrainConfig& train_config);

// Loss matrix: answer/mask toggles off->on with classification always
// supervised. Four rows.
std::vector<AblationCell> loss_ablation_cells(HeadMode head_mode);

// Head matrix: unified vs separated with all losses on. Two rows.
std::vector<AblationCell> head_ablation_cells();

std::string ablation_table_text(const std::vector<AblationResult>& results);
std::string ablation_table_json(const std::vector<AblationResult>& results);

}  // namespace more3d

#endif  // MORE3D_ABLATION_HPP_
