#ifndef MORE3D_EVALUATE_HPP_
#define MORE3D_EVALUATE_HPP_

#include <string>
#include <vector>

#include "more3d/metrics.hpp"
#include "more3d/model.hpp"
#include "more3d/qa.hpp"

namespace more3d {

struct EvalOptions {
  int gen_max_len = 48;
};

// Inference over every sample (generation, not teacher forcing), alignment
// against GT masks, and metric aggregation in sample order.
EvalSummary evaluate_model(Model<float>& model, const Vocab& vocab,
                           const Dataset& ds, const EvalOptions& options = {});

}  // namespace more3d

#endif  // MORE3D_EVALUATE_HPP_
