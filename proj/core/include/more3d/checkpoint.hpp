#ifndef MORE3D_CHECKPOINT_HPP_
#define MORE3D_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "more3d/model.hpp"
#include "more3d/text.hpp"

namespace more3d {

// Checkpoint file, little-endian:
//   magic "MOR3", format version u32, config JSON block (u32 length prefix),
//   then named tensors: name length u32, name bytes, rank u32, dims
//   u32 x rank, float32 data.
inline constexpr char kCheckpointMagic[4] = {'M', 'O', 'R', '3'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

struct Checkpoint {
  nlohmann::json config;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
};

void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

// --- model <-> tensor glue -------------------------------------------------

template <typename T>
std::vector<NamedTensor> model_tensors(Model<T>& model) {
  std::vector<NamedTensor> out;
  for (auto* param : model.params()) {
    NamedTensor tensor;
    tensor.name = param->name;
    tensor.dims = {static_cast<std::uint32_t>(param->value.rows()),
                   static_cast<std::uint32_t>(param->value.cols())};
    tensor.data.reserve(static_cast<size_t>(param->value.size()));
    for (Eigen::Index r = 0; r < param->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < param->value.cols(); ++c) {
        tensor.data.push_back(static_cast<float>(param->value(r, c)));
      }
    }
    out.push_back(std::move(tensor));
  }
  return out;
}

template <typename T>
void load_model_tensors(Model<T>& model, const Checkpoint& ckpt) {
  for (auto* param : model.params()) {
    const NamedTensor* tensor = ckpt.find(param->name);
    if (!tensor) {
      throw DataError("checkpoint is missing tensor '" + param->name + "'");
    }
    if (tensor->dims.size() != 2 ||
        tensor->dims[0] != static_cast<std::uint32_t>(param->value.rows()) ||
        tensor->dims[1] != static_cast<std::uint32_t>(param->value.cols())) {
      throw DataError("checkpoint tensor '" + param->name +
                      "' has mismatched shape");
    }
    size_t i = 0;
    for (Eigen::Index r = 0; r < param->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < param->value.cols(); ++c) {
        param->value(r, c) = static_cast<T>(tensor->data[i++]);
      }
    }
  }
}

// Self-contained model checkpoint: config block carries the model config and
// the vocabulary so eval/infer need no side files.
Checkpoint make_model_checkpoint(Model<float>& model, const Vocab& vocab);

struct LoadedModel {
  ModelConfig config;
  Vocab vocab;
};

// Parses the config block; the caller constructs Model(config) and then
// load_model_tensors.
LoadedModel parse_model_config(const Checkpoint& ckpt);

}  // namespace more3d

#endif  // MORE3D_CHECKPOINT_HPP_
