#include "more3d/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "more3d/errors.hpp"

namespace more3d {

using json = nlohmann::json;

namespace {

void put_u32(std::ostream& out, std::uint32_t value) {
  unsigned char bytes[4] = {static_cast<unsigned char>(value & 0xff),
                            static_cast<unsigned char>((value >> 8) & 0xff),
                            static_cast<unsigned char>((value >> 16) & 0xff),
                            static_cast<unsigned char>((value >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw DataError("checkpoint truncated while reading " + what);
  }
  return static_cast<std::uint32_t>(bytes[0]) |
         (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void put_f32(std::ostream& out, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  put_u32(out, bits);
}

float get_f32(std::istream& in, const std::string& what) {
  const std::uint32_t bits = get_u32(in, what);
  float value;
  std::memcpy(&value, &bits, 4);
  return value;
}

}  // namespace

std::size_t NamedTensor::element_count() const {
  std::size_t count = 1;
  for (auto d : dims) count *= d;
  return count;
}

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& tensor : tensors) {
    if (tensor.name == name) return &tensor;
  }
  return nullptr;
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  const std::string config = ckpt.config.dump();
  put_u32(out, static_cast<std::uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  for (const auto& tensor : ckpt.tensors) {
    put_u32(out, static_cast<std::uint32_t>(tensor.name.size()));
    out.write(tensor.name.data(),
              static_cast<std::streamsize>(tensor.name.size()));
    put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
    for (auto d : tensor.dims) put_u32(out, d);
    if (tensor.data.size() != tensor.element_count()) {
      throw RuntimeFault("tensor '" + tensor.name + "' data/dims mismatch");
    }
    for (float value : tensor.data) put_f32(out, value);
  }
  if (!out) throw DataError("write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw DataError("not a checkpoint file (bad magic): " + path);
  }
  const std::uint32_t version = get_u32(in, "version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t config_len = get_u32(in, "config length");
  std::string config_text(config_len, '\0');
  if (!in.read(config_text.data(), config_len)) {
    throw DataError("checkpoint truncated while reading config");
  }
  Checkpoint ckpt;
  try {
    ckpt.config = json::parse(config_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint config parse error: ") + e.what());
  }
  while (true) {
    in.peek();
    if (in.eof()) break;
    NamedTensor tensor;
    const std::uint32_t name_len = get_u32(in, "tensor name length");
    tensor.name.resize(name_len);
    if (!in.read(tensor.name.data(), name_len)) {
      throw DataError("checkpoint truncated while reading tensor name");
    }
    const std::uint32_t rank = get_u32(in, "tensor rank");
    tensor.dims.resize(rank);
    for (std::uint32_t r = 0; r < rank; ++r) {
      tensor.dims[r] = get_u32(in, "tensor dims");
    }
    const std::size_t count = tensor.element_count();
    tensor.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      tensor.data[i] = get_f32(in, "tensor data");
    }
    ckpt.tensors.push_back(std::move(tensor));
  }
  return ckpt;
}

Checkpoint make_model_checkpoint(Model<float>& model, const Vocab& vocab) {
  Checkpoint ckpt;
  ckpt.config["model"] = model.config().to_json();
  ckpt.config["vocab"] = vocab.words();
  ckpt.tensors = model_tensors(model);
  return ckpt;
}

LoadedModel parse_model_config(const Checkpoint& ckpt) {
  if (!ckpt.config.contains("model") || !ckpt.config.contains("vocab")) {
    throw DataError("checkpoint config lacks model or vocab block");
  }
  LoadedModel loaded;
  loaded.config = ModelConfig::from_json(ckpt.config["model"]);
  json vocab_json;
  vocab_json["tokens"] = ckpt.config["vocab"];
  loaded.vocab = Vocab::from_json(vocab_json.dump());
  if (loaded.config.vocab_size != loaded.vocab.size()) {
    throw DataError("checkpoint vocab size " +
                    std::to_string(loaded.vocab.size()) +
                    " != config vocab_size " +
                    std::to_string(loaded.config.vocab_size));
  }
  return loaded;
}

}  // namespace more3d
