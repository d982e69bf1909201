#ifndef MORE3D_MODEL_HPP_
#define MORE3D_MODEL_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "more3d/classes.hpp"
#include "more3d/nn.hpp"
#include "more3d/scene.hpp"
#include "more3d/text.hpp"

namespace more3d {

enum class HeadMode { kUnified, kSeparated };

const char* head_mode_name(HeadMode mode);
HeadMode head_mode_from_name(const std::string& name);

struct ModelConfig {
  int d_point = 64;
  int d_model = 128;
  int n_layers = 2;
  int n_heads = 4;
  int context_len = 256;
  int n_superpoints = 64;
  int k_neighbors = 8;  // reserved; nearest-seed grouping does not use it
  int n_classes = kNumClasses;
  HeadMode head_mode = HeadMode::kSeparated;
  std::uint64_t seed = 1;
  int vocab_size = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Farthest-point-sampled seeds with nearest-seed grouping. Deterministic:
// sampling starts at the first canonical point, ties resolve to the lowest
// index. A superpoint emptied by duplicate-coordinate ties falls back to its
// seed point.
struct SuperpointMap {
  std::vector<int> seeds;                        // point indices, FPS order
  std::vector<int> assignment;                   // point -> superpoint
  std::vector<std::vector<int>> members;         // superpoint -> point indices
  std::vector<std::array<double, 3>> centroids;  // member xyz means
  int fallback_superpoints = 0;                  // seed-only fallbacks taken
};

SuperpointMap build_superpoints(const PointCloud& cloud, int n_superpoints);

template <typename T>
struct GenerateResult {
  TokenSequence tokens;  // generated answer, EOS excluded
  bool truncated = false;
};

// Inference output: answer tokens, marker positions, and per-marker mask and
// class logits.
template <typename T>
struct Prediction {
  TokenSequence answer;
  MultiSegIndexList iseg;
  nn::Mat<T> mask_logits;  // (n_points, S)
  nn::Mat<T> cls_logits;   // (S, n_classes)
  bool truncated = false;
};

// Binary mask per marker: sigmoid(logit) strictly above 0.5; the tie at
// exactly 0.5 resolves to background.
template <typename T>
std::vector<InstanceMask> masks_from_logits(const nn::Mat<T>& mask_logits) {
  std::vector<InstanceMask> masks(static_cast<size_t>(mask_logits.cols()));
  for (Eigen::Index s = 0; s < mask_logits.cols(); ++s) {
    auto& mask = masks[static_cast<size_t>(s)];
    mask.bits.assign(static_cast<size_t>(mask_logits.rows()), 0);
    for (Eigen::Index p = 0; p < mask_logits.rows(); ++p) {
      mask.bits[static_cast<size_t>(p)] = mask_logits(p, s) > T(0) ? 1 : 0;
    }
  }
  return masks;
}

// Row gather of hidden states at answer_offset + iseg[k]; order preserved.
template <typename T>
nn::Mat<T> extract_object_embeddings(const nn::Mat<T>& hidden,
                                     const MultiSegIndexList& iseg,
                                     int answer_offset) {
  nn::Mat<T> out(iseg.count(), hidden.cols());
  for (int k = 0; k < iseg.count(); ++k) {
    const int row = answer_offset + iseg.indices[static_cast<size_t>(k)];
    if (row < 0 || row >= hidden.rows()) {
      throw RuntimeFault("object embedding " + std::to_string(k) +
                         ": row " + std::to_string(row) +
                         " outside hidden states (" +
                         std::to_string(hidden.rows()) + " rows)");
    }
    out.row(k) = hidden.row(row);
  }
  return out;
}

// Figure-2 pipeline: point encoder -> superpoint projection -> causal LM ->
// object embedding extraction -> mask/class heads. Layers cache activations,
// so exactly one forward may be differentiated at a time per instance.
template <typename T>
class Model {
 public:
  explicit Model(const ModelConfig& config) : cfg_(config) {
    cfg_.validate();
    if (cfg_.vocab_size < kNumReserved) {
      throw UsageError("vocab_size must cover the reserved tokens, got " +
                       std::to_string(cfg_.vocab_size));
    }
    Rng rng(cfg_.seed);
    enc_fc1_.setup("enc.fc1", 9, cfg_.d_point, rng);
    enc_fc2_.setup("enc.fc2", cfg_.d_point, cfg_.d_point, rng);
    proj_.setup("proj", cfg_.d_point, cfg_.d_model, rng);
    tok_emb_.setup("embed.tok", cfg_.vocab_size, cfg_.d_model);
    tok_emb_.init_xavier(rng);
    pos_emb_.setup("embed.pos", cfg_.context_len, cfg_.d_model);
    pos_emb_.init_xavier(rng);
    blocks_.resize(static_cast<size_t>(cfg_.n_layers));
    for (int l = 0; l < cfg_.n_layers; ++l) {
      blocks_[static_cast<size_t>(l)].setup("block" + std::to_string(l),
                                            cfg_.d_model, cfg_.n_heads, rng);
    }
    lm_head_.setup("lm_head", cfg_.d_model, cfg_.vocab_size, rng);
    mask_fc1_.setup("mask_head.fc1", cfg_.d_model, cfg_.d_model, rng);
    mask_fc2_.setup("mask_head.fc2", cfg_.d_model, cfg_.d_point, rng);
    if (cfg_.head_mode == HeadMode::kUnified) {
      cls_out_.setup("cls_head.out", cfg_.d_point, cfg_.n_classes, rng);
    } else {
      cls_fc1_.setup("cls_head.fc1", cfg_.d_model, cfg_.d_model, rng);
      cls_fc2_.setup("cls_head.fc2", cfg_.d_model, cfg_.n_classes, rng);
    }
  }

  const ModelConfig& config() const { return cfg_; }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    enc_fc1_.collect(out);
    enc_fc2_.collect(out);
    proj_.collect(out);
    out.push_back(&tok_emb_);
    out.push_back(&pos_emb_);
    for (auto& block : blocks_) block.collect(out);
    lm_head_.collect(out);
    mask_fc1_.collect(out);
    mask_fc2_.collect(out);
    if (cfg_.head_mode == HeadMode::kUnified) {
      cls_out_.collect(out);
    } else {
      cls_fc1_.collect(out);
      cls_fc2_.collect(out);
    }
    return out;
  }

  void zero_grad() {
    for (auto* param : params()) param->zero_grad();
  }

  // --- pipeline stages -----------------------------------------------------

  // Per-point features over a canonicalized cloud. Inputs per point:
  // (xyz - superpoint centroid, rgb, xyz).
  nn::Mat<T> encode_points(const PointCloud& cloud, SuperpointMap* sp_out) {
    check_cloud(cloud);
    for (size_t i = 1; i < cloud.points.size(); ++i) {
      if (cloud.points[i] < cloud.points[i - 1]) {
        throw RuntimeFault("encode_points expects a canonicalized cloud "
                           "(order violated at index " + std::to_string(i) + ")");
      }
    }
    sp_ = build_superpoints(cloud, cfg_.n_superpoints);
    const auto n = static_cast<Eigen::Index>(cloud.size());
    enc_in_.resize(n, 9);
    for (Eigen::Index p = 0; p < n; ++p) {
      const auto& xyz = cloud.points[static_cast<size_t>(p)];
      const auto& rgb = cloud.colors[static_cast<size_t>(p)];
      const auto& centroid =
          sp_.centroids[static_cast<size_t>(sp_.assignment[static_cast<size_t>(p)])];
      enc_in_(p, 0) = static_cast<T>(xyz[0] - centroid[0]);
      enc_in_(p, 1) = static_cast<T>(xyz[1] - centroid[1]);
      enc_in_(p, 2) = static_cast<T>(xyz[2] - centroid[2]);
      enc_in_(p, 3) = static_cast<T>(rgb[0]);
      enc_in_(p, 4) = static_cast<T>(rgb[1]);
      enc_in_(p, 5) = static_cast<T>(rgb[2]);
      enc_in_(p, 6) = static_cast<T>(xyz[0]);
      enc_in_(p, 7) = static_cast<T>(xyz[1]);
      enc_in_(p, 8) = static_cast<T>(xyz[2]);
    }
    fp_ = enc_fc2_.forward(enc_act_.forward(enc_fc1_.forward(enc_in_)));
    if (sp_out) *sp_out = sp_;
    return fp_;
  }

  // Superpoint features: mean of member rows, then affine to d_model.
  nn::Mat<T> project(const nn::Mat<T>& fp, const SuperpointMap& sp) {
    const auto s0 = static_cast<Eigen::Index>(sp.members.size());
    fs_pre_.setZero(s0, cfg_.d_point);
    for (Eigen::Index s = 0; s < s0; ++s) {
      const auto& members = sp.members[static_cast<size_t>(s)];
      for (int p : members) fs_pre_.row(s) += fp.row(p);
      fs_pre_.row(s) /= static_cast<T>(members.size());
    }
    return proj_.forward(fs_pre_);
  }

  struct LmOutput {
    nn::Mat<T> hidden;  // (L, d_model), final-layer states per position
    nn::Mat<T> logits;  // (L, vocab)
  };

  // Input layout: [point tokens][BOS][question][answer-so-far]. Text
  // positions are indexed from 0 after the point block; point tokens carry
  // no positional embedding.
  LmOutput lm_forward(const nn::Mat<T>& fs, const TokenSequence& question,
                      const TokenSequence& answer) {
    text_tokens_.clear();
    text_tokens_.push_back(kBos);
    text_tokens_.insert(text_tokens_.end(), question.ids.begin(),
                        question.ids.end());
    text_tokens_.insert(text_tokens_.end(), answer.ids.begin(),
                        answer.ids.end());
    const auto s0 = fs.rows();
    const auto t_text = static_cast<Eigen::Index>(text_tokens_.size());
    const auto total = s0 + t_text;
    if (total > cfg_.context_len) {
      throw RuntimeFault("context overflow: " + std::to_string(s0) +
                         " point tokens + " + std::to_string(t_text) +
                         " text tokens > context_len " +
                         std::to_string(cfg_.context_len));
    }
    x0_.resize(total, cfg_.d_model);
    x0_.topRows(s0) = fs;
    for (Eigen::Index t = 0; t < t_text; ++t) {
      const int id = text_tokens_[static_cast<size_t>(t)];
      if (id < 0 || id >= cfg_.vocab_size) {
        throw RuntimeFault("token id " + std::to_string(id) +
                           " outside vocab of size " +
                           std::to_string(cfg_.vocab_size));
      }
      x0_.row(s0 + t) = tok_emb_.value.row(id) + pos_emb_.value.row(t);
    }
    hidden_ = x0_;
    for (auto& block : blocks_) hidden_ = block.forward(hidden_);
    LmOutput out;
    out.hidden = hidden_;
    out.logits = lm_head_.forward(hidden_);
    return out;
  }

  // Greedy decoding from the post-question position until EOS or max_len.
  GenerateResult<T> generate(const nn::Mat<T>& fs,
                             const TokenSequence& question, int max_len) {
    if (max_len < 1) throw UsageError("max_len must be >= 1");
    GenerateResult<T> result;
    result.tokens.origin = TextOrigin::kAnswer;
    for (int step = 0; step < max_len; ++step) {
      const LmOutput out = lm_forward(fs, question, result.tokens);
      const Eigen::Index last = out.logits.rows() - 1;
      int best = 0;
      T best_value = out.logits(last, 0);
      for (int v = 1; v < cfg_.vocab_size; ++v) {
        if (out.logits(last, v) > best_value) {
          best_value = out.logits(last, v);
          best = v;
        }
      }
      if (best == kEos) return result;
      result.tokens.ids.push_back(best);
    }
    result.truncated = true;
    return result;
  }

  // Mask logits: 2-layer perceptron maps each object embedding to d_point,
  // then logits[p,k] = dot(fp[p], g(fseg[k])).
  nn::Mat<T> decode_masks(const nn::Mat<T>& fseg, const nn::Mat<T>& fp) {
    if (fseg.rows() < 1) throw RuntimeFault("decode_masks needs S >= 1");
    if (fseg.cols() != cfg_.d_model || fp.cols() != cfg_.d_point) {
      throw RuntimeFault("decode_masks width mismatch: fseg " +
                         std::to_string(fseg.cols()) + ", fp " +
                         std::to_string(fp.cols()));
    }
    mask_g_ = mask_fc2_.forward(mask_act_.forward(mask_fc1_.forward(fseg)));
    return fp * mask_g_.transpose();
  }

  // Class logits. Separated: an independent 2-layer perceptron from fseg.
  // Unified: a distinct affine read-out of the mask head's perceptron output
  // (shared trunk). decode_masks must run first in unified mode.
  nn::Mat<T> classify(const nn::Mat<T>& fseg) {
    if (fseg.rows() < 1) throw RuntimeFault("classify needs S >= 1");
    if (cfg_.head_mode == HeadMode::kUnified) {
      if (mask_g_.rows() != fseg.rows()) {
        throw RuntimeFault("unified classify requires decode_masks on the "
                           "same embeddings first");
      }
      return cls_out_.forward(mask_g_);
    }
    return cls_fc2_.forward(cls_act_.forward(cls_fc1_.forward(fseg)));
  }

  // --- composed passes -----------------------------------------------------

  struct TeacherState {
    SuperpointMap sp;
    nn::Mat<T> fp;          // (n, d_point)
    nn::Mat<T> fs;          // (S0, d_model)
    nn::Mat<T> hidden;      // (L, d_model)
    nn::Mat<T> lm_logits;   // (L, vocab)
    MultiSegIndexList iseg; // within the answer
    int answer_offset = 0;  // hidden row of the first answer token
    int n_answer_rows = 0;  // answer tokens + EOS prediction row count
    nn::Mat<T> fseg;        // (S, d_model)
    nn::Mat<T> mask_logits; // (n, S)
    nn::Mat<T> cls_logits;  // (S, n_classes)

    // Teacher-forced answer-region logits: rows predicting each answer token
    // and the closing EOS.
    nn::Mat<T> answer_logits(const nn::Mat<T>& full_logits) const {
      return full_logits.middleRows(answer_offset - 1, n_answer_rows);
    }
  };

  // Teacher-forced pass over one sample. The answer sequence must not
  // contain EOS; the EOS prediction target is appended by the caller's loss.
  TeacherState forward_teacher(const PointCloud& cloud,
                               const TokenSequence& question,
                               const TokenSequence& answer) {
    TeacherState state;
    state.fp = encode_points(cloud, &state.sp);
    state.fs = project(state.fp, state.sp);
    const LmOutput lm = lm_forward(state.fs, question, answer);
    state.hidden = lm.hidden;
    state.lm_logits = lm.logits;
    state.iseg = extract_seg_indices(answer);
    state.answer_offset = static_cast<int>(state.fs.rows()) + 1 +
                          static_cast<int>(question.ids.size());
    state.n_answer_rows = static_cast<int>(answer.ids.size()) + 1;
    if (state.iseg.count() > 0) {
      state.fseg =
          extract_object_embeddings(state.hidden, state.iseg, state.answer_offset);
      state.mask_logits = decode_masks(state.fseg, state.fp);
      state.cls_logits = classify(state.fseg);
    } else {
      state.fseg.resize(0, cfg_.d_model);
      state.mask_logits.resize(state.fp.rows(), 0);
      state.cls_logits.resize(0, cfg_.n_classes);
    }
    return state;
  }

  // Reverse pass for the most recent forward_teacher. Gradient inputs may be
  // empty matrices when the corresponding loss is disabled.
  void backward(const TeacherState& state, const nn::Mat<T>& d_answer_logits,
                const nn::Mat<T>& d_mask_logits, const nn::Mat<T>& d_cls_logits) {
    const auto L = state.hidden.rows();
    nn::Mat<T> d_hidden;
    d_hidden.setZero(L, cfg_.d_model);

    if (d_answer_logits.size() > 0) {
      nn::Mat<T> d_logits;
      d_logits.setZero(L, cfg_.vocab_size);
      d_logits.middleRows(state.answer_offset - 1, state.n_answer_rows) =
          d_answer_logits;
      d_hidden += lm_head_.backward(d_logits);
    }

    nn::Mat<T> d_fp_extra;
    d_fp_extra.setZero(state.fp.rows(), cfg_.d_point);
    if (state.iseg.count() > 0 &&
        (d_mask_logits.size() > 0 || d_cls_logits.size() > 0)) {
      nn::Mat<T> d_fseg;
      d_fseg.setZero(state.fseg.rows(), cfg_.d_model);
      nn::Mat<T> d_mask_g;
      d_mask_g.setZero(state.fseg.rows(), cfg_.d_point);
      bool trunk_used = false;
      if (d_mask_logits.size() > 0) {
        d_mask_g += d_mask_logits.transpose() * state.fp;
        d_fp_extra += d_mask_logits * mask_g_;
        trunk_used = true;
      }
      if (d_cls_logits.size() > 0) {
        if (cfg_.head_mode == HeadMode::kUnified) {
          d_mask_g += cls_out_.backward(d_cls_logits);
          trunk_used = true;
        } else {
          d_fseg += cls_fc1_.backward(
              cls_act_.backward(cls_fc2_.backward(d_cls_logits)));
        }
      }
      if (trunk_used) {
        d_fseg += mask_fc1_.backward(
            mask_act_.backward(mask_fc2_.backward(d_mask_g)));
      }
      for (int k = 0; k < state.iseg.count(); ++k) {
        d_hidden.row(state.answer_offset +
                     state.iseg.indices[static_cast<size_t>(k)]) +=
            d_fseg.row(k);
      }
    }

    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
      d_hidden = it->backward(d_hidden);
    }

    const auto s0 = state.fs.rows();
    const auto t_text = static_cast<Eigen::Index>(text_tokens_.size());
    for (Eigen::Index t = 0; t < t_text; ++t) {
      const int id = text_tokens_[static_cast<size_t>(t)];
      tok_emb_.grad.row(id) += d_hidden.row(s0 + t);
      pos_emb_.grad.row(t) += d_hidden.row(s0 + t);
    }
    nn::Mat<T> d_fs_pre = proj_.backward(d_hidden.topRows(s0));
    for (Eigen::Index s = 0; s < s0; ++s) {
      const auto& members = state.sp.members[static_cast<size_t>(s)];
      const T inv = static_cast<T>(1) / static_cast<T>(members.size());
      for (int p : members) d_fp_extra.row(p) += d_fs_pre.row(s) * inv;
    }
    enc_fc1_.backward(enc_act_.backward(enc_fc2_.backward(d_fp_extra)));
  }

  // Inference: generate, then re-run the full pass to read hidden states at
  // the generated marker positions.
  Prediction<T> predict(const PointCloud& cloud, const TokenSequence& question,
                        int max_len) {
    Prediction<T> pred;
    SuperpointMap sp;
    const nn::Mat<T> fp = encode_points(cloud, &sp);
    const nn::Mat<T> fs = project(fp, sp);
    GenerateResult<T> gen = generate(fs, question, max_len);
    pred.answer = gen.tokens;
    pred.truncated = gen.truncated;
    pred.iseg = extract_seg_indices(pred.answer);
    if (pred.iseg.count() == 0) {
      pred.mask_logits.resize(fp.rows(), 0);
      pred.cls_logits.resize(0, cfg_.n_classes);
      return pred;
    }
    const LmOutput lm = lm_forward(fs, question, pred.answer);
    const int answer_offset = static_cast<int>(fs.rows()) + 1 +
                              static_cast<int>(question.ids.size());
    const nn::Mat<T> fseg =
        extract_object_embeddings(lm.hidden, pred.iseg, answer_offset);
    pred.mask_logits = decode_masks(fseg, fp);
    pred.cls_logits = classify(fseg);
    return pred;
  }

 private:
  ModelConfig cfg_;
  nn::Linear<T> enc_fc1_, enc_fc2_;
  nn::Gelu<T> enc_act_;
  nn::Linear<T> proj_;
  nn::Param<T> tok_emb_, pos_emb_;
  std::vector<nn::Block<T>> blocks_;
  nn::Linear<T> lm_head_;
  nn::Linear<T> mask_fc1_, mask_fc2_;
  nn::Gelu<T> mask_act_;
  nn::Linear<T> cls_fc1_, cls_fc2_, cls_out_;
  nn::Gelu<T> cls_act_;

  // forward caches
  SuperpointMap sp_;
  nn::Mat<T> enc_in_, fp_, fs_pre_, x0_, hidden_, mask_g_;
  std::vector<int> text_tokens_;
};

using ModelF = Model<float>;
using ModelD = Model<double>;

}  // namespace more3d

#endif  // MORE3D_MODEL_HPP_
