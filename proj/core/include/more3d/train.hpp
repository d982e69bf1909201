#ifndef MORE3D_TRAIN_HPP_
#define MORE3D_TRAIN_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "more3d/checkpoint.hpp"
#include "more3d/losses.hpp"
#include "more3d/metrics.hpp"
#include "more3d/model.hpp"
#include "more3d/qa.hpp"

namespace more3d {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators aligned with the model's parameter order.
template <typename T>
struct AdamState {
  std::vector<nn::Mat<T>> m;
  std::vector<nn::Mat<T>> v;
  long step = 0;

  void match(const std::vector<nn::Param<T>*>& params) {
    m.resize(params.size());
    v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      if (m[i].rows() != params[i]->value.rows() ||
          m[i].cols() != params[i]->value.cols()) {
        m[i].setZero(params[i]->value.rows(), params[i]->value.cols());
        v[i].setZero(params[i]->value.rows(), params[i]->value.cols());
      }
    }
  }
};

// Bias-corrected Adam update. A non-finite gradient skips the whole step and
// returns false.
template <typename T>
bool adam_step(const std::vector<nn::Param<T>*>& params, AdamState<T>& state,
               const AdamConfig& cfg) {
  state.match(params);
  for (auto* param : params) {
    if (!param->grad.allFinite()) return false;
  }
  ++state.step;
  const T beta1 = static_cast<T>(cfg.beta1);
  const T beta2 = static_cast<T>(cfg.beta2);
  const T one = static_cast<T>(1);
  const T correction1 =
      one - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(state.step)));
  const T correction2 =
      one - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(state.step)));
  const T lr = static_cast<T>(cfg.lr);
  const T eps = static_cast<T>(cfg.epsilon);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = params[i]->grad;
    m = beta1 * m + (one - beta1) * g;
    v = (beta2 * v).eval();
    v.array() += (one - beta2) * g.array().square();
    const auto m_hat = m / correction1;
    const auto v_hat = v / correction2;
    params[i]->value.array() -=
        lr * m_hat.array() / (v_hat.array().sqrt() + eps);
  }
  return true;
}

struct TrainConfig {
  int epochs = 100;
  AdamConfig adam;
  std::uint64_t seed = 1;
  bool shuffle = true;
  int ckpt_every = 25;   // epochs between periodic checkpoints; 0 disables
  int eval_every = 25;   // epochs between val evaluations; 0 = final only
  int gen_max_len = 48;  // generation cap during evaluation
  LossToggles losses;
};

struct EpochLog {
  int epoch = 0;
  LossReport mean_loss;
  std::optional<double> val_giou;
  std::optional<double> val_ciou;
};

struct TrainResult {
  std::vector<EpochLog> logs;
  long skipped_samples = 0;
  long skipped_steps = 0;  // non-finite-gradient skips
  double best_val_giou = -1.0;
  std::optional<EvalSummary> final_val;
};

// One sample prepared for stepping: tokens, ordered GT masks, class targets.
struct PreparedSample {
  const Scene* scene = nullptr;
  TokenSequence question;
  TokenSequence answer;           // no EOS; loss appends the EOS target
  std::vector<int> answer_targets;  // answer token ids + EOS
  std::vector<const InstanceMask*> gt_masks;  // marker order
  std::vector<int> gt_classes;
};

std::vector<PreparedSample> prepare_samples(const Dataset& ds,
                                            const Vocab& vocab,
                                            long* skipped);

// Teacher-forced loss and (optionally) gradients for one sample.
LossReport sample_step(Model<float>& model, const PreparedSample& sample,
                       const LossToggles& toggles, bool with_grad);

// Batch-size-1 loop in paper convention. Per-epoch order is a pure function
// of (seed, epoch), so resuming from a checkpoint replays the identical
// trajectory. out_dir may be empty to skip all file output.
TrainResult train_loop(Model<float>& model, const Vocab& vocab,
                       const Dataset& train, const Dataset& val,
                       const TrainConfig& cfg, const std::string& out_dir,
                       AdamState<float>* resume_state = nullptr,
                       int start_epoch = 0);

// Train-state checkpoints add adam moments ("opt.m.*", "opt.v.*"),
// "opt.step" and "train.epoch" tensors on top of the model checkpoint.
Checkpoint make_train_checkpoint(Model<float>& model, const Vocab& vocab,
                                 const AdamState<float>& state, int epoch);
int load_train_state(Model<float>& model, const Checkpoint& ckpt,
                     AdamState<float>* state);

}  // namespace more3d

#endif  // MORE3D_TRAIN_HPP_
