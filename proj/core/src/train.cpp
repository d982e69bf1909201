#include "more3d/train.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "more3d/errors.hpp"
#include "more3d/evaluate.hpp"
#include "more3d/rng.hpp"

namespace more3d {

using json = nlohmann::json;

std::vector<PreparedSample> prepare_samples(const Dataset& ds,
                                            const Vocab& vocab,
                                            long* skipped) {
  std::vector<PreparedSample> prepared;
  long skip_count = 0;
  for (const auto& sample : ds.samples) {
    auto scene_it = ds.scenes.find(sample.scene_id);
    if (scene_it == ds.scenes.end()) {
      ++skip_count;
      std::cerr << "skipping sample with unknown scene '" << sample.scene_id
                << "'\n";
      continue;
    }
    const Scene& scene = scene_it->second;
    if (!validate_sample(sample, scene).empty()) {
      ++skip_count;
      std::cerr << "skipping invalid sample in scene '" << sample.scene_id
                << "'\n";
      continue;
    }
    PreparedSample p;
    p.scene = &scene;
    p.question = encode(vocab, sample.question, TextOrigin::kQuestion);
    p.answer = encode(vocab, sample.answer, TextOrigin::kAnswer);
    p.answer_targets = p.answer.ids;
    p.answer_targets.push_back(kEos);
    for (int target : sample.targets) {
      const SceneObject* obj = scene.find_object(target);
      p.gt_masks.push_back(&obj->mask);
      p.gt_classes.push_back(obj->class_id);
    }
    prepared.push_back(std::move(p));
  }
  if (skipped) *skipped = skip_count;
  return prepared;
}

LossReport sample_step(Model<float>& model, const PreparedSample& sample,
                       const LossToggles& toggles, bool with_grad) {
  auto state = model.forward_teacher(sample.scene->cloud, sample.question,
                                     sample.answer);
  const nn::Mat<float> answer_logits = state.answer_logits(state.lm_logits);

  nn::Mat<float> d_ans, d_mask, d_cls;
  const double l_ans = loss_ans(sample.answer_targets, answer_logits,
                                with_grad && toggles.ans ? &d_ans : nullptr);
  double l_mask = 0.0;
  double l_cls = 0.0;
  if (!sample.gt_masks.empty()) {
    l_mask = loss_mask(sample.gt_masks, state.mask_logits,
                       with_grad && toggles.mask ? &d_mask : nullptr);
    l_cls = loss_cls(sample.gt_classes, state.cls_logits,
                     with_grad && toggles.cls ? &d_cls : nullptr);
  }
  if (with_grad) {
    model.backward(state, toggles.ans ? d_ans : nn::Mat<float>(),
                   toggles.mask ? d_mask : nn::Mat<float>(),
                   toggles.cls ? d_cls : nn::Mat<float>());
  }
  return total_loss(l_ans, l_mask, l_cls, toggles);
}

namespace {

void append_log_line(std::ofstream* out, const EpochLog& log) {
  if (!out || !out->is_open()) return;
  json j;
  j["epoch"] = log.epoch;
  j["l_ans"] = log.mean_loss.l_ans;
  j["l_mask"] = log.mean_loss.l_mask;
  j["l_cls"] = log.mean_loss.l_cls;
  j["total"] = log.mean_loss.total;
  j["val_giou"] = log.val_giou.has_value() ? json(*log.val_giou) : json(nullptr);
  j["val_ciou"] = log.val_ciou.has_value() ? json(*log.val_ciou) : json(nullptr);
  *out << j.dump() << "\n";
  out->flush();
}

}  // namespace

Checkpoint make_train_checkpoint(Model<float>& model, const Vocab& vocab,
                                 const AdamState<float>& state, int epoch) {
  Checkpoint ckpt = make_model_checkpoint(model, vocab);
  auto params = model.params();
  for (size_t i = 0; i < params.size(); ++i) {
    for (const char* kind : {"m", "v"}) {
      const auto& source = kind[0] == 'm' ? state.m[i] : state.v[i];
      NamedTensor tensor;
      tensor.name = std::string("opt.") + kind + "." + params[i]->name;
      tensor.dims = {static_cast<std::uint32_t>(source.rows()),
                     static_cast<std::uint32_t>(source.cols())};
      for (Eigen::Index r = 0; r < source.rows(); ++r) {
        for (Eigen::Index c = 0; c < source.cols(); ++c) {
          tensor.data.push_back(source(r, c));
        }
      }
      ckpt.tensors.push_back(std::move(tensor));
    }
  }
  NamedTensor step;
  step.name = "opt.step";
  step.dims = {1};
  step.data = {static_cast<float>(state.step)};
  ckpt.tensors.push_back(std::move(step));
  NamedTensor epoch_tensor;
  epoch_tensor.name = "train.epoch";
  epoch_tensor.dims = {1};
  epoch_tensor.data = {static_cast<float>(epoch)};
  ckpt.tensors.push_back(std::move(epoch_tensor));
  return ckpt;
}

int load_train_state(Model<float>& model, const Checkpoint& ckpt,
                     AdamState<float>* state) {
  load_model_tensors(model, ckpt);
  auto params = model.params();
  state->m.resize(params.size());
  state->v.resize(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    for (const char* kind : {"m", "v"}) {
      const NamedTensor* tensor =
          ckpt.find(std::string("opt.") + kind + "." + params[i]->name);
      if (!tensor) {
        throw DataError("checkpoint lacks optimizer state for '" +
                        params[i]->name + "' (not a train checkpoint)");
      }
      auto& dest = kind[0] == 'm' ? state->m[i] : state->v[i];
      dest.setZero(params[i]->value.rows(), params[i]->value.cols());
      size_t flat = 0;
      for (Eigen::Index r = 0; r < dest.rows(); ++r) {
        for (Eigen::Index c = 0; c < dest.cols(); ++c) {
          dest(r, c) = tensor->data[flat++];
        }
      }
    }
  }
  const NamedTensor* step = ckpt.find("opt.step");
  const NamedTensor* epoch = ckpt.find("train.epoch");
  if (!step || !epoch) throw DataError("checkpoint lacks opt.step/train.epoch");
  state->step = static_cast<long>(step->data.at(0));
  return static_cast<int>(epoch->data.at(0));
}

TrainResult train_loop(Model<float>& model, const Vocab& vocab,
                       const Dataset& train, const Dataset& val,
                       const TrainConfig& cfg, const std::string& out_dir,
                       AdamState<float>* resume_state, int start_epoch) {
  namespace fs = std::filesystem;
  if (train.samples.empty()) throw DataError("train split is empty");

  TrainResult result;
  auto prepared = prepare_samples(train, vocab, &result.skipped_samples);
  if (prepared.empty()) throw DataError("no valid training samples remain");

  const bool has_val = !val.samples.empty();
  AdamState<float> local_state;
  AdamState<float>& opt = resume_state ? *resume_state : local_state;
  auto params = model.params();
  opt.match(params);

  std::ofstream log_file;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log_file.open(out_dir + "/metrics.jsonl",
                  start_epoch > 0 ? std::ios::app : std::ios::trunc);
    if (!log_file) throw DataError("cannot open metrics log in " + out_dir);
  }

  const EvalOptions eval_options{cfg.gen_max_len};
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    std::vector<size_t> order(prepared.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (cfg.shuffle) {
      Rng rng(Rng::mix(cfg.seed, 0xe90c + static_cast<std::uint64_t>(epoch)));
      for (size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(order[i - 1], order[j]);
      }
    }

    LossReport sum;
    for (size_t idx : order) {
      model.zero_grad();
      const LossReport losses =
          sample_step(model, prepared[idx], cfg.losses, /*with_grad=*/true);
      if (!adam_step(params, opt, cfg.adam)) {
        ++result.skipped_steps;
        std::cerr << "skipped optimizer step (non-finite gradient) at epoch "
                  << epoch << "\n";
      }
      sum.l_ans += losses.l_ans;
      sum.l_mask += losses.l_mask;
      sum.l_cls += losses.l_cls;
      sum.total += losses.total;
    }
    const auto n = static_cast<double>(order.size());
    EpochLog log;
    log.epoch = epoch + 1;
    log.mean_loss = {sum.l_ans / n, sum.l_mask / n, sum.l_cls / n,
                     sum.total / n};

    const bool last_epoch = epoch + 1 == cfg.epochs;
    const bool eval_now =
        has_val && (last_epoch ||
                    (cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0));
    if (eval_now) {
      const EvalSummary summary = evaluate_model(model, vocab, val, eval_options);
      log.val_giou = summary.giou;
      log.val_ciou = summary.ciou;
      if (summary.giou > result.best_val_giou) {
        result.best_val_giou = summary.giou;
        if (!out_dir.empty()) {
          write_checkpoint(make_train_checkpoint(model, vocab, opt, epoch + 1),
                           out_dir + "/ckpt_best.mor3");
        }
      }
      if (last_epoch) result.final_val = summary;
    }
    if (!out_dir.empty() && cfg.ckpt_every > 0 &&
        ((epoch + 1) % cfg.ckpt_every == 0 || last_epoch)) {
      char name[64];
      std::snprintf(name, sizeof(name), "/ckpt_epoch_%04d.mor3", epoch + 1);
      write_checkpoint(make_train_checkpoint(model, vocab, opt, epoch + 1),
                       out_dir + name);
    }
    append_log_line(log_file.is_open() ? &log_file : nullptr, log);
    result.logs.push_back(std::move(log));
  }
  if (!out_dir.empty()) {
    write_checkpoint(make_train_checkpoint(model, vocab, opt, cfg.epochs),
                     out_dir + "/ckpt_final.mor3");
  }
  return result;
}

}  // namespace more3d
