#include "more3d/evaluate.hpp"

#include "more3d/errors.hpp"
#include "more3d/text.hpp"

namespace more3d {

EvalSummary evaluate_model(Model<float>& model, const Vocab& vocab,
                           const Dataset& ds, const EvalOptions& options) {
  if (ds.samples.empty()) throw DataError("evaluation dataset is empty");
  std::vector<MaskPairing> records;
  std::vector<std::string> pred_answers;
  std::vector<std::string> gt_answers;
  records.reserve(ds.samples.size());
  for (const auto& sample : ds.samples) {
    auto scene_it = ds.scenes.find(sample.scene_id);
    if (scene_it == ds.scenes.end()) {
      throw DataError("evaluation sample references unknown scene '" +
                      sample.scene_id + "'");
    }
    const Scene& scene = scene_it->second;
    const TokenSequence question =
        encode(vocab, sample.question, TextOrigin::kQuestion);
    Prediction<float> pred =
        model.predict(scene.cloud, question, options.gen_max_len);

    std::vector<InstanceMask> pred_masks = masks_from_logits(pred.mask_logits);
    std::vector<InstanceMask> gt_masks;
    std::vector<int> gt_classes;
    for (int target : sample.targets) {
      const SceneObject* obj = scene.find_object(target);
      if (!obj) {
        throw DataError("sample in scene '" + sample.scene_id +
                        "' references unknown instance " +
                        std::to_string(target));
      }
      gt_masks.push_back(obj->mask);
      gt_classes.push_back(obj->class_id);
    }
    records.push_back(align(pred_masks, gt_masks, gt_classes));
    pred_answers.push_back(decode(vocab, pred.answer));
    gt_answers.push_back(normalize_text(sample.answer));
  }
  return summarize(records, pred_answers, gt_answers);
}

}  // namespace more3d
