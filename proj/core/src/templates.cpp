#include "more3d/templates.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "more3d/errors.hpp"
#include "more3d/rng.hpp"
#include "more3d/text.hpp"

#ifndef MORE3D_DEFAULT_ASSET_DIR
#define MORE3D_DEFAULT_ASSET_DIR ""
#endif

namespace more3d {

using json = nlohmann::json;

TemplateBank TemplateBank::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("template JSON parse error: ") + e.what());
  }
  TemplateBank bank;
  try {
    for (const auto& q : j.at("questions")) {
      bank.questions_.push_back({q.at("id").get<std::string>(),
                                 q.at("intent").get<std::string>(),
                                 q.at("text").get<std::string>()});
    }
    for (const auto& f : j.at("answer_frames")) {
      bank.frames_.push_back({f.at("id").get<std::string>(),
                              f.at("needs_relation").get<bool>(),
                              f.at("text").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("template JSON schema error: ") + e.what());
  }
  if (bank.questions_.empty() || bank.frames_.empty()) {
    throw DataError("template bank needs questions and answer frames");
  }
  for (const auto& f : bank.frames_) {
    if (f.text.find("{objects}") == std::string::npos) {
      throw DataError("answer frame '" + f.id + "' lacks the {objects} slot");
    }
    if (f.needs_relation && f.text.find("{relation}") == std::string::npos) {
      throw DataError("answer frame '" + f.id + "' lacks the {relation} slot");
    }
  }
  return bank;
}

TemplateBank TemplateBank::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open template bank: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string TemplateBank::default_asset_path() {
  return std::string(MORE3D_DEFAULT_ASSET_DIR) + "/qa_templates.json";
}

namespace {

std::string replace_slot(std::string text, const std::string& slot,
                         const std::string& value) {
  const auto pos = text.find(slot);
  if (pos != std::string::npos) text.replace(pos, slot.size(), value);
  return text;
}

std::string render_object_list(const Scene& scene,
                               const std::vector<int>& targets) {
  std::string out;
  for (size_t i = 0; i < targets.size(); ++i) {
    const SceneObject* obj = scene.find_object(targets[i]);
    if (i > 0) {
      out += (i + 1 == targets.size()) ? " and " : ", ";
    }
    out += "the " + obj->class_name + " ";
    out += kSegLiteral;
  }
  return out;
}

// Relations whose participants best overlap the targets; tiers keep the
// draw deterministic and focused on the answer's own objects.
const SpatialRelation* pick_relation(const Scene& scene,
                                     const std::vector<int>& targets,
                                     Rng& rng) {
  if (scene.relations.empty()) return nullptr;
  const std::set<int> target_set(targets.begin(), targets.end());
  std::vector<const SpatialRelation*> tier_inside;
  std::vector<const SpatialRelation*> tier_touching;
  for (const auto& rel : scene.relations) {
    bool all_inside = target_set.count(rel.subject) > 0;
    bool touches = target_set.count(rel.subject) > 0;
    for (int obj : rel.objects) {
      all_inside = all_inside && target_set.count(obj) > 0;
      touches = touches || target_set.count(obj) > 0;
    }
    if (all_inside) tier_inside.push_back(&rel);
    if (touches) tier_touching.push_back(&rel);
  }
  const auto& tier = !tier_inside.empty()
                         ? tier_inside
                         : (!tier_touching.empty() ? tier_touching
                                                   : std::vector<const SpatialRelation*>{});
  if (tier.empty()) {
    const auto idx = static_cast<size_t>(
        rng.uniform_int(0, static_cast<int>(scene.relations.size()) - 1));
    return &scene.relations[idx];
  }
  const auto idx =
      static_cast<size_t>(rng.uniform_int(0, static_cast<int>(tier.size()) - 1));
  return tier[idx];
}

}  // namespace

QaGenResult generate_qa_templates(const Scene& scene, int n,
                                  std::uint64_t seed,
                                  const TemplateBank& bank) {
  if (n < 1) throw UsageError("requested sample count must be >= 1, got " +
                              std::to_string(n));
  if (scene.objects.empty()) throw DataError("scene has no objects");

  Rng rng(Rng::mix(seed, 0x9a));

  // Distinct target combinations of size 1..4, multi-object first, shuffled
  // deterministically within each size class.
  std::vector<std::vector<int>> combos;
  const int k = static_cast<int>(scene.objects.size());
  for (int size : {2, 3, 4, 1}) {
    if (size > k) continue;
    std::vector<std::vector<int>> of_size;
    // iterative combination enumeration over object indices
    std::vector<int> idx(static_cast<size_t>(size));
    for (int i = 0; i < size; ++i) idx[static_cast<size_t>(i)] = i;
    while (true) {
      std::vector<int> combo;
      for (int i : idx) combo.push_back(scene.objects[static_cast<size_t>(i)].instance_id);
      std::sort(combo.begin(), combo.end());
      of_size.push_back(std::move(combo));
      int pos = size - 1;
      while (pos >= 0 && idx[static_cast<size_t>(pos)] == k - size + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<size_t>(pos)];
      for (int i = pos + 1; i < size; ++i) {
        idx[static_cast<size_t>(i)] = idx[static_cast<size_t>(i - 1)] + 1;
      }
    }
    // Fisher-Yates with the shared stream
    for (size_t i = of_size.size(); i > 1; --i) {
      const auto j = static_cast<size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(of_size[i - 1], of_size[j]);
    }
    for (auto& combo : of_size) combos.push_back(std::move(combo));
  }

  QaGenResult result;
  result.requested = n;
  const int produced = std::min<int>(n, static_cast<int>(combos.size()));
  const int question_offset =
      static_cast<int>(rng.uniform_int(0, static_cast<int>(bank.questions().size()) - 1));

  std::vector<const AnswerFrame*> relation_frames;
  std::vector<const AnswerFrame*> plain_frames;
  for (const auto& frame : bank.frames()) {
    (frame.needs_relation ? relation_frames : plain_frames).push_back(&frame);
  }

  for (int s = 0; s < produced; ++s) {
    const auto& targets = combos[static_cast<size_t>(s)];
    QASample sample;
    sample.scene_id = scene.id;
    sample.targets = targets;
    const auto& question =
        bank.questions()[static_cast<size_t>((question_offset + s) %
                                             static_cast<int>(bank.questions().size()))];
    sample.question = question.text;

    const SpatialRelation* relation =
        scene.objects.size() >= 2 ? pick_relation(scene, targets, rng) : nullptr;
    const AnswerFrame* frame = nullptr;
    if (relation && !relation_frames.empty()) {
      frame = relation_frames[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int>(relation_frames.size()) - 1))];
    } else {
      if (plain_frames.empty()) throw DataError("template bank has no relation-free frame");
      frame = plain_frames[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int>(plain_frames.size()) - 1))];
    }
    std::string answer = replace_slot(frame->text, "{objects}",
                                      render_object_list(scene, targets));
    if (relation && frame->needs_relation) {
      answer = replace_slot(answer, "{relation}", relation->phrase);
    }
    sample.answer = answer;
    result.samples.push_back(std::move(sample));
  }
  return result;
}

QaGenResult generate_qa_templates(const Scene& scene, int n,
                                  std::uint64_t seed) {
  static const TemplateBank bank =
      TemplateBank::load(TemplateBank::default_asset_path());
  return generate_qa_templates(scene, n, seed, bank);
}

}  // namespace more3d
