#ifndef MORE3D_TEMPLATES_HPP_
#define MORE3D_TEMPLATES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "more3d/qa.hpp"
#include "more3d/scene.hpp"

namespace more3d {

struct QuestionTemplate {
  std::string id;
  std::string intent;  // activity | search | arrangement
  std::string text;
};

struct AnswerFrame {
  std::string id;
  bool needs_relation = false;
  std::string text;  // contains {objects}, and {relation} when needs_relation
};

// Question/answer wording is data, shipped as a JSON asset, so tests can pin
// it and deployments can swap it without a rebuild.
class TemplateBank {
 public:
  static TemplateBank load(const std::string& path);
  static TemplateBank from_json(const std::string& text);
  static std::string default_asset_path();

  const std::vector<QuestionTemplate>& questions() const { return questions_; }
  const std::vector<AnswerFrame>& frames() const { return frames_; }

 private:
  std::vector<QuestionTemplate> questions_;
  std::vector<AnswerFrame> frames_;
};

struct QaGenResult {
  std::vector<QASample> samples;
  int requested = 0;
  // Samples not produced because the scene ran out of distinct target
  // combinations (sizes 1-4).
  int shortfall() const {
    return requested - static_cast<int>(samples.size());
  }
};

// Deterministic template-based QA generation. Multi-object combinations are
// preferred; every answer names each target followed by `<SEG>` and embeds a
// relation phrase whenever the scene offers one. Every emitted sample passes
// validate_sample.
QaGenResult generate_qa_templates(const Scene& scene, int n,
                                  std::uint64_t seed,
                                  const TemplateBank& bank);
QaGenResult generate_qa_templates(const Scene& scene, int n,
                                  std::uint64_t seed);

}  // namespace more3d

#endif  // MORE3D_TEMPLATES_HPP_
