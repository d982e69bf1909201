#ifndef MORE3D_GEN_CLIENT_HPP_
#define MORE3D_GEN_CLIENT_HPP_

#include <string>
#include <vector>

#include "more3d/qa.hpp"
#include "more3d/scene.hpp"

namespace more3d {

struct GenClientConfig {
  std::string endpoint;            // e.g. http://host:port/v1/chat/completions
  std::string auth_env = "MORE3D_API_TOKEN";  // env var holding the bearer token;
                                              // empty string disables auth
  std::string model = "gpt-4o";
  std::string prompt_template_id = "two-part-v1";
  double timeout_seconds = 30.0;
  int max_retries = 2;             // retries after the first attempt
  int max_in_flight = 4;           // cap for batched generation
};

void check_config(const GenClientConfig& cfg);

// Two-part prompt: part one states the generator's role and base
// requirements, part two the spatial-relation and multi-object requirements
// plus the scene digest (object table and relation phrases).
struct ChatPrompt {
  std::string system_part;
  std::string user_part;
};

ChatPrompt build_prompt(const Scene& scene, const GenClientConfig& cfg);

struct ExternalGenResult {
  std::vector<QASample> samples;  // validated survivors
  int kept = 0;
  int dropped = 0;
  int attempts = 0;               // HTTP attempts spent on the final request
};

// POSTs {"model","messages":[...]} to cfg.endpoint, parses the first text
// content field of the reply as QA JSON lines, validates each candidate
// against the scene and drops failures. Transport failure after all retries
// throws RuntimeFault carrying the attempt count; unparseable candidates are
// sample-level rejections, never batch failures.
ExternalGenResult generate_qa_external(const Scene& scene,
                                       const GenClientConfig& cfg);

// Runs generate_qa_external over many scenes with at most cfg.max_in_flight
// requests outstanding. Scene order is preserved in the output.
std::vector<ExternalGenResult> generate_qa_external_batch(
    const std::vector<const Scene*>& scenes, const GenClientConfig& cfg);

// Exposed for tests: reply parsing without transport.
std::vector<QASample> parse_generation_reply(const std::string& body,
                                             const Scene& scene,
                                             int* parse_rejections);

}  // namespace more3d

#endif  // MORE3D_GEN_CLIENT_HPP_
