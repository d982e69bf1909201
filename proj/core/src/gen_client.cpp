#include "more3d/gen_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "more3d/errors.hpp"
#include "more3d/text.hpp"

namespace more3d {

using json = nlohmann::json;

void check_config(const GenClientConfig& cfg) {
  if (cfg.endpoint.empty()) throw UsageError("external generation needs an endpoint URL");
  if (!(cfg.timeout_seconds > 0)) {
    throw UsageError("timeout must be positive, got " +
                     std::to_string(cfg.timeout_seconds));
  }
  if (cfg.max_retries < 0) throw UsageError("max retries must be >= 0");
  if (cfg.max_in_flight < 1) throw UsageError("max in-flight requests must be >= 1");
}

ChatPrompt build_prompt(const Scene& scene, const GenClientConfig& cfg) {
  (void)cfg;
  ChatPrompt prompt;
  prompt.system_part =
      "You write question-answer pairs about indoor 3D scenes. Questions must "
      "require reasoning about intent rather than naming objects directly. "
      "Answers must mention each chosen object by its class name, place the "
      "literal token <SEG> immediately after every mentioned object name, and "
      "stay grounded in the scene described by the user.";
  std::ostringstream user;
  user << "Requirements: describe 3D spatial relations among the chosen "
          "objects inside every answer, prefer two to four objects per "
          "question, and reply with one JSON object per line shaped as "
          "{\"question\": str, \"answer\": str, \"targets\": [instance ids]}, "
          "with no extra text.\n";
  user << "Scene " << scene.id << " objects:\n";
  for (const auto& obj : scene.objects) {
    user << "  instance " << obj.instance_id << ": " << obj.class_name << "\n";
  }
  if (!scene.relations.empty()) {
    user << "Spatial relations:\n";
    for (const auto& rel : scene.relations) {
      user << "  " << rel.phrase << "\n";
    }
  }
  prompt.user_part = user.str();
  return prompt;
}

namespace {

// First string-valued "content" field in document order; chat replies keep
// the message text there.
bool find_first_content(const json& node, std::string* out) {
  if (node.is_object()) {
    auto it = node.find("content");
    if (it != node.end() && it->is_string()) {
      *out = it->get<std::string>();
      return true;
    }
    for (const auto& child : node) {
      if (find_first_content(child, out)) return true;
    }
  } else if (node.is_array()) {
    for (const auto& child : node) {
      if (find_first_content(child, out)) return true;
    }
  }
  return false;
}

bool parse_candidate(const json& j, const Scene& scene, QASample* out) {
  if (!j.is_object()) return false;
  if (!j.contains("question") || !j.contains("answer") || !j.contains("targets")) {
    return false;
  }
  if (!j["question"].is_string() || !j["answer"].is_string() ||
      !j["targets"].is_array()) {
    return false;
  }
  QASample sample;
  sample.scene_id = scene.id;
  sample.question = j["question"].get<std::string>();
  sample.answer = j["answer"].get<std::string>();
  for (const auto& t : j["targets"]) {
    if (!t.is_number_integer()) return false;
    sample.targets.push_back(t.get<int>());
  }
  *out = std::move(sample);
  return true;
}

struct UrlParts {
  std::string host_port;  // scheme://host:port
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw UsageError("endpoint URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::vector<QASample> parse_generation_reply(const std::string& body,
                                             const Scene& scene,
                                             int* parse_rejections) {
  int rejected = 0;
  std::vector<QASample> candidates;
  std::string content;
  if (body.empty()) {
    if (parse_rejections) *parse_rejections = 0;
    std::cerr << "warning: empty generation reply for scene " << scene.id
              << "\n";
    return {};
  }
  json reply;
  try {
    reply = json::parse(body);
  } catch (const json::exception&) {
    // Not JSON at all: treat the body itself as the content text.
    content = body;
  }
  if (content.empty() && !reply.is_null()) {
    if (!find_first_content(reply, &content)) {
      // Maybe the reply IS the payload (array of candidates).
      if (reply.is_array()) {
        for (const auto& item : reply) {
          QASample sample;
          if (parse_candidate(item, scene, &sample)) {
            candidates.push_back(std::move(sample));
          } else {
            ++rejected;
          }
        }
        if (parse_rejections) *parse_rejections = rejected;
        return candidates;
      }
      std::cerr << "warning: reply carries no text content field\n";
      if (parse_rejections) *parse_rejections = 0;
      return {};
    }
  }

  // Content: either a JSON array or JSON-object lines.
  json as_array;
  try {
    as_array = json::parse(content);
  } catch (const json::exception&) {
    as_array = nullptr;
  }
  if (as_array.is_array()) {
    for (const auto& item : as_array) {
      QASample sample;
      if (parse_candidate(item, scene, &sample)) {
        candidates.push_back(std::move(sample));
      } else {
        ++rejected;
      }
    }
  } else {
    std::istringstream lines(content);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        ++rejected;
        continue;
      }
      QASample sample;
      if (parse_candidate(j, scene, &sample)) {
        candidates.push_back(std::move(sample));
      } else {
        ++rejected;
      }
    }
  }
  if (parse_rejections) *parse_rejections = rejected;
  return candidates;
}

ExternalGenResult generate_qa_external(const Scene& scene,
                                       const GenClientConfig& cfg) {
  check_config(cfg);

  std::string token;
  if (!cfg.auth_env.empty()) {
    const char* value = std::getenv(cfg.auth_env.c_str());
    if (!value) {
      throw UsageError("auth token environment variable " + cfg.auth_env +
                       " is not set (set it or clear auth_env)");
    }
    token = value;
  }

  const ChatPrompt prompt = build_prompt(scene, cfg);
  json request;
  request["model"] = cfg.model;
  request["messages"] = json::array({
      json{{"role", "system"}, {"content", prompt.system_part}},
      json{{"role", "user"}, {"content", prompt.user_part}},
  });
  const std::string request_body = request.dump();

  const UrlParts url = split_url(cfg.endpoint);
  httplib::Client client(url.host_port);
  const auto timeout_s = static_cast<time_t>(cfg.timeout_seconds);
  const auto timeout_us = static_cast<time_t>(
      std::lround((cfg.timeout_seconds - static_cast<double>(timeout_s)) * 1e6));
  client.set_connection_timeout(timeout_s, timeout_us);
  client.set_read_timeout(timeout_s, timeout_us);
  client.set_write_timeout(timeout_s, timeout_us);

  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

  ExternalGenResult result;
  std::string body;
  bool got_reply = false;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    result.attempts = attempt + 1;
    auto response = client.Post(url.path, headers, request_body, "application/json");
    if (!response) {
      last_error = httplib::to_string(response.error());
      continue;
    }
    if (response->status < 200 || response->status >= 300) {
      last_error = "HTTP status " + std::to_string(response->status);
      continue;
    }
    body = response->body;
    got_reply = true;
    break;
  }
  if (!got_reply) {
    throw RuntimeFault("generation request to " + cfg.endpoint + " failed after " +
                       std::to_string(result.attempts) + " attempts: " +
                       last_error);
  }

  int parse_rejections = 0;
  auto candidates = parse_generation_reply(body, scene, &parse_rejections);
  result.dropped = parse_rejections;
  for (auto& candidate : candidates) {
    const auto violations = validate_sample(candidate, scene);
    if (violations.empty()) {
      result.samples.push_back(std::move(candidate));
      ++result.kept;
    } else {
      ++result.dropped;
      std::cerr << "dropped generated sample (" << violations.front() << ")\n";
    }
  }
  return result;
}

std::vector<ExternalGenResult> generate_qa_external_batch(
    const std::vector<const Scene*>& scenes, const GenClientConfig& cfg) {
  check_config(cfg);
  std::vector<ExternalGenResult> results(scenes.size());
  std::vector<std::string> errors(scenes.size());
  size_t next = 0;
  while (next < scenes.size()) {
    const size_t begin = next;
    const size_t end = std::min(scenes.size(),
                                begin + static_cast<size_t>(cfg.max_in_flight));
    std::vector<std::thread> workers;
    for (size_t i = begin; i < end; ++i) {
      workers.emplace_back([&, i]() {
        try {
          results[i] = generate_qa_external(*scenes[i], cfg);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      });
    }
    for (auto& worker : workers) worker.join();
    next = end;
  }
  for (const auto& error : errors) {
    if (!error.empty()) throw RuntimeFault(error);
  }
  return results;
}

}  // namespace more3d
