#include "more3d/qa.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "more3d/errors.hpp"
#include "more3d/text.hpp"

namespace more3d {

using json = nlohmann::json;

const char* split_name(Split split) {
  return split == Split::kTrain ? "train" : "val";
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::vector<std::string> validate_sample(const QASample& sample,
                                         const Scene& scene) {
  std::vector<std::string> violations;
  if (sample.question.empty()) violations.push_back("empty question");
  if (sample.scene_id != scene.id) {
    violations.push_back("scene_id '" + sample.scene_id +
                         "' does not match scene '" + scene.id + "'");
  }

  const int markers = count_seg_markers(sample.answer);
  if (markers != static_cast<int>(sample.targets.size())) {
    violations.push_back("marker/target count mismatch: " +
                         std::to_string(markers) + " markers vs " +
                         std::to_string(sample.targets.size()) + " targets");
  }

  for (int target : sample.targets) {
    if (!scene.find_object(target)) {
      violations.push_back("unknown instance " + std::to_string(target));
    }
  }

  // The class name must sit immediately before each marker, in target order.
  if (markers == static_cast<int>(sample.targets.size())) {
    const auto tokens = tokenize(sample.answer);
    int k = 0;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] != kSegLiteral) continue;
      if (k >= static_cast<int>(sample.targets.size())) break;
      const SceneObject* obj = scene.find_object(sample.targets[static_cast<size_t>(k)]);
      if (obj) {
        const auto name_tokens = tokenize(obj->class_name);
        bool match = name_tokens.size() <= i;
        for (size_t w = 0; match && w < name_tokens.size(); ++w) {
          const size_t pos = i - name_tokens.size() + w;
          match = lower(tokens[pos]) == lower(name_tokens[w]);
        }
        if (!match) {
          violations.push_back("class/name mismatch at marker " +
                               std::to_string(k) + ": expected '" +
                               obj->class_name + "' before " + kSegLiteral);
        }
      }
      ++k;
    }
  }
  return violations;
}

double DatasetStats::average(long n_samples, long n_scenes) {
  if (n_scenes <= 0) throw DataError("n_scenes must be positive");
  return static_cast<double>(n_samples) / static_cast<double>(n_scenes);
}

std::string DatasetStats::to_json() const {
  json j;
  j["n_scenes"] = n_scenes;
  j["n_samples"] = n_samples;
  j["avg_questions_per_scene"] = avg_questions_per_scene;
  json classes = json::object();
  for (const auto& [name, count] : class_histogram) classes[name] = count;
  j["class_histogram"] = std::move(classes);
  json segs = json::object();
  for (const auto& [count, n] : seg_histogram) segs[std::to_string(count)] = n;
  j["seg_tokens_per_answer"] = std::move(segs);
  return j.dump(2);
}

DatasetStats compute_stats(const Dataset& ds) {
  if (ds.samples.empty()) throw DataError("cannot compute stats of an empty dataset");
  if (ds.scenes.empty()) throw DataError("dataset has no scene index attached");
  DatasetStats stats;
  stats.n_scenes = static_cast<long>(ds.scenes.size());
  stats.n_samples = static_cast<long>(ds.samples.size());
  stats.avg_questions_per_scene =
      DatasetStats::average(stats.n_samples, stats.n_scenes);
  for (const auto& sample : ds.samples) {
    auto it = ds.scenes.find(sample.scene_id);
    if (it == ds.scenes.end()) {
      throw DataError("sample references unknown scene '" + sample.scene_id +
                      "'");
    }
    for (int target : sample.targets) {
      const SceneObject* obj = it->second.find_object(target);
      if (!obj) {
        throw DataError("sample in scene '" + sample.scene_id +
                        "' references unknown instance " +
                        std::to_string(target));
      }
      ++stats.class_histogram[obj->class_name];
    }
    ++stats.seg_histogram[static_cast<int>(sample.targets.size())];
  }
  return stats;
}

void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const auto& sample : ds.samples) {
    json j;
    j["scene_id"] = sample.scene_id;
    j["question"] = sample.question;
    j["answer"] = sample.answer;
    j["targets"] = sample.targets;
    out << j.dump() << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

Dataset read_dataset(const std::string& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + path);
  Dataset ds;
  ds.split = split;
  std::string line;
  long line_number = 0;
  long long byte_offset = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const long long line_start = byte_offset;
    byte_offset += static_cast<long long>(line.size()) + 1;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("malformed dataset line " + std::to_string(line_number) +
                      " (byte offset " + std::to_string(line_start) +
                      "): " + e.what());
    }
    if (!j.is_object()) {
      throw DataError("dataset line " + std::to_string(line_number) +
                      " (byte offset " + std::to_string(line_start) +
                      "): expected an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "scene_id" && it.key() != "question" &&
          it.key() != "answer" && it.key() != "targets") {
        throw DataError("dataset line " + std::to_string(line_number) +
                        ": unknown field '" + it.key() + "'");
      }
    }
    QASample sample;
    try {
      sample.scene_id = j.at("scene_id").get<std::string>();
      sample.question = j.at("question").get<std::string>();
      sample.answer = j.at("answer").get<std::string>();
      sample.targets = j.at("targets").get<std::vector<int>>();
    } catch (const json::exception& e) {
      throw DataError("dataset line " + std::to_string(line_number) +
                      " (byte offset " + std::to_string(line_start) +
                      "): " + e.what());
    }
    ds.samples.push_back(std::move(sample));
  }
  if (ds.samples.empty()) {
    std::cerr << "warning: dataset file " << path << " holds no samples\n";
  }
  return ds;
}

std::map<std::string, Scene> load_scene_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw DataError("scene directory not found: " + dir);
  }
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::map<std::string, Scene> scenes;
  for (const auto& path : paths) {
    Scene scene = read_scene(path);
    const std::string id = scene.id;
    if (!scenes.emplace(id, std::move(scene)).second) {
      throw DataError("duplicate scene id '" + id + "' in " + dir);
    }
  }
  return scenes;
}

}  // namespace more3d
