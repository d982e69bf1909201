#ifndef MORE3D_QA_HPP_
#define MORE3D_QA_HPP_

#include <map>
#include <string>
#include <vector>

#include "more3d/scene.hpp"

namespace more3d {

// One QA triplet: question, answer text with literal `<SEG>` markers, and
// the marked instances in reading order.
struct QASample {
  std::string scene_id;
  std::string question;
  std::string answer;
  std::vector<int> targets;

  bool operator==(const QASample& other) const = default;
};

enum class Split { kTrain, kVal };

const char* split_name(Split split);

struct Dataset {
  std::vector<QASample> samples;
  Split split = Split::kTrain;
  std::map<std::string, Scene> scenes;  // scene index; may be attached later

  bool same_samples(const Dataset& other) const {
    return samples == other.samples && split == other.split;
  }
};

// Violations are data, not failures: empty list means the sample satisfies
// every invariant (marker/target bijection, targets exist, non-empty
// question, and the class name immediately preceding each marker matches
// the target's class).
std::vector<std::string> validate_sample(const QASample& sample,
                                         const Scene& scene);

struct DatasetStats {
  long n_scenes = 0;
  long n_samples = 0;
  double avg_questions_per_scene = 0.0;
  std::map<std::string, long> class_histogram;  // target count per class name
  std::map<int, long> seg_histogram;            // answers per marker count

  static double average(long n_samples, long n_scenes);
  std::string to_json() const;
};

// Requires every sample's scene to be resolvable through ds.scenes.
DatasetStats compute_stats(const Dataset& ds);

// JSONL, one sample per line:
// {"scene_id","question","answer","targets":[int,...]}
// Unknown fields and malformed lines are rejected naming line and byte
// offset. An empty file yields an empty dataset with a warning on stderr.
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path, Split split = Split::kTrain);

// Loads every *.json scene under a directory into an id-keyed index.
std::map<std::string, Scene> load_scene_dir(const std::string& dir);

}  // namespace more3d

#endif  // MORE3D_QA_HPP_
