#ifndef MORE3D_METRICS_HPP_
#define MORE3D_METRICS_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "more3d/scene.hpp"

namespace more3d {

// IoU over equal-length masks; both-empty is a correct absent prediction and
// scores 1.0.
double iou(const InstanceMask& a, const InstanceMask& b);

struct MatchedPair {
  int pred_column = 0;
  int gt_index = 0;
  std::size_t intersection = 0;
  std::size_t union_count = 0;
};

// Alignment of one sample's predicted mask columns to its GT masks.
// Unmatched entries carry popcounts so cIoU can charge them.
struct MaskPairing {
  std::vector<MatchedPair> pairs;
  std::vector<int> unmatched_gt;           // gt indices
  std::vector<int> unmatched_pred;         // pred columns
  std::vector<std::size_t> unmatched_gt_popcount;
  std::vector<std::size_t> unmatched_pred_popcount;
  std::vector<int> gt_class_ids;           // class per gt index, for per-class
  int n_gt = 0;
  int n_pred = 0;
};

// Equal counts pair positionally (k<->k); otherwise greedy maximum-IoU with
// ties broken by lower pred then lower gt index.
MaskPairing align(const std::vector<InstanceMask>& pred,
                  const std::vector<InstanceMask>& gt,
                  const std::vector<int>& gt_class_ids = {});

// Mean over samples of the per-sample mean IoU across GT objects; unmatched
// GT count as 0. Unmatched predicted columns do not enter this mean (they are
// charged through cIoU and reported as false positives).
double giou(const std::vector<MaskPairing>& records);

// Cumulative intersections over cumulative unions; unmatched GT and pred
// masks contribute their full popcounts to the denominator. A zero total
// union is a vacuous dataset and scores 1.0 with a warning.
double ciou(const std::vector<MaskPairing>& records);

// False-positive mask columns across all records (unmatched predictions).
long count_false_positive_masks(const std::vector<MaskPairing>& records);

struct AnswerMetrics {
  double exact_match = 0.0;     // after whitespace/token normalization
  double seg_count_acc = 0.0;   // fraction with matching `<SEG>` counts
  double token_accuracy = 0.0;  // positional token agreement / max length
};

AnswerMetrics answer_metrics(const std::vector<std::string>& pred_answers,
                             const std::vector<std::string>& gt_answers);

struct PerClassIoU {
  int class_id = 0;
  std::string class_name;
  long n_objects = 0;
  std::optional<double> ciou;  // absent when the class never appears
};

struct EvalSummary {
  double ciou = 0.0;
  double giou = 0.0;
  double exact_match = 0.0;
  double seg_count_acc = 0.0;
  double token_accuracy = 0.0;
  long n_samples = 0;
  long false_positive_masks = 0;
  std::vector<PerClassIoU> per_class;  // all 20 classes

  std::string to_json() const;
};

// Aggregates pairings and answer texts; per-class table uses the GT object
// class ids recorded in each pairing.
EvalSummary summarize(const std::vector<MaskPairing>& records,
                      const std::vector<std::string>& pred_answers,
                      const std::vector<std::string>& gt_answers);

}  // namespace more3d

#endif  // MORE3D_METRICS_HPP_
