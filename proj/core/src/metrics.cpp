#include "more3d/metrics.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "more3d/classes.hpp"
#include "more3d/errors.hpp"
#include "more3d/text.hpp"

namespace more3d {

using json = nlohmann::json;

namespace {

void intersection_union(const InstanceMask& a, const InstanceMask& b,
                        std::size_t* inter, std::size_t* uni) {
  if (a.size() != b.size()) {
    throw RuntimeFault("mask length mismatch: " + std::to_string(a.size()) +
                       " vs " + std::to_string(b.size()));
  }
  std::size_t i = 0, u = 0;
  for (size_t p = 0; p < a.size(); ++p) {
    const bool pa = a.bits[p] != 0;
    const bool pb = b.bits[p] != 0;
    i += pa && pb;
    u += pa || pb;
  }
  *inter = i;
  *uni = u;
}

}  // namespace

double iou(const InstanceMask& a, const InstanceMask& b) {
  std::size_t inter = 0, uni = 0;
  intersection_union(a, b, &inter, &uni);
  if (uni == 0) return 1.0;  // both empty: correct absence
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MaskPairing align(const std::vector<InstanceMask>& pred,
                  const std::vector<InstanceMask>& gt,
                  const std::vector<int>& gt_class_ids) {
  MaskPairing pairing;
  pairing.n_pred = static_cast<int>(pred.size());
  pairing.n_gt = static_cast<int>(gt.size());
  pairing.gt_class_ids = gt_class_ids;
  if (!gt_class_ids.empty() && gt_class_ids.size() != gt.size()) {
    throw RuntimeFault("gt_class_ids length does not match gt mask count");
  }

  auto record_pair = [&](int p, int g) {
    MatchedPair pair;
    pair.pred_column = p;
    pair.gt_index = g;
    intersection_union(pred[static_cast<size_t>(p)], gt[static_cast<size_t>(g)],
                       &pair.intersection, &pair.union_count);
    pairing.pairs.push_back(pair);
  };

  if (pred.size() == gt.size()) {
    for (int k = 0; k < pairing.n_gt; ++k) record_pair(k, k);
    return pairing;
  }

  // Greedy maximum-IoU assignment; ties resolve to the lowest pred column,
  // then the lowest gt index.
  std::vector<bool> pred_used(pred.size(), false);
  std::vector<bool> gt_used(gt.size(), false);
  const int n_pairs = static_cast<int>(std::min(pred.size(), gt.size()));
  for (int step = 0; step < n_pairs; ++step) {
    double best = -1.0;
    int best_p = -1, best_g = -1;
    for (int p = 0; p < pairing.n_pred; ++p) {
      if (pred_used[static_cast<size_t>(p)]) continue;
      for (int g = 0; g < pairing.n_gt; ++g) {
        if (gt_used[static_cast<size_t>(g)]) continue;
        const double value = iou(pred[static_cast<size_t>(p)],
                                 gt[static_cast<size_t>(g)]);
        if (value > best) {
          best = value;
          best_p = p;
          best_g = g;
        }
      }
    }
    pred_used[static_cast<size_t>(best_p)] = true;
    gt_used[static_cast<size_t>(best_g)] = true;
    record_pair(best_p, best_g);
  }
  std::sort(pairing.pairs.begin(), pairing.pairs.end(),
            [](const MatchedPair& a, const MatchedPair& b) {
              return a.gt_index < b.gt_index;
            });
  for (int g = 0; g < pairing.n_gt; ++g) {
    if (!gt_used[static_cast<size_t>(g)]) {
      pairing.unmatched_gt.push_back(g);
      pairing.unmatched_gt_popcount.push_back(
          gt[static_cast<size_t>(g)].popcount());
    }
  }
  for (int p = 0; p < pairing.n_pred; ++p) {
    if (!pred_used[static_cast<size_t>(p)]) {
      pairing.unmatched_pred.push_back(p);
      pairing.unmatched_pred_popcount.push_back(
          pred[static_cast<size_t>(p)].popcount());
    }
  }
  return pairing;
}

double giou(const std::vector<MaskPairing>& records) {
  if (records.empty()) throw RuntimeFault("giou needs at least one record");
  double total = 0.0;
  for (const auto& record : records) {
    double sample_value;
    if (record.n_gt == 0) {
      // No requested objects: correct only if nothing was predicted.
      sample_value = record.n_pred == 0 ? 1.0 : 0.0;
    } else {
      double sum = 0.0;
      for (const auto& pair : record.pairs) {
        sum += pair.union_count == 0
                   ? 1.0
                   : static_cast<double>(pair.intersection) /
                         static_cast<double>(pair.union_count);
      }
      // unmatched GT contribute 0
      sample_value = sum / static_cast<double>(record.n_gt);
    }
    total += sample_value;
  }
  return total / static_cast<double>(records.size());
}

double ciou(const std::vector<MaskPairing>& records) {
  if (records.empty()) throw RuntimeFault("ciou needs at least one record");
  long double inter = 0.0L, uni = 0.0L;
  for (const auto& record : records) {
    for (const auto& pair : record.pairs) {
      inter += static_cast<long double>(pair.intersection);
      uni += static_cast<long double>(pair.union_count);
    }
    for (auto count : record.unmatched_gt_popcount) uni += static_cast<long double>(count);
    for (auto count : record.unmatched_pred_popcount) uni += static_cast<long double>(count);
  }
  if (uni == 0.0L) {
    std::cerr << "warning: ciou over vacuous dataset (zero total union)\n";
    return 1.0;
  }
  return static_cast<double>(inter / uni);
}

long count_false_positive_masks(const std::vector<MaskPairing>& records) {
  long count = 0;
  for (const auto& record : records) {
    count += static_cast<long>(record.unmatched_pred.size());
  }
  return count;
}

AnswerMetrics answer_metrics(const std::vector<std::string>& pred_answers,
                             const std::vector<std::string>& gt_answers) {
  if (pred_answers.size() != gt_answers.size()) {
    throw RuntimeFault("answer list length mismatch: " +
                       std::to_string(pred_answers.size()) + " vs " +
                       std::to_string(gt_answers.size()));
  }
  if (pred_answers.empty()) throw RuntimeFault("answer_metrics needs samples");
  AnswerMetrics metrics;
  for (size_t i = 0; i < pred_answers.size(); ++i) {
    const auto pred_tokens = tokenize(pred_answers[i]);
    const auto gt_tokens = tokenize(gt_answers[i]);
    if (pred_tokens == gt_tokens) metrics.exact_match += 1.0;
    const int pred_segs = count_seg_markers(pred_answers[i]);
    const int gt_segs = count_seg_markers(gt_answers[i]);
    if (pred_segs == gt_segs) metrics.seg_count_acc += 1.0;
    const size_t longest = std::max(pred_tokens.size(), gt_tokens.size());
    if (longest > 0) {
      size_t agree = 0;
      const size_t overlap = std::min(pred_tokens.size(), gt_tokens.size());
      for (size_t t = 0; t < overlap; ++t) {
        agree += pred_tokens[t] == gt_tokens[t];
      }
      metrics.token_accuracy +=
          static_cast<double>(agree) / static_cast<double>(longest);
    } else {
      metrics.token_accuracy += 1.0;  // both empty
    }
  }
  const auto n = static_cast<double>(pred_answers.size());
  metrics.exact_match /= n;
  metrics.seg_count_acc /= n;
  metrics.token_accuracy /= n;
  return metrics;
}

std::string EvalSummary::to_json() const {
  json j;
  j["ciou"] = ciou;
  j["giou"] = giou;
  j["exact_match"] = exact_match;
  j["seg_count_acc"] = seg_count_acc;
  j["token_accuracy"] = token_accuracy;
  j["n_samples"] = n_samples;
  j["false_positive_masks"] = false_positive_masks;
  j["notes"] =
      "equal seg counts pair positionally, otherwise greedy max-IoU; "
      "unmatched GT zero the per-sample mean, unmatched predictions are "
      "charged in the ciou denominator and counted as false positives";
  json per_class_json = json::array();
  for (const auto& entry : per_class) {
    json row;
    row["class_id"] = entry.class_id;
    row["class_name"] = entry.class_name;
    row["n_objects"] = entry.n_objects;
    if (entry.ciou.has_value()) {
      row["ciou"] = *entry.ciou;
    } else {
      row["ciou"] = nullptr;
    }
    per_class_json.push_back(std::move(row));
  }
  j["per_class"] = std::move(per_class_json);
  return j.dump(2);
}

EvalSummary summarize(const std::vector<MaskPairing>& records,
                      const std::vector<std::string>& pred_answers,
                      const std::vector<std::string>& gt_answers) {
  EvalSummary summary;
  summary.ciou = ciou(records);
  summary.giou = giou(records);
  summary.n_samples = static_cast<long>(records.size());
  summary.false_positive_masks = count_false_positive_masks(records);
  const AnswerMetrics answers = answer_metrics(pred_answers, gt_answers);
  summary.exact_match = answers.exact_match;
  summary.seg_count_acc = answers.seg_count_acc;
  summary.token_accuracy = answers.token_accuracy;

  std::vector<long double> class_inter(kNumClasses, 0.0L);
  std::vector<long double> class_union(kNumClasses, 0.0L);
  std::vector<long> class_objects(kNumClasses, 0);
  for (const auto& record : records) {
    if (record.gt_class_ids.empty()) continue;
    for (const auto& pair : record.pairs) {
      const int c = record.gt_class_ids[static_cast<size_t>(pair.gt_index)];
      class_inter[static_cast<size_t>(c)] += static_cast<long double>(pair.intersection);
      class_union[static_cast<size_t>(c)] += static_cast<long double>(pair.union_count);
      ++class_objects[static_cast<size_t>(c)];
    }
    for (size_t u = 0; u < record.unmatched_gt.size(); ++u) {
      const int c = record.gt_class_ids[static_cast<size_t>(record.unmatched_gt[u])];
      class_union[static_cast<size_t>(c)] +=
          static_cast<long double>(record.unmatched_gt_popcount[u]);
      ++class_objects[static_cast<size_t>(c)];
    }
  }
  for (int c = 0; c < kNumClasses; ++c) {
    PerClassIoU entry;
    entry.class_id = c;
    entry.class_name = class_name(c);
    entry.n_objects = class_objects[static_cast<size_t>(c)];
    if (entry.n_objects > 0 && class_union[static_cast<size_t>(c)] > 0.0L) {
      entry.ciou = static_cast<double>(class_inter[static_cast<size_t>(c)] /
                                       class_union[static_cast<size_t>(c)]);
    }
    summary.per_class.push_back(std::move(entry));
  }
  return summary;
}

}  // namespace more3d
