#ifndef MORE3D_LOSSES_HPP_
#define MORE3D_LOSSES_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "more3d/errors.hpp"
#include "more3d/nn.hpp"
#include "more3d/scene.hpp"

namespace more3d {

struct LossReport {
  double l_ans = 0.0;
  double l_mask = 0.0;
  double l_cls = 0.0;
  double total = 0.0;
};

// Per-component toggles exist for the ablation harness only; disabled
// components are reported as 0 so total stays the exact sum.
struct LossToggles {
  bool ans = true;
  bool mask = true;
  bool cls = true;
};

inline LossReport total_loss(double l_ans, double l_mask, double l_cls,
                             const LossToggles& toggles = {}) {
  LossReport report;
  report.l_ans = toggles.ans ? l_ans : 0.0;
  report.l_mask = toggles.mask ? l_mask : 0.0;
  report.l_cls = toggles.cls ? l_cls : 0.0;
  if (!std::isfinite(report.l_ans)) throw RuntimeFault("non-finite l_ans");
  if (!std::isfinite(report.l_mask)) throw RuntimeFault("non-finite l_mask");
  if (!std::isfinite(report.l_cls)) throw RuntimeFault("non-finite l_cls");
  report.total = report.l_ans + report.l_mask + report.l_cls;
  return report;
}

// Mean token cross-entropy over the answer region (teacher forcing).
template <typename T>
double loss_ans(const std::vector<int>& gt_targets,
                const nn::Mat<T>& answer_logits, nn::Mat<T>* grad = nullptr) {
  return nn::softmax_cross_entropy(answer_logits, gt_targets, grad);
}

// Mean cross-entropy over the S per-object class labels.
template <typename T>
double loss_cls(const std::vector<int>& gt_classes,
                const nn::Mat<T>& cls_logits, nn::Mat<T>* grad = nullptr) {
  for (int c : gt_classes) {
    if (c < 0 || c >= cls_logits.cols()) {
      throw RuntimeFault("class id " + std::to_string(c) +
                         " outside [0," + std::to_string(cls_logits.cols()) + ")");
    }
  }
  return nn::softmax_cross_entropy(cls_logits, gt_classes, grad);
}

struct MaskLossParts {
  double bce = 0.0;   // mean over objects of the per-point mean BCE
  double dice = 0.0;  // mean over objects of the smoothed Dice term
  double total() const { return bce + dice; }
};

inline constexpr double kDiceSmoothing = 1.0;

// BCE(sigmoid(logits), m) + Dice with smoothing 1.0 on numerator and
// denominator, averaged over the S objects. Gradient is written w.r.t. the
// logits when grad is non-null. gt masks follow the GT answer's marker order.
template <typename T>
MaskLossParts loss_mask_parts(const std::vector<const InstanceMask*>& gt,
                              const nn::Mat<T>& mask_logits,
                              nn::Mat<T>* grad = nullptr) {
  const auto n_points = mask_logits.rows();
  const auto n_objects = mask_logits.cols();
  if (static_cast<size_t>(n_objects) != gt.size()) {
    throw RuntimeFault("mask loss: " + std::to_string(n_objects) +
                       " logit columns vs " + std::to_string(gt.size()) +
                       " ground-truth masks");
  }
  if (n_objects == 0) throw RuntimeFault("mask loss needs at least one object");
  if (grad) grad->setZero(n_points, n_objects);

  MaskLossParts parts;
  const double inv_objects = 1.0 / static_cast<double>(n_objects);
  const double inv_points = 1.0 / static_cast<double>(n_points);
  for (Eigen::Index k = 0; k < n_objects; ++k) {
    const InstanceMask& mask = *gt[static_cast<size_t>(k)];
    if (mask.size() != static_cast<size_t>(n_points)) {
      throw RuntimeFault("mask " + std::to_string(k) + " length " +
                         std::to_string(mask.size()) + " != point count " +
                         std::to_string(n_points));
    }
    double bce = 0.0;
    double sum_pm = 0.0, sum_p = 0.0, sum_m = 0.0;
    for (Eigen::Index p = 0; p < n_points; ++p) {
      const double z = static_cast<double>(mask_logits(p, k));
      const double m = mask.bits[static_cast<size_t>(p)] ? 1.0 : 0.0;
      // stable BCE on logits
      bce += std::max(z, 0.0) - z * m + std::log1p(std::exp(-std::abs(z)));
      const double prob = 1.0 / (1.0 + std::exp(-z));
      sum_pm += prob * m;
      sum_p += prob;
      sum_m += m;
    }
    const double numer = 2.0 * sum_pm + kDiceSmoothing;
    const double denom = sum_p + sum_m + kDiceSmoothing;
    parts.bce += bce * inv_points * inv_objects;
    parts.dice += (1.0 - numer / denom) * inv_objects;
    if (grad) {
      for (Eigen::Index p = 0; p < n_points; ++p) {
        const double z = static_cast<double>(mask_logits(p, k));
        const double m = mask.bits[static_cast<size_t>(p)] ? 1.0 : 0.0;
        const double prob = 1.0 / (1.0 + std::exp(-z));
        const double d_bce = (prob - m) * inv_points;
        // d(1 - numer/denom)/dprob, then dprob/dz = prob(1-prob)
        const double d_dice_dprob =
            -(2.0 * m * denom - numer) / (denom * denom);
        const double d_dice = d_dice_dprob * prob * (1.0 - prob);
        (*grad)(p, k) = static_cast<T>((d_bce + d_dice) * inv_objects);
      }
    }
  }
  return parts;
}

template <typename T>
double loss_mask(const std::vector<const InstanceMask*>& gt,
                 const nn::Mat<T>& mask_logits, nn::Mat<T>* grad = nullptr) {
  return loss_mask_parts(gt, mask_logits, grad).total();
}

}  // namespace more3d

#endif  // MORE3D_LOSSES_HPP_
