#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "ssdet/nms.hpp"
#include "ssdet/schedule.hpp"
#include "ssdet/types.hpp"

namespace ssdet {

// Teacher proposals promoted to training targets. source_indices maps each
// retained label back to its position in the proposal list the set was
// generated from.
struct PseudoLabelSet {
  std::vector<Proposal> labels;
  std::vector<std::size_t> source_indices;
  std::uint64_t source_iteration = 0;
  double applied_threshold = 0.0;
};

namespace detail {
inline PseudoLabelSet keep_by_threshold(std::span<const Proposal> proposals,
                                        std::span<const std::size_t> candidates,
                                        double threshold, std::uint64_t t) {
  PseudoLabelSet set;
  set.source_iteration = t;
  set.applied_threshold = threshold;
  for (std::size_t idx : candidates) {
    if (proposals[idx].cls_score >= threshold) {
      set.labels.push_back(proposals[idx]);
      set.source_indices.push_back(idx);
    }
  }
  return set;
}
}  // namespace detail

// Sparse baseline: per-class NMS first, then proposals below the fixed
// confidence threshold are dropped. Output preserves input order.
inline PseudoLabelSet generate_sparse(std::span<const Proposal> proposals,
                                      double fixed_threshold, double nms_iou,
                                      std::uint64_t t = 0) {
  std::vector<std::size_t> survivors;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::vector<Proposal> of_class;
    std::vector<std::size_t> back;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      if (proposals[i].class_id == static_cast<ObjectClass>(c)) {
        of_class.push_back(proposals[i]);
        back.push_back(i);
      }
    }
    for (std::size_t kept : nms_bev(of_class, nms_iou)) {
      survivors.push_back(back[kept]);
    }
  }
  std::sort(survivors.begin(), survivors.end());
  return detail::keep_by_threshold(proposals, survivors, fixed_threshold, t);
}

// Dense strategy: no suppression at all; every proposal at or above the
// threshold is retained, duplicates included.
inline PseudoLabelSet generate_dense(std::span<const Proposal> proposals,
                                     double threshold, std::uint64_t t = 0) {
  std::vector<std::size_t> all(proposals.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return detail::keep_by_threshold(proposals, all, threshold, t);
}

inline PseudoLabelSet generate_dense(std::span<const Proposal> proposals,
                                     const ThresholdSchedule& schedule,
                                     std::uint64_t t) {
  return generate_dense(proposals, value_at(schedule, t), t);
}

// How good a pseudo-label set is against ground truth.
//
// precision / recall come from greedy one-to-one matching (labels visited
// by descending cls_score, each grabbing the best unmatched same-class GT
// with IoU at or above that class's threshold). label_correctness and
// gt_coverage are the many-to-one views: the fraction of labels that hit
// some GT, and the fraction of GT hit by some label. Both views are needed
// because duplicates covering one object are correct supervision but can
// never all win a one-to-one match.
struct LabelQuality {
  double precision = 0.0;
  double recall = 0.0;
  double gt_coverage = 0.0;
  double mean_matched_iou = 0.0;
  double label_correctness = 0.0;
  bool precision_defined = false;
  std::size_t matched = 0;
  std::size_t correct_labels = 0;
  std::size_t covered_gt = 0;
  std::size_t n_labels = 0;
  std::size_t n_gt = 0;
};

inline LabelQuality label_quality(const PseudoLabelSet& pseudo,
                                  std::span<const LabeledBox> gt,
                                  const IouThresholds& thresholds = {},
                                  IouKind kind = IouKind::kVolumetric) {
  LabelQuality q;
  q.n_labels = pseudo.labels.size();
  q.n_gt = gt.size();

  std::vector<std::size_t> order(pseudo.labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pseudo.labels[a].cls_score != pseudo.labels[b].cls_score) {
      return pseudo.labels[a].cls_score > pseudo.labels[b].cls_score;
    }
    return a < b;
  });

  std::vector<char> gt_taken(gt.size(), 0);
  std::vector<char> gt_covered(gt.size(), 0);
  double matched_iou_sum = 0.0;
  for (std::size_t li : order) {
    const Proposal& label = pseudo.labels[li];
    const double thr = thresholds.for_class(label.class_id);
    double best_iou = 0.0;
    std::size_t best_gt = gt.size();
    bool correct = false;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (gt[g].class_id != label.class_id) continue;
      const double iou = box_iou(label.box, gt[g].box, kind);
      if (iou >= thr) {
        correct = true;
        gt_covered[g] = 1;
        if (!gt_taken[g] && iou > best_iou) {
          best_iou = iou;
          best_gt = g;
        }
      }
    }
    if (correct) ++q.correct_labels;
    if (best_gt < gt.size()) {
      gt_taken[best_gt] = 1;
      ++q.matched;
      matched_iou_sum += best_iou;
    }
  }

  for (char c : gt_covered) q.covered_gt += c;
  q.precision_defined = q.n_labels > 0;
  q.precision = q.precision_defined
                    ? static_cast<double>(q.matched) / static_cast<double>(q.n_labels)
                    : 0.0;
  q.label_correctness =
      q.precision_defined
          ? static_cast<double>(q.correct_labels) / static_cast<double>(q.n_labels)
          : 0.0;
  q.recall = q.n_gt > 0
                 ? static_cast<double>(q.matched) / static_cast<double>(q.n_gt)
                 : 1.0;
  q.gt_coverage = q.n_gt > 0
                      ? static_cast<double>(q.covered_gt) / static_cast<double>(q.n_gt)
                      : 1.0;
  q.mean_matched_iou = q.matched > 0 ? matched_iou_sum / static_cast<double>(q.matched)
                                     : 0.0;
  return q;
}

}  // namespace ssdet
