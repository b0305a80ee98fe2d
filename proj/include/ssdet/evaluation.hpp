#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "ssdet/csv.hpp"
#include "ssdet/types.hpp"

namespace ssdet {

struct EvalConfig {
  IouThresholds iou_thresholds;
  int recall_positions = 40;
  IouKind iou_kind = IouKind::kVolumetric;
};

inline void validate(const EvalConfig& c) {
  for (double t : {c.iou_thresholds.car, c.iou_thresholds.pedestrian,
                   c.iou_thresholds.cyclist}) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw std::invalid_argument("eval iou thresholds must lie in (0, 1]");
    }
  }
  if (c.recall_positions < 1) {
    throw std::invalid_argument("recall_positions must be >= 1");
  }
}

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct GreedyMatchResult {
  MatchCounts counts;
  // Per prediction: matched GT index, or -1 for a false positive.
  std::vector<std::int64_t> pred_to_gt;
};

// Devkit-style greedy assignment for a single class: predictions visited
// in descending score (ties by input index), each matching the
// highest-IoU still-unmatched GT with IoU >= iou_threshold.
inline GreedyMatchResult greedy_match(std::span<const Proposal> preds,
                                      std::span<const Box3D> gts,
                                      double iou_threshold,
                                      IouKind kind = IouKind::kVolumetric) {
  GreedyMatchResult r;
  r.pred_to_gt.assign(preds.size(), -1);

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a].cls_score != preds[b].cls_score) {
      return preds[a].cls_score > preds[b].cls_score;
    }
    return a < b;
  });

  std::vector<char> gt_taken(gts.size(), 0);
  for (std::size_t pi : order) {
    double best_iou = 0.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) continue;
      const double iou = box_iou(preds[pi].box, gts[g], kind);
      if (iou >= iou_threshold && iou > best_iou) {
        best_iou = iou;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      gt_taken[best_gt] = 1;
      r.pred_to_gt[pi] = static_cast<std::int64_t>(best_gt);
      ++r.counts.tp;
    } else {
      ++r.counts.fp;
    }
  }
  r.counts.fn = gts.size() - r.counts.tp;
  return r;
}

// One scored detection outcome feeding the PR curve.
struct ScoredHit {
  double score = 0.0;
  bool tp = false;
};

// Interpolated average precision sampled at `recall_positions` evenly
// spaced recall points (1/N, 2/N, ..., 1). Precision is interpolated with
// a running max from the right. With zero ground truth AP is undefined and
// nullopt is returned. If pr_curve_out is non-null it receives the sampled
// precisions.
inline std::optional<double> average_precision(std::vector<ScoredHit> hits,
                                               std::size_t n_gt,
                                               int recall_positions = 40,
                                               std::vector<double>* pr_curve_out = nullptr) {
  if (n_gt == 0) return std::nullopt;
  std::stable_sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tp && !b.tp;
  });

  std::vector<double> recalls(hits.size());
  std::vector<double> precisions(hits.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i].tp) ++tp;
    recalls[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precisions[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Right-running max.
  for (std::size_t i = hits.size(); i-- > 1;) {
    precisions[i - 1] = std::max(precisions[i - 1], precisions[i]);
  }

  double sum = 0.0;
  std::vector<double> samples(static_cast<std::size_t>(recall_positions), 0.0);
  std::size_t cursor = 0;
  for (int k = 1; k <= recall_positions; ++k) {
    const double r = static_cast<double>(k) / static_cast<double>(recall_positions);
    while (cursor < hits.size() && recalls[cursor] < r - 1e-12) ++cursor;
    const double p = cursor < hits.size() ? precisions[cursor] : 0.0;
    samples[static_cast<std::size_t>(k - 1)] = p;
    sum += p;
  }
  if (pr_curve_out) *pr_curve_out = std::move(samples);
  return sum / static_cast<double>(recall_positions);
}

struct FpFnRow {
  double threshold = 0.0;
  MatchCounts counts;
};

// FP / FN as a function of the confidence cutoff: at each threshold,
// predictions scoring below it are discarded before matching.
inline std::vector<FpFnRow> fp_fn_sweep(std::span<const Proposal> preds,
                                        std::span<const LabeledBox> gts,
                                        std::span<const double> thresholds,
                                        const EvalConfig& cfg = {}) {
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (thresholds[i] < thresholds[i - 1]) {
      throw std::invalid_argument("fp_fn_sweep thresholds must be ascending");
    }
  }
  std::vector<FpFnRow> rows;
  rows.reserve(thresholds.size());
  for (double tau : thresholds) {
    FpFnRow row;
    row.threshold = tau;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto cls = static_cast<ObjectClass>(c);
      std::vector<Proposal> kept;
      for (const Proposal& p : preds) {
        if (p.class_id == cls && p.cls_score >= tau) kept.push_back(p);
      }
      std::vector<Box3D> cls_gt;
      for (const LabeledBox& g : gts) {
        if (g.class_id == cls) cls_gt.push_back(g.box);
      }
      const auto m = greedy_match(kept, cls_gt, cfg.iou_thresholds.for_class(cls),
                                  cfg.iou_kind);
      row.counts.tp += m.counts.tp;
      row.counts.fp += m.counts.fp;
      row.counts.fn += m.counts.fn;
    }
    rows.push_back(row);
  }
  return rows;
}

// A scene's predictions and ground truth, the unit the evaluator consumes.
struct SceneDetections {
  std::vector<Proposal> preds;
  std::vector<LabeledBox> gts;
};

struct EvalReport {
  struct ClassEntry {
    ObjectClass cls = ObjectClass::Car;
    std::size_t n_gt = 0;
    std::optional<double> ap;
    std::vector<double> pr_curve;       // sampled precisions, low..high recall
    std::vector<FpFnRow> threshold_rows;
  };
  std::array<ClassEntry, kNumClasses> classes;
  std::optional<double> map;  // mean over classes with defined AP
};

// Full evaluation over a scene set: per-class AP at `recall_positions`
// recall points plus TP/FP/FN counts at each operating threshold.
inline EvalReport evaluate_detections(std::span<const SceneDetections> scenes,
                                      const EvalConfig& cfg = {},
                                      std::span<const double> operating_thresholds = {}) {
  validate(cfg);
  static const double kDefaultThreshold[] = {0.0};
  if (operating_thresholds.empty()) operating_thresholds = kDefaultThreshold;

  EvalReport report;
  double ap_sum = 0.0;
  std::size_t ap_count = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto cls = static_cast<ObjectClass>(c);
    auto& entry = report.classes[c];
    entry.cls = cls;

    std::vector<ScoredHit> hits;
    std::size_t n_gt = 0;
    for (const SceneDetections& scene : scenes) {
      std::vector<Proposal> preds;
      for (const Proposal& p : scene.preds) {
        if (p.class_id == cls) preds.push_back(p);
      }
      std::vector<Box3D> gts;
      for (const LabeledBox& g : scene.gts) {
        if (g.class_id == cls) gts.push_back(g.box);
      }
      n_gt += gts.size();
      const auto m = greedy_match(preds, gts, cfg.iou_thresholds.for_class(cls),
                                  cfg.iou_kind);
      for (std::size_t i = 0; i < preds.size(); ++i) {
        hits.push_back({preds[i].cls_score, m.pred_to_gt[i] >= 0});
      }
    }
    entry.n_gt = n_gt;
    entry.ap = average_precision(hits, n_gt, cfg.recall_positions, &entry.pr_curve);
    if (entry.ap) {
      ap_sum += *entry.ap;
      ++ap_count;
    }

    for (double tau : operating_thresholds) {
      FpFnRow row;
      row.threshold = tau;
      for (const SceneDetections& scene : scenes) {
        std::vector<Proposal> preds;
        for (const Proposal& p : scene.preds) {
          if (p.class_id == cls && p.cls_score >= tau) preds.push_back(p);
        }
        std::vector<Box3D> gts;
        for (const LabeledBox& g : scene.gts) {
          if (g.class_id == cls) gts.push_back(g.box);
        }
        const auto m = greedy_match(preds, gts, cfg.iou_thresholds.for_class(cls),
                                    cfg.iou_kind);
        row.counts.tp += m.counts.tp;
        row.counts.fp += m.counts.fp;
        row.counts.fn += m.counts.fn;
      }
      entry.threshold_rows.push_back(row);
    }
  }
  if (ap_count > 0) report.map = ap_sum / static_cast<double>(ap_count);
  return report;
}

// CSV with fixed column order:
// class,threshold,tp,fp,fn,precision,recall,ap
inline void write_csv(const EvalReport& report, std::ostream& os) {
  os << "class,threshold,tp,fp,fn,precision,recall,ap\n";
  for (const auto& entry : report.classes) {
    for (const FpFnRow& row : entry.threshold_rows) {
      const std::size_t kept = row.counts.tp + row.counts.fp;
      const double precision =
          kept > 0 ? static_cast<double>(row.counts.tp) / static_cast<double>(kept) : 0.0;
      const double recall =
          entry.n_gt > 0
              ? static_cast<double>(row.counts.tp) / static_cast<double>(entry.n_gt)
              : 0.0;
      os << class_name(entry.cls) << ',' << format_double(row.threshold, 3) << ','
         << row.counts.tp << ',' << row.counts.fp << ',' << row.counts.fn << ','
         << format_double(precision) << ',' << format_double(recall) << ','
         << (entry.ap ? format_double(*entry.ap) : "undefined") << '\n';
    }
  }
}

}  // namespace ssdet
