#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "ssdet/geometry.hpp"
#include "ssdet/types.hpp"

namespace ssdet {

// Greedy BEV non-maximum suppression. Proposals are visited in order of
// descending cls_score (ties broken by ascending input index); a proposal
// is suppressed iff its BEV IoU with an already-kept proposal is strictly
// greater than iou_threshold (IoU == threshold survives). Returns the kept
// indices in input order.
inline std::vector<std::size_t> nms_bev(std::span<const Proposal> proposals,
                                        double iou_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("nms iou_threshold must lie in [0, 1]");
  }
  for (const Proposal& p : proposals) {
    if (!std::isfinite(p.cls_score)) {
      throw std::invalid_argument("nms requires finite scores");
    }
  }

  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (proposals[a].cls_score != proposals[b].cls_score) {
      return proposals[a].cls_score > proposals[b].cls_score;
    }
    return a < b;
  });

  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (iou_bev(proposals[idx].box, proposals[k].box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace ssdet
