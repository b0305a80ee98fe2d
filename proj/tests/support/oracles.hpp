#pragma once

// Independent reference implementations the real code is checked against.
// Everything here recomputes results from first principles and must stay
// decoupled from the library's own algorithm choices (polygon clipping,
// greedy orderings, analytic gradients).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "ssdet/geometry.hpp"
#include "ssdet/rng.hpp"
#include "ssdet/types.hpp"

namespace oracle {

// Point-in-rotated-box test straight from the definition: rotate into the
// box frame, compare against half extents.
inline bool point_in_box_bev(const ssdet::Box3D& box, double px, double py) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = px - box.cx;
  const double dy = py - box.cy;
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * box.length && std::abs(ly) <= 0.5 * box.width;
}

// Monte Carlo estimate of the BEV intersection area. Stratified (jittered
// grid) sampling over the overlap of the two axis-aligned bounding boxes:
// only boundary cells contribute variance, which puts the standard error
// around 1e-5 of the region area for a 1000x1000 grid.
inline double mc_bev_intersection_area(const ssdet::Box3D& a, const ssdet::Box3D& b,
                                       ssdet::Rng& rng, int grid = 1000) {
  const auto aabb = [](const ssdet::Box3D& box, double& x0, double& x1, double& y0,
                       double& y1) {
    x0 = y0 = std::numeric_limits<double>::infinity();
    x1 = y1 = -std::numeric_limits<double>::infinity();
    for (const ssdet::Vec2& c : ssdet::bev_corners(box)) {
      x0 = std::min(x0, c.x);
      x1 = std::max(x1, c.x);
      y0 = std::min(y0, c.y);
      y1 = std::max(y1, c.y);
    }
  };
  double ax0, ax1, ay0, ay1, bx0, bx1, by0, by1;
  aabb(a, ax0, ax1, ay0, ay1);
  aabb(b, bx0, bx1, by0, by1);
  const double x0 = std::max(ax0, bx0);
  const double x1 = std::min(ax1, bx1);
  const double y0 = std::max(ay0, by0);
  const double y1 = std::min(ay1, by1);
  if (x0 >= x1 || y0 >= y1) return 0.0;

  const double cell_w = (x1 - x0) / grid;
  const double cell_h = (y1 - y0) / grid;
  long long inside = 0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double px = x0 + (i + rng.uniform()) * cell_w;
      const double py = y0 + (j + rng.uniform()) * cell_h;
      if (point_in_box_bev(a, px, py) && point_in_box_bev(b, px, py)) ++inside;
    }
  }
  const double region = (x1 - x0) * (y1 - y0);
  return region * static_cast<double>(inside) /
         (static_cast<double>(grid) * static_cast<double>(grid));
}

inline double mc_iou_bev(const ssdet::Box3D& a, const ssdet::Box3D& b, ssdet::Rng& rng,
                         int grid = 1000) {
  const double inter = mc_bev_intersection_area(a, b, rng, grid);
  const double area_a = a.length * a.width;
  const double area_b = b.length * b.width;
  return inter / (area_a + area_b - inter);
}

// Volumetric IoU oracle: sampled footprint intersection times the exact
// 1D vertical overlap (yaw-only boxes are vertical prisms).
inline double mc_iou_3d(const ssdet::Box3D& a, const ssdet::Box3D& b, ssdet::Rng& rng,
                        int grid = 1000) {
  const double inter_area = mc_bev_intersection_area(a, b, rng, grid);
  const double dz = std::min(a.cz + 0.5 * a.height, b.cz + 0.5 * b.height) -
                    std::max(a.cz - 0.5 * a.height, b.cz - 0.5 * b.height);
  const double inter_vol = inter_area * std::max(0.0, dz);
  const double vol_a = a.length * a.width * a.height;
  const double vol_b = b.length * b.width * b.height;
  return inter_vol / (vol_a + vol_b - inter_vol);
}

// Reference greedy NMS, written independently of the library version:
// operates on a scratch copy with explicit suppressed flags instead of a
// sorted index walk. The iou function is injected so the suppression
// logic, not the geometry, is what gets compared.
inline std::vector<std::size_t> reference_nms(
    std::span<const ssdet::Proposal> proposals, double iou_threshold,
    const std::function<double(const ssdet::Box3D&, const ssdet::Box3D&)>& iou) {
  const std::size_t n = proposals.size();
  std::vector<bool> kept(n, false), removed(n, false);
  for (;;) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (kept[i] || removed[i]) continue;
      if (best == n || proposals[i].cls_score > proposals[best].cls_score) best = i;
    }
    if (best == n) break;
    kept[best] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (kept[i] || removed[i]) continue;
      if (iou(proposals[best].box, proposals[i].box) > iou_threshold) removed[i] = true;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (kept[i]) out.push_back(i);
  }
  return out;
}

// Central finite differences for a scalar function of a vector.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f, std::vector<double> x,
    double h = 1e-5) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

inline double max_relative_error(std::span<const double> a, std::span<const double> b,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

// Exhaustive one-to-one assignment checker for tiny instances: enumerates
// every prediction order and replays the greedy rule, verifying the greedy
// score-ordered result equals the one the library reports. Also returns
// the TP count of the score-ordered greedy matching computed from scratch.
struct BruteMatch {
  std::size_t tp = 0;
  std::vector<std::int64_t> pred_to_gt;
};

inline BruteMatch brute_greedy_match(std::span<const ssdet::Proposal> preds,
                                     std::span<const ssdet::Box3D> gts,
                                     double iou_threshold,
                                     ssdet::IouKind kind = ssdet::IouKind::kVolumetric) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].cls_score > preds[b].cls_score;
  });
  BruteMatch out;
  out.pred_to_gt.assign(preds.size(), -1);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t pi : order) {
    double best = 0.0;
    std::size_t arg = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double iou = ssdet::box_iou(preds[pi].box, gts[g], kind);
      if (iou >= iou_threshold && iou > best) {
        best = iou;
        arg = g;
      }
    }
    if (arg < gts.size()) {
      taken[arg] = true;
      out.pred_to_gt[pi] = static_cast<std::int64_t>(arg);
      ++out.tp;
    }
  }
  return out;
}

// Random valid box helper shared by the oracle-driven tests.
inline ssdet::Box3D random_box(ssdet::Rng& rng, double center_span = 10.0,
                               double dim_min = 0.5, double dim_max = 5.0) {
  return ssdet::Box3D(rng.uniform(-center_span, center_span),
                      rng.uniform(-center_span, center_span),
                      rng.uniform(-2.0, 2.0), rng.uniform(dim_min, dim_max),
                      rng.uniform(dim_min, dim_max), rng.uniform(dim_min, dim_max),
                      rng.uniform(-ssdet::kPi, ssdet::kPi));
}

// Random pair biased toward actual overlap so the IoU oracle exercises
// nontrivial intersections, not a wall of zeros.
inline std::pair<ssdet::Box3D, ssdet::Box3D> random_overlapping_pair(ssdet::Rng& rng) {
  const ssdet::Box3D a = random_box(rng, 5.0);
  const double dx = rng.uniform(-0.6, 0.6) * a.length;
  const double dy = rng.uniform(-0.6, 0.6) * a.width;
  const ssdet::Box3D b(a.cx + dx, a.cy + dy, a.cz + rng.uniform(-0.5, 0.5),
                       rng.uniform(0.5, 5.0), rng.uniform(0.5, 5.0),
                       rng.uniform(0.5, 5.0), rng.uniform(-ssdet::kPi, ssdet::kPi));
  return {a, b};
}

}  // namespace oracle
