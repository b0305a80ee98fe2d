#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ssdet/geometry.hpp"
#include "ssdet/rng.hpp"
#include "ssdet/types.hpp"

namespace ssdet {

struct PlacementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Extent {
  double x_min = 0.0;
  double x_max = 70.4;
  double y_min = -40.0;
  double y_max = 40.0;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct ClassGeometry {
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
};

// Synthetic scene layout: per-class object counts, the spatial extent
// objects are placed in, canonical object sizes with relative jitter, and
// the seed everything is derived from.
struct SceneSpec {
  std::array<IntRange, kNumClasses> counts{IntRange{3, 8}, IntRange{1, 4}, IntRange{0, 3}};
  Extent extent;
  std::array<ClassGeometry, kNumClasses> canonical{
      ClassGeometry{3.9, 1.6, 1.56},   // Car
      ClassGeometry{0.8, 0.6, 1.73},   // Pedestrian
      ClassGeometry{1.76, 0.6, 1.73},  // Cyclist
  };
  double dim_jitter = 0.1;
  double ground_z = -1.0;
  std::uint64_t seed = 0;
  double max_gt_bev_iou = 0.05;
  int placement_retries = 100;
};

inline void validate(const SceneSpec& spec) {
  if (!(spec.extent.x_max > spec.extent.x_min) || !(spec.extent.y_max > spec.extent.y_min)) {
    throw std::invalid_argument("scene extent must be positive");
  }
  for (const IntRange& r : spec.counts) {
    if (r.lo < 0 || r.hi < r.lo) {
      throw std::invalid_argument("scene object counts must satisfy 0 <= lo <= hi");
    }
  }
}

// Deterministic per (seed, index): scene i never depends on scenes 0..i-1.
// Ground-truth footprints overlap at most max_gt_bev_iou; placement gives
// up after placement_retries failed draws per object.
inline std::vector<LabeledBox> gen_scene(const SceneSpec& spec, std::uint64_t index) {
  validate(spec);
  Rng rng = derived_rng(spec.seed, {streams::kScene, index});
  std::vector<LabeledBox> scene;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const int count = rng.uniform_int(spec.counts[c].lo, spec.counts[c].hi);
    const ClassGeometry& geom = spec.canonical[c];
    for (int k = 0; k < count; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < spec.placement_retries; ++attempt) {
        const double length = geom.length * (1.0 + spec.dim_jitter * rng.uniform(-1.0, 1.0));
        const double width = geom.width * (1.0 + spec.dim_jitter * rng.uniform(-1.0, 1.0));
        const double height = geom.height * (1.0 + spec.dim_jitter * rng.uniform(-1.0, 1.0));
        const double cx = rng.uniform(spec.extent.x_min, spec.extent.x_max);
        const double cy = rng.uniform(spec.extent.y_min, spec.extent.y_max);
        const double cz = spec.ground_z + 0.5 * height + rng.uniform(-0.1, 0.1);
        const double yaw = rng.uniform(-kPi, kPi);
        const Box3D box(cx, cy, cz, length, width, height, yaw);
        bool clear = true;
        for (const LabeledBox& other : scene) {
          if (iou_bev(box, other.box) > spec.max_gt_bev_iou) {
            clear = false;
            break;
          }
        }
        if (clear) {
          scene.push_back({box, static_cast<ObjectClass>(c)});
          placed = true;
          break;
        }
      }
      if (!placed) {
        throw PlacementError("gen_scene: could not place object after retries");
      }
    }
  }
  return scene;
}

// Localization-noise scale as a function of the training iteration;
// linearly improving until t_max, then flat at sigma_inf.
struct QualityCurve {
  double sigma0 = 0.5;
  double sigma_inf = 0.05;
  std::uint64_t t_max = 2000;

  double at(std::uint64_t t) const {
    const double frac = t_max == 0 ? 1.0
                                   : std::min(1.0, static_cast<double>(t) /
                                                       static_cast<double>(t_max));
    return sigma0 * (1.0 - frac) + sigma_inf;
  }
};

// Stochastic teacher. Each ground-truth object spawns a handful of noisy
// duplicate proposals whose localization error scales with the quality
// curve; clutter proposals land anywhere. Scores are a linear mix of the
// proposal's true IoU and uniform noise:
//   score = clamp(rho * true_iou + (1 - rho) * u, 0, 1)
// so rho = 1 gives perfectly calibrated scores and rho = 0 pure noise.
struct TeacherModel {
  QualityCurve quality;
  double rho_cls = 0.4;
  double rho_iou = 0.85;
  IntRange duplicates_per_gt{1, 4};
  IntRange clutter_per_scene{1, 5};
  double dim_noise_scale = 0.08;  // log-size sigma per meter of sigma_loc
  double yaw_noise_scale = 0.4;   // yaw sigma (rad) per meter of sigma_loc
};

inline void validate(const TeacherModel& m) {
  if (!(m.quality.sigma0 >= 0.0) || !(m.quality.sigma_inf >= 0.0)) {
    throw std::invalid_argument("teacher noise scales must be non-negative");
  }
  if (!(m.rho_cls >= 0.0 && m.rho_cls <= 1.0) || !(m.rho_iou >= 0.0 && m.rho_iou <= 1.0)) {
    throw std::invalid_argument("teacher score correlations must lie in [0, 1]");
  }
  if (m.duplicates_per_gt.lo < 0 || m.duplicates_per_gt.hi < m.duplicates_per_gt.lo ||
      m.clutter_per_scene.lo < 0 || m.clutter_per_scene.hi < m.clutter_per_scene.lo) {
    throw std::invalid_argument("teacher count ranges must satisfy 0 <= lo <= hi");
  }
}

namespace detail {
inline double mixed_score(double rho, double true_iou, double u) {
  return std::clamp(rho * true_iou + (1.0 - rho) * u, 0.0, 1.0);
}
}  // namespace detail

// Proposals for one scene at iteration t. Deterministic given the rng
// state; callers derive the rng from (seed, scene index, t).
inline std::vector<Proposal> gen_proposals(std::span<const LabeledBox> scene,
                                           const TeacherModel& teacher,
                                           const SceneSpec& spec, std::uint64_t t,
                                           Rng& rng) {
  validate(teacher);
  const double sigma = teacher.quality.at(t);
  std::vector<Proposal> proposals;

  for (const LabeledBox& gt : scene) {
    const int dups = rng.uniform_int(teacher.duplicates_per_gt.lo,
                                     teacher.duplicates_per_gt.hi);
    for (int d = 0; d < dups; ++d) {
      const double cx = gt.box.cx + rng.normal(0.0, sigma);
      const double cy = gt.box.cy + rng.normal(0.0, sigma);
      const double cz = gt.box.cz + rng.normal(0.0, 0.5 * sigma);
      const double length = gt.box.length * std::exp(rng.normal(0.0, teacher.dim_noise_scale * sigma));
      const double width = gt.box.width * std::exp(rng.normal(0.0, teacher.dim_noise_scale * sigma));
      const double height = gt.box.height * std::exp(rng.normal(0.0, teacher.dim_noise_scale * sigma));
      const double yaw = gt.box.yaw + rng.normal(0.0, teacher.yaw_noise_scale * sigma);
      const Box3D box(cx, cy, cz, length, width, height, yaw);
      const double true_iou = iou_3d(box, gt.box);
      Proposal p{box, gt.class_id, 0.0, 0.0};
      p.cls_score = detail::mixed_score(teacher.rho_cls, true_iou, rng.uniform());
      p.iou_score = detail::mixed_score(teacher.rho_iou, true_iou, rng.uniform());
      proposals.push_back(p);
    }
  }

  const int clutter = rng.uniform_int(teacher.clutter_per_scene.lo,
                                      teacher.clutter_per_scene.hi);
  for (int k = 0; k < clutter; ++k) {
    const auto cls = static_cast<ObjectClass>(rng.uniform_int(0, kNumClasses - 1));
    const ClassGeometry& geom = spec.canonical[static_cast<std::size_t>(cls)];
    const double length = geom.length * (1.0 + spec.dim_jitter * rng.uniform(-1.0, 1.0));
    const double width = geom.width * (1.0 + spec.dim_jitter * rng.uniform(-1.0, 1.0));
    const double height = geom.height * (1.0 + spec.dim_jitter * rng.uniform(-1.0, 1.0));
    const double cx = rng.uniform(spec.extent.x_min, spec.extent.x_max);
    const double cy = rng.uniform(spec.extent.y_min, spec.extent.y_max);
    const double cz = spec.ground_z + 0.5 * height;
    const double yaw = rng.uniform(-kPi, kPi);
    const Box3D box(cx, cy, cz, length, width, height, yaw);
    double true_iou = 0.0;
    for (const LabeledBox& gt : scene) {
      if (gt.class_id == cls) true_iou = std::max(true_iou, iou_3d(box, gt.box));
    }
    Proposal p{box, cls, 0.0, 0.0};
    p.cls_score = detail::mixed_score(teacher.rho_cls, true_iou, rng.uniform());
    p.iou_score = detail::mixed_score(teacher.rho_iou, true_iou, rng.uniform());
    proposals.push_back(p);
  }
  return proposals;
}

}  // namespace ssdet
