#pragma once

#include <cmath>
#include <stdexcept>

#include "ssdet/geometry.hpp"
#include "ssdet/rng.hpp"

namespace ssdet {

// Global geometric augmentation: reflection across the X axis (y -> -y),
// uniform scaling, rotation about the vertical axis. Application order is
// fixed as reflect -> scale -> rotate; invert() and compose() are defined
// relative to that order.
struct GeoTransform {
  bool flip_x = false;
  double scale = 1.0;
  double rot_z = 0.0;
};

inline void validate(const GeoTransform& t) {
  if (!(t.scale > 0.0) || !std::isfinite(t.scale) || !std::isfinite(t.rot_z)) {
    throw std::invalid_argument("transform scale must be positive and finite");
  }
}

inline Vec2 apply_point(const GeoTransform& t, Vec2 p) {
  if (t.flip_x) p.y = -p.y;
  p.x *= t.scale;
  p.y *= t.scale;
  const double c = std::cos(t.rot_z);
  const double s = std::sin(t.rot_z);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

inline Vec3 apply_point(const GeoTransform& t, Vec3 p) {
  const Vec2 xy = apply_point(t, Vec2{p.x, p.y});
  return {xy.x, xy.y, p.z * t.scale};
}

inline Box3D apply(const GeoTransform& t, const Box3D& box) {
  const Vec3 center = apply_point(t, Vec3{box.cx, box.cy, box.cz});
  double yaw = t.flip_x ? -box.yaw : box.yaw;
  yaw += t.rot_z;
  return Box3D(center.x, center.y, center.z, box.length * t.scale,
               box.width * t.scale, box.height * t.scale, yaw);
}

// Returns t' with apply(t', apply(t, x)) == x. With the fixed
// reflect->scale->rotate order, the inverse of {f, s, r} is
// {f, 1/s, f ? r : -r}.
inline GeoTransform invert(const GeoTransform& t) {
  return {t.flip_x, 1.0 / t.scale, t.flip_x ? t.rot_z : -t.rot_z};
}

// Returns c with apply(c, x) == apply(outer, apply(inner, x)).
inline GeoTransform compose(const GeoTransform& outer, const GeoTransform& inner) {
  const double inner_rot = outer.flip_x ? -inner.rot_z : inner.rot_z;
  return {outer.flip_x != inner.flip_x, outer.scale * inner.scale,
          outer.rot_z + inner_rot};
}

// Transform aligning labels produced in the weak-augmentation frame with
// inputs seen under the strong augmentation.
inline GeoTransform alignment_transform(const GeoTransform& strong,
                                        const GeoTransform& weak) {
  return compose(strong, invert(weak));
}

struct AugmentationRanges {
  double flip_prob = 0.0;
  double scale_min = 1.0;
  double scale_max = 1.0;
  double rot_min = 0.0;
  double rot_max = 0.0;

  static AugmentationRanges strong_defaults() {
    return {0.5, 0.95, 1.05, -kPi / 4.0, kPi / 4.0};
  }
  // Weak augmentation defaults to the identity; ranges are configurable.
  static AugmentationRanges weak_defaults() { return {}; }
};

inline GeoTransform sample_transform(const AugmentationRanges& r, Rng& rng) {
  GeoTransform t;
  t.flip_x = rng.bernoulli(r.flip_prob);
  t.scale = r.scale_min == r.scale_max ? r.scale_min
                                       : rng.uniform(r.scale_min, r.scale_max);
  t.rot_z = r.rot_min == r.rot_max ? r.rot_min : rng.uniform(r.rot_min, r.rot_max);
  return t;
}

inline GeoTransform sample_strong(Rng& rng) {
  return sample_transform(AugmentationRanges::strong_defaults(), rng);
}

inline GeoTransform sample_weak(Rng& rng,
                                const AugmentationRanges& ranges =
                                    AugmentationRanges::weak_defaults()) {
  return sample_transform(ranges, rng);
}

}  // namespace ssdet
