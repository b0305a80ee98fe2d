#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace ssdet {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Vertex-coincidence tolerance for polygon clipping, in meters.
inline constexpr double kGeomEps = 1e-9;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

// Maps any angle into (-pi, pi].
inline double normalize_yaw(double yaw) {
  double y = std::fmod(yaw, 2.0 * kPi);
  if (y <= -kPi) {
    y += 2.0 * kPi;
  } else if (y > kPi) {
    y -= 2.0 * kPi;
  }
  return y;
}

struct InvalidBoxError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Oriented 3D box: center, dimensions, rotation about the vertical axis.
// Dimensions must be strictly positive; yaw is stored normalized to
// (-pi, pi] so equality and invariant checks are well-defined.
struct Box3D {
  double cx, cy, cz;
  double length, width, height;
  double yaw;

  Box3D(double cx_, double cy_, double cz_, double length_, double width_,
        double height_, double yaw_)
      : cx(cx_), cy(cy_), cz(cz_),
        length(length_), width(width_), height(height_),
        yaw(normalize_yaw(yaw_)) {
    if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0)) {
      throw InvalidBoxError("box dimensions must be positive");
    }
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(cz) ||
        !std::isfinite(length) || !std::isfinite(width) ||
        !std::isfinite(height) || !std::isfinite(yaw)) {
      throw InvalidBoxError("box fields must be finite");
    }
  }

  double bottom() const { return cz - 0.5 * height; }
  double top() const { return cz + 0.5 * height; }
};

// Footprint corners, counter-clockwise. Corner 0 is (+l/2, +w/2) in the
// box frame; the centroid of the four corners is exactly the box center.
inline std::array<Vec2, 4> bev_corners(const Box3D& box) {
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const std::array<Vec2, 4> local = {Vec2{hl, hw}, Vec2{-hl, hw},
                                     Vec2{-hl, -hw}, Vec2{hl, -hw}};
  std::array<Vec2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {box.cx + c * local[i].x - s * local[i].y,
              box.cy + s * local[i].x + c * local[i].y};
  }
  return out;
}

// Shoelace area of a counter-clockwise polygon; negatives from numerical
// slop are clipped to zero.
inline double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t j = 0, i = poly.size() - 1; j < poly.size(); i = j++) {
    twice += cross(poly[i], poly[j]);
  }
  return std::max(0.0, 0.5 * twice);
}

// Sutherland-Hodgman clip of a convex CCW subject polygon against a
// convex CCW clip polygon. Vertices within kGeomEps of a clip edge are
// treated as inside.
inline std::vector<Vec2> convex_intersection(std::span<const Vec2> subject,
                                             std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  std::vector<Vec2> in;
  for (std::size_t cj = 0, ci = clip.size() - 1; cj < clip.size(); ci = cj++) {
    if (out.empty()) break;
    const Vec2 edge = clip[cj] - clip[ci];
    in.swap(out);
    out.clear();
    for (std::size_t j = 0, i = in.size() - 1; j < in.size(); i = j++) {
      const double d_prev = cross(edge, in[i] - clip[ci]);
      const double d_cur = cross(edge, in[j] - clip[ci]);
      const bool in_prev = d_prev >= -kGeomEps;
      const bool in_cur = d_cur >= -kGeomEps;
      if (in_cur) {
        if (!in_prev) {
          const double t = d_prev / (d_prev - d_cur);
          out.push_back(in[i] + (in[j] - in[i]) * t);
        }
        out.push_back(in[j]);
      } else if (in_prev) {
        const double t = d_prev / (d_prev - d_cur);
        out.push_back(in[i] + (in[j] - in[i]) * t);
      }
    }
  }
  return out;
}

inline double convex_intersection_area(std::span<const Vec2> a,
                                       std::span<const Vec2> b) {
  if (polygon_area(a) <= 0.0 || polygon_area(b) <= 0.0) return 0.0;
  const std::vector<Vec2> inter = convex_intersection(a, b);
  return polygon_area(inter);
}

namespace detail {
// Clipping is not bitwise symmetric in its operands, so IoU evaluates its
// arguments in a canonical order; iou(a, b) and iou(b, a) then run the
// identical float sequence and agree exactly.
inline bool canonical_before(const Box3D& a, const Box3D& b) {
  if (a.cx != b.cx) return a.cx < b.cx;
  if (a.cy != b.cy) return a.cy < b.cy;
  if (a.cz != b.cz) return a.cz < b.cz;
  if (a.length != b.length) return a.length < b.length;
  if (a.width != b.width) return a.width < b.width;
  if (a.height != b.height) return a.height < b.height;
  return a.yaw <= b.yaw;
}
}  // namespace detail

// Rotated IoU of the two footprints. Areas on both sides of the ratio are
// computed with the same shoelace arithmetic so identical boxes give
// exactly 1.0.
inline double iou_bev(const Box3D& a, const Box3D& b) {
  if (!detail::canonical_before(a, b)) return iou_bev(b, a);
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  const double area_a = polygon_area(ca);
  const double area_b = polygon_area(cb);
  const double inter = convex_intersection_area(ca, cb);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline double vertical_overlap(const Box3D& a, const Box3D& b) {
  return std::max(0.0, std::min(a.top(), b.top()) - std::max(a.bottom(), b.bottom()));
}

// Volumetric IoU. Boxes rotate about the vertical axis only, so the
// intersection is a prism: BEV intersection area times vertical overlap.
inline double iou_3d(const Box3D& a, const Box3D& b) {
  if (!detail::canonical_before(a, b)) return iou_3d(b, a);
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  const double inter_area = convex_intersection_area(ca, cb);
  const double inter_vol = inter_area * vertical_overlap(a, b);
  const double vol_a = polygon_area(ca) * a.height;
  const double vol_b = polygon_area(cb) * b.height;
  const double uni = vol_a + vol_b - inter_vol;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter_vol / uni, 0.0, 1.0);
}

}  // namespace ssdet
