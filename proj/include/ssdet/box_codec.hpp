#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

#include "ssdet/geometry.hpp"

namespace ssdet {

// 7-dim box residual between an anchor and a target box:
// (dx, dy, dz, dl, dw, dh, dyaw). Planar offsets are normalized by the
// anchor's BEV diagonal, the vertical offset by the anchor height, sizes
// are log ratios, and yaw uses the sine of the difference.
inline std::array<double, 7> encode_box(const Box3D& anchor, const Box3D& target) {
  const double diag = std::hypot(anchor.length, anchor.width);
  return {
      (target.cx - anchor.cx) / diag,
      (target.cy - anchor.cy) / diag,
      (target.cz - anchor.cz) / anchor.height,
      std::log(target.length / anchor.length),
      std::log(target.width / anchor.width),
      std::log(target.height / anchor.height),
      std::sin(target.yaw - anchor.yaw),
  };
}

// Inverse of encode_box. Center offsets are clamped to +-10 units, size
// logs to +-3, and the yaw sine to [-1, 1] so wild network outputs still
// decode to a valid box.
inline Box3D decode_box(const Box3D& anchor, std::span<const double> residual) {
  const double diag = std::hypot(anchor.length, anchor.width);
  const auto clamp_off = [](double v) { return std::clamp(v, -10.0, 10.0); };
  const auto clamp_log = [](double v) { return std::clamp(v, -3.0, 3.0); };
  const double sin_dyaw = std::clamp(residual[6], -1.0, 1.0);
  return Box3D(anchor.cx + clamp_off(residual[0]) * diag,
               anchor.cy + clamp_off(residual[1]) * diag,
               anchor.cz + clamp_off(residual[2]) * anchor.height,
               anchor.length * std::exp(clamp_log(residual[3])),
               anchor.width * std::exp(clamp_log(residual[4])),
               anchor.height * std::exp(clamp_log(residual[5])),
               anchor.yaw + std::asin(sin_dyaw));
}

}  // namespace ssdet
