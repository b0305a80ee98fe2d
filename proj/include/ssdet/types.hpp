#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ssdet/geometry.hpp"

namespace ssdet {

enum class ObjectClass : int { Car = 0, Pedestrian = 1, Cyclist = 2 };

inline constexpr std::size_t kNumClasses = 3;

inline std::string_view class_name(ObjectClass c) {
  switch (c) {
    case ObjectClass::Car: return "Car";
    case ObjectClass::Pedestrian: return "Pedestrian";
    case ObjectClass::Cyclist: return "Cyclist";
  }
  return "Unknown";
}

inline ObjectClass class_from_name(std::string_view name) {
  if (name == "Car") return ObjectClass::Car;
  if (name == "Pedestrian") return ObjectClass::Pedestrian;
  if (name == "Cyclist") return ObjectClass::Cyclist;
  throw std::invalid_argument("unknown object class: " + std::string(name));
}

// Minimum IoU a prediction must reach against a same-class ground-truth
// box to count as correct.
struct IouThresholds {
  double car = 0.7;
  double pedestrian = 0.5;
  double cyclist = 0.5;

  double for_class(ObjectClass c) const {
    switch (c) {
      case ObjectClass::Car: return car;
      case ObjectClass::Pedestrian: return pedestrian;
      case ObjectClass::Cyclist: return cyclist;
    }
    return car;
  }
};

enum class IouKind { kBev, kVolumetric };

inline double box_iou(const Box3D& a, const Box3D& b, IouKind kind) {
  return kind == IouKind::kBev ? iou_bev(a, b) : iou_3d(a, b);
}

// A ground-truth object.
struct LabeledBox {
  Box3D box;
  ObjectClass class_id;
};

// A detector output: box plus the two score heads.
struct Proposal {
  Box3D box;
  ObjectClass class_id;
  double cls_score = 0.0;  // classification confidence in [0, 1]
  double iou_score = 0.0;  // estimated IoU in [0, 1]
};

inline void validate_score(double s, const char* what) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
  }
}

inline void validate(const Proposal& p) {
  validate_score(p.cls_score, "cls_score");
  validate_score(p.iou_score, "iou_score");
}

}  // namespace ssdet
