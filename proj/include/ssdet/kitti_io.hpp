#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ssdet/geometry.hpp"
#include "ssdet/types.hpp"

namespace ssdet {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One object-label record. Field order and units follow the KITTI object
// development kit: type, truncated, occluded, alpha, 2D bbox (left, top,
// right, bottom), dimensions (height, width, length), location (x, y, z,
// camera frame), rotation_y, and an optional detection score.
struct KittiLabel {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox{};
  double height = 0.0;
  double width = 0.0;
  double length = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double rotation_y = 0.0;
  std::optional<double> score;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

inline double parse_real(std::string_view field, std::size_t field_index,
                         std::size_t line_number) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line_number) + ", field " +
                     std::to_string(field_index) + ": not a finite number: '" +
                     std::string(field) + "'");
  }
  return value;
}

inline int parse_int(std::string_view field, std::size_t field_index,
                     std::size_t line_number) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError("line " + std::to_string(line_number) + ", field " +
                     std::to_string(field_index) + ": not an integer: '" +
                     std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

// Parses one label line; accepts the 15-field (ground truth) and 16-field
// (detection, trailing score) variants. Anything else is an error naming
// the offending field and line.
inline KittiLabel parse_label_line(std::string_view line, std::size_t line_number = 1) {
  const auto fields = detail::split_fields(line);
  if (fields.empty()) {
    throw ParseError("line " + std::to_string(line_number) + ": empty label line");
  }
  if (fields.size() != 15 && fields.size() != 16) {
    throw ParseError("line " + std::to_string(line_number) + ": expected 15 or 16 fields, got " +
                     std::to_string(fields.size()));
  }
  KittiLabel label;
  label.type = std::string(fields[0]);
  label.truncated = detail::parse_real(fields[1], 1, line_number);
  label.occluded = detail::parse_int(fields[2], 2, line_number);
  label.alpha = detail::parse_real(fields[3], 3, line_number);
  for (std::size_t i = 0; i < 4; ++i) {
    label.bbox[i] = detail::parse_real(fields[4 + i], 4 + i, line_number);
  }
  label.height = detail::parse_real(fields[8], 8, line_number);
  label.width = detail::parse_real(fields[9], 9, line_number);
  label.length = detail::parse_real(fields[10], 10, line_number);
  label.x = detail::parse_real(fields[11], 11, line_number);
  label.y = detail::parse_real(fields[12], 12, line_number);
  label.z = detail::parse_real(fields[13], 13, line_number);
  label.rotation_y = detail::parse_real(fields[14], 14, line_number);
  if (fields.size() == 16) {
    label.score = detail::parse_real(fields[15], 15, line_number);
  }
  return label;
}

// Fixed-point output, 2 decimals by default for every real field,
// matching common devkit output. parse(write(x)) round-trips bit-exactly
// at the emitted precision.
inline std::string write_label_line(const KittiLabel& label, int precision = 2) {
  char buf[512];
  const int n = std::snprintf(
      buf, sizeof(buf),
      "%s %.*f %d %.*f %.*f %.*f %.*f %.*f %.*f %.*f %.*f %.*f %.*f %.*f %.*f",
      label.type.c_str(), precision, label.truncated, label.occluded, precision,
      label.alpha, precision, label.bbox[0], precision, label.bbox[1], precision,
      label.bbox[2], precision, label.bbox[3], precision, label.height, precision,
      label.width, precision, label.length, precision, label.x, precision, label.y,
      precision, label.z, precision, label.rotation_y);
  if (n < 0 || static_cast<std::size_t>(n) >= sizeof(buf)) {
    throw std::length_error("label line exceeds the formatting buffer");
  }
  std::string out(buf, static_cast<std::size_t>(n));
  if (label.score) {
    std::snprintf(buf, sizeof(buf), " %.*f", precision, *label.score);
    out += buf;
  }
  return out;
}

// Parses a whole label file. Blank lines are ignored; malformed lines
// raise rather than being skipped.
inline std::vector<KittiLabel> parse_label_file(std::string_view text) {
  std::vector<KittiLabel> labels;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::string_view line =
        text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
    ++line_number;
    if (!detail::split_fields(line).empty()) {
      labels.push_back(parse_label_line(line, line_number));
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return labels;
}

inline std::string write_label_file(std::span<const KittiLabel> labels, int precision = 2) {
  std::string out;
  for (const KittiLabel& label : labels) {
    out += write_label_line(label, precision);
    out += '\n';
  }
  return out;
}

// Sample-id lists, one zero-padded id per line, order-preserving.
// Duplicate ids are rejected.
inline std::vector<std::string> parse_split_file(std::string_view text) {
  std::vector<std::string> ids;
  std::set<std::string, std::less<>> seen;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string_view line =
        text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
    ++line_number;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.remove_suffix(1);
    }
    if (!line.empty()) {
      if (seen.count(line) > 0) {
        throw ParseError("line " + std::to_string(line_number) + ": duplicate sample id '" +
                         std::string(line) + "'");
      }
      seen.emplace(line);
      ids.emplace_back(line);
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return ids;
}

inline std::string write_split_file(std::span<const std::string> ids) {
  std::string out;
  for (const std::string& id : ids) {
    out += id;
    out += '\n';
  }
  return out;
}

struct SplitPartition {
  std::vector<std::string> labeled;
  std::vector<std::string> unlabeled;
};

// Partitions a full sample list into labeled / unlabeled halves given the
// labeled-id list. Every labeled id must occur in the full list.
inline SplitPartition partition_split(std::span<const std::string> all_ids,
                                      std::span<const std::string> labeled_ids) {
  std::set<std::string, std::less<>> labeled(labeled_ids.begin(), labeled_ids.end());
  SplitPartition part;
  for (const std::string& id : all_ids) {
    if (labeled.count(id) > 0) {
      part.labeled.push_back(id);
      labeled.erase(id);
    } else {
      part.unlabeled.push_back(id);
    }
  }
  if (!labeled.empty()) {
    throw ParseError("labeled id '" + *labeled.begin() + "' not present in the sample list");
  }
  return part;
}

// Frame conversion. Camera frame: x right, y down, z forward; the label
// location is the bottom-face center. Library frame: x forward, y left,
// z up; boxes store their geometric center. A fixed axis convention is
// used; per-frame calibration matrices are not modeled.
//
//   x_fwd = z_cam,  y_left = -x_cam,  z_up = -y_cam
//   yaw   = -rotation_y - pi/2

inline Box3D box_from_camera_label(const KittiLabel& label) {
  return Box3D(label.z, -label.x, -label.y + 0.5 * label.height, label.length,
               label.width, label.height, -label.rotation_y - kPi / 2.0);
}

inline KittiLabel label_from_box(const Box3D& box, std::string_view type,
                                 std::optional<double> score = std::nullopt) {
  KittiLabel label;
  label.type = std::string(type);
  label.height = box.height;
  label.width = box.width;
  label.length = box.length;
  label.x = -box.cy;
  label.y = -(box.cz - 0.5 * box.height);
  label.z = box.cx;
  label.rotation_y = normalize_yaw(-box.yaw - kPi / 2.0);
  // Observation angle from geometry; image-plane fields stay zero.
  label.alpha = normalize_yaw(label.rotation_y - std::atan2(label.x, label.z));
  label.score = score;
  return label;
}

inline std::vector<KittiLabel> to_kitti_labels(std::span<const LabeledBox> boxes) {
  std::vector<KittiLabel> labels;
  labels.reserve(boxes.size());
  for (const LabeledBox& b : boxes) {
    labels.push_back(label_from_box(b.box, class_name(b.class_id)));
  }
  return labels;
}

inline std::vector<KittiLabel> to_kitti_labels(std::span<const Proposal> proposals) {
  std::vector<KittiLabel> labels;
  labels.reserve(proposals.size());
  for (const Proposal& p : proposals) {
    labels.push_back(label_from_box(p.box, class_name(p.class_id), p.cls_score));
  }
  return labels;
}

}  // namespace ssdet
