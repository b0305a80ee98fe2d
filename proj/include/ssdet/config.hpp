#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssdet/ema.hpp"
#include "ssdet/evaluation.hpp"
#include "ssdet/losses.hpp"
#include "ssdet/schedule.hpp"
#include "ssdet/simulator.hpp"

namespace ssdet {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  kStrategyAblation,
  kThresholdSweep,
  kScheduleAblation,
  kFpFnSweep,
  kToySslLoop,
  kExportScenes,
};

inline ExperimentKind experiment_kind_from_name(std::string_view name) {
  if (name == "strategy-ablation") return ExperimentKind::kStrategyAblation;
  if (name == "threshold-sweep") return ExperimentKind::kThresholdSweep;
  if (name == "schedule-ablation") return ExperimentKind::kScheduleAblation;
  if (name == "fpfn-sweep") return ExperimentKind::kFpFnSweep;
  if (name == "toy-ssl-loop") return ExperimentKind::kToySslLoop;
  if (name == "export-scenes") return ExperimentKind::kExportScenes;
  throw ConfigError("unknown experiment kind: " + std::string(name));
}

inline std::string_view experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kStrategyAblation: return "strategy-ablation";
    case ExperimentKind::kThresholdSweep: return "threshold-sweep";
    case ExperimentKind::kScheduleAblation: return "schedule-ablation";
    case ExperimentKind::kFpFnSweep: return "fpfn-sweep";
    case ExperimentKind::kToySslLoop: return "toy-ssl-loop";
    case ExperimentKind::kExportScenes: return "export-scenes";
  }
  return "unknown";
}

enum class SweepGeneration { kTable, kSparse, kDense };

// Knobs for the toy parametric detector and its training loops.
struct ToyLoopConfig {
  int labeled_scenes = 3;
  int unlabeled_scenes = 64;
  int test_scenes = 32;
  std::uint64_t pretrain_iterations = 400;
  std::uint64_t ssl_iterations = 1200;
  int feature_dim = 12;
  double feature_noise = 0.06;
  int candidates_per_object = 6;
  int clutter_candidates = 8;
  double candidate_center_frac = 0.25;  // center noise as a fraction of min(l, w)
  double candidate_dim_noise = 0.08;    // log-size sigma
  double candidate_yaw_noise = 0.2;     // radians
  double assign_iou = 0.5;
  double learning_rate = 0.02;
  double weight_decay = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t eval_every = 100;
  MomentumWarmup warmup{0.99, 0.999, 1000};
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  double smooth_l1_beta = 1.0;
};

// Everything an experiment run needs. Defaults are the desk-scale
// configuration the acceptance suite runs at; the full-scale preset
// records the large-scale training schedule without being exercised by
// the tests.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kStrategyAblation;
  std::string preset = "desk";

  SceneSpec scene;
  TeacherModel teacher;
  ThresholdSchedule schedule{0.6, 0.4, 500, 0.1};
  IouThresholds match_thresholds;
  IouKind match_kind = IouKind::kVolumetric;

  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::uint64_t iterations = 2000;
  std::uint64_t num_scenes = 200;
  std::uint64_t trajectory_stride = 100;

  double fixed_threshold = 0.4;
  // optional per-class absolute overrides of the shared filter threshold
  std::array<std::optional<double>, kNumClasses> class_threshold_override{};
  double nms_iou = 0.1;
  std::vector<double> fixed_thresholds{0.3, 0.4, 0.5, 0.6};
  SweepGeneration sweep_generation = SweepGeneration::kTable;
  std::vector<std::string> strategies{"naive", "sparse_fixed", "sparse_dynamic",
                                      "dense_fixed", "dense_dynamic"};
  // start:end pairs; step_len and decay come from `schedule`
  std::vector<std::pair<double, double>> ablation_ranges{
      {0.4, 0.6}, {0.6, 0.4}, {0.7, 0.3}, {0.8, 0.3}};

  std::vector<double> fpfn_thresholds{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::uint64_t fpfn_iteration = 1000;

  int labeled_per_batch = 1;
  int unlabeled_per_batch = 1;
  LossWeights loss_weights;

  ToyLoopConfig toy;

  std::uint64_t export_count = 8;
  std::uint64_t export_iteration = 1000;

  std::string output_dir = "out";

  // Recorded large-scale schedule (full-scale preset); not exercised by
  // the desk-scale tests.
  std::uint64_t full_scale_pretrain_epochs = 80;
  std::uint64_t full_scale_pretrain_traversals = 10;
  std::uint64_t full_scale_ssl_epochs = 100;
  std::uint64_t full_scale_ssl_traversals = 5;
  double full_scale_max_lr = 0.01;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  }
}

inline std::int64_t to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(value);
  while (std::getline(is, cur, ',')) {
    const std::string t = trim(cur);
    if (!t.empty()) parts.push_back(t);
  }
  return parts;
}

}  // namespace detail

// Applies one dotted-key setting; the same dispatcher backs the config
// file and command-line overrides. Unknown keys are errors so typos fail
// loudly instead of silently running defaults.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key,
                          const std::string& value) {
  using detail::to_double;
  using detail::to_int;

  const auto as_int_range = [&](IntRange& r, bool lo) {
    const std::int64_t v = to_int(key, value);
    (lo ? r.lo : r.hi) = static_cast<int>(v);
  };

  if (key == "experiment") { cfg.kind = experiment_kind_from_name(value); return; }
  if (key == "preset") {
    if (value != "desk" && value != "full-scale") {
      throw ConfigError("preset must be 'desk' or 'full-scale'");
    }
    cfg.preset = value;
    return;
  }
  if (key == "seeds") {
    cfg.seeds.clear();
    for (const std::string& s : detail::split_list(value)) {
      cfg.seeds.push_back(static_cast<std::uint64_t>(to_int(key, s)));
    }
    return;
  }
  if (key == "iterations") { cfg.iterations = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "num_scenes") { cfg.num_scenes = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "trajectory_stride") { cfg.trajectory_stride = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "output_dir") { cfg.output_dir = value; return; }
  if (key == "fixed_threshold") { cfg.fixed_threshold = to_double(key, value); return; }
  if (key == "threshold.car") { cfg.class_threshold_override[0] = to_double(key, value); return; }
  if (key == "threshold.pedestrian") { cfg.class_threshold_override[1] = to_double(key, value); return; }
  if (key == "threshold.cyclist") { cfg.class_threshold_override[2] = to_double(key, value); return; }
  if (key == "nms_iou") { cfg.nms_iou = to_double(key, value); return; }
  if (key == "lambda_u") { cfg.loss_weights.lambda_u = to_double(key, value); return; }
  if (key == "batch.labeled") { cfg.labeled_per_batch = static_cast<int>(to_int(key, value)); return; }
  if (key == "batch.unlabeled") { cfg.unlabeled_per_batch = static_cast<int>(to_int(key, value)); return; }
  if (key == "fixed_thresholds") {
    cfg.fixed_thresholds.clear();
    for (const std::string& s : detail::split_list(value)) {
      cfg.fixed_thresholds.push_back(to_double(key, s));
    }
    return;
  }
  if (key == "strategies") { cfg.strategies = detail::split_list(value); return; }
  if (key == "ablation_ranges") {
    // e.g. "0.4:0.6,0.6:0.4"
    cfg.ablation_ranges.clear();
    for (const std::string& pair : detail::split_list(value)) {
      const std::size_t colon = pair.find(':');
      if (colon == std::string::npos) {
        throw ConfigError("ablation_ranges entries must look like start:end");
      }
      cfg.ablation_ranges.emplace_back(to_double(key, pair.substr(0, colon)),
                                       to_double(key, pair.substr(colon + 1)));
    }
    return;
  }
  if (key == "sweep.generation") {
    if (value == "table") cfg.sweep_generation = SweepGeneration::kTable;
    else if (value == "sparse") cfg.sweep_generation = SweepGeneration::kSparse;
    else if (value == "dense") cfg.sweep_generation = SweepGeneration::kDense;
    else throw ConfigError("sweep.generation must be table, sparse, or dense");
    return;
  }
  if (key == "fpfn.thresholds") {
    cfg.fpfn_thresholds.clear();
    for (const std::string& s : detail::split_list(value)) {
      cfg.fpfn_thresholds.push_back(to_double(key, s));
    }
    return;
  }
  if (key == "fpfn.iteration") { cfg.fpfn_iteration = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "export.count") { cfg.export_count = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "export.iteration") { cfg.export_iteration = static_cast<std::uint64_t>(to_int(key, value)); return; }

  if (key == "scene.car_min") { as_int_range(cfg.scene.counts[0], true); return; }
  if (key == "scene.car_max") { as_int_range(cfg.scene.counts[0], false); return; }
  if (key == "scene.ped_min") { as_int_range(cfg.scene.counts[1], true); return; }
  if (key == "scene.ped_max") { as_int_range(cfg.scene.counts[1], false); return; }
  if (key == "scene.cyc_min") { as_int_range(cfg.scene.counts[2], true); return; }
  if (key == "scene.cyc_max") { as_int_range(cfg.scene.counts[2], false); return; }
  if (key == "scene.x_min") { cfg.scene.extent.x_min = to_double(key, value); return; }
  if (key == "scene.x_max") { cfg.scene.extent.x_max = to_double(key, value); return; }
  if (key == "scene.y_min") { cfg.scene.extent.y_min = to_double(key, value); return; }
  if (key == "scene.y_max") { cfg.scene.extent.y_max = to_double(key, value); return; }
  if (key == "scene.dim_jitter") { cfg.scene.dim_jitter = to_double(key, value); return; }
  if (key == "scene.ground_z") { cfg.scene.ground_z = to_double(key, value); return; }
  if (key == "scene.max_gt_bev_iou") { cfg.scene.max_gt_bev_iou = to_double(key, value); return; }

  if (key == "teacher.sigma0") { cfg.teacher.quality.sigma0 = to_double(key, value); return; }
  if (key == "teacher.sigma_inf") { cfg.teacher.quality.sigma_inf = to_double(key, value); return; }
  if (key == "teacher.t_max") { cfg.teacher.quality.t_max = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "teacher.rho_cls") { cfg.teacher.rho_cls = to_double(key, value); return; }
  if (key == "teacher.rho_iou") { cfg.teacher.rho_iou = to_double(key, value); return; }
  if (key == "teacher.dup_min") { as_int_range(cfg.teacher.duplicates_per_gt, true); return; }
  if (key == "teacher.dup_max") { as_int_range(cfg.teacher.duplicates_per_gt, false); return; }
  if (key == "teacher.clutter_min") { as_int_range(cfg.teacher.clutter_per_scene, true); return; }
  if (key == "teacher.clutter_max") { as_int_range(cfg.teacher.clutter_per_scene, false); return; }
  if (key == "teacher.dim_noise_scale") { cfg.teacher.dim_noise_scale = to_double(key, value); return; }
  if (key == "teacher.yaw_noise_scale") { cfg.teacher.yaw_noise_scale = to_double(key, value); return; }

  if (key == "schedule.sigma_start") { cfg.schedule.sigma_start = to_double(key, value); return; }
  if (key == "schedule.sigma_end") { cfg.schedule.sigma_end = to_double(key, value); return; }
  if (key == "schedule.step_len") { cfg.schedule.step_len = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "schedule.decay") { cfg.schedule.decay = to_double(key, value); return; }

  if (key == "match.car") { cfg.match_thresholds.car = to_double(key, value); return; }
  if (key == "match.pedestrian") { cfg.match_thresholds.pedestrian = to_double(key, value); return; }
  if (key == "match.cyclist") { cfg.match_thresholds.cyclist = to_double(key, value); return; }
  if (key == "match.kind") {
    if (value == "3d") cfg.match_kind = IouKind::kVolumetric;
    else if (value == "bev") cfg.match_kind = IouKind::kBev;
    else throw ConfigError("match.kind must be 3d or bev");
    return;
  }

  if (key == "toy.labeled_scenes") { cfg.toy.labeled_scenes = static_cast<int>(to_int(key, value)); return; }
  if (key == "toy.unlabeled_scenes") { cfg.toy.unlabeled_scenes = static_cast<int>(to_int(key, value)); return; }
  if (key == "toy.test_scenes") { cfg.toy.test_scenes = static_cast<int>(to_int(key, value)); return; }
  if (key == "toy.pretrain_iterations") { cfg.toy.pretrain_iterations = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "toy.ssl_iterations") { cfg.toy.ssl_iterations = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "toy.feature_dim") { cfg.toy.feature_dim = static_cast<int>(to_int(key, value)); return; }
  if (key == "toy.feature_noise") { cfg.toy.feature_noise = to_double(key, value); return; }
  if (key == "toy.candidates_per_object") { cfg.toy.candidates_per_object = static_cast<int>(to_int(key, value)); return; }
  if (key == "toy.clutter_candidates") { cfg.toy.clutter_candidates = static_cast<int>(to_int(key, value)); return; }
  if (key == "toy.candidate_center_frac") { cfg.toy.candidate_center_frac = to_double(key, value); return; }
  if (key == "toy.candidate_dim_noise") { cfg.toy.candidate_dim_noise = to_double(key, value); return; }
  if (key == "toy.candidate_yaw_noise") { cfg.toy.candidate_yaw_noise = to_double(key, value); return; }
  if (key == "toy.assign_iou") { cfg.toy.assign_iou = to_double(key, value); return; }
  if (key == "toy.learning_rate") { cfg.toy.learning_rate = to_double(key, value); return; }
  if (key == "toy.weight_decay") { cfg.toy.weight_decay = to_double(key, value); return; }
  if (key == "toy.eval_every") { cfg.toy.eval_every = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "toy.warmup.m_start") { cfg.toy.warmup.m_start = to_double(key, value); return; }
  if (key == "toy.warmup.m_end") { cfg.toy.warmup.m_end = to_double(key, value); return; }
  if (key == "toy.warmup.iters") { cfg.toy.warmup.warmup_iters = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "toy.focal_gamma") { cfg.toy.focal_gamma = to_double(key, value); return; }
  if (key == "toy.focal_alpha") { cfg.toy.focal_alpha = to_double(key, value); return; }
  if (key == "toy.smooth_l1_beta") { cfg.toy.smooth_l1_beta = to_double(key, value); return; }

  if (key == "full_scale.pretrain_epochs") { cfg.full_scale_pretrain_epochs = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "full_scale.pretrain_traversals") { cfg.full_scale_pretrain_traversals = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "full_scale.ssl_epochs") { cfg.full_scale_ssl_epochs = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "full_scale.ssl_traversals") { cfg.full_scale_ssl_traversals = static_cast<std::uint64_t>(to_int(key, value)); return; }
  if (key == "full_scale.max_lr") { cfg.full_scale_max_lr = to_double(key, value); return; }

  throw ConfigError("unknown configuration key: '" + key + "'");
}

// Applies an override of the form dotted.key=value.
inline void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must look like key=value, got '" + assignment + "'");
  }
  apply_setting(cfg, detail::trim(assignment.substr(0, eq)),
                detail::trim(assignment.substr(eq + 1)));
}

// Parses the key = value configuration format: one setting per line,
// '#' starts a comment, blank lines ignored.
inline ExperimentConfig parse_config(std::string_view text,
                                     ExperimentConfig base = {}) {
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string line(text.substr(
        start, end == std::string_view::npos ? text.size() - start : end - start));
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string trimmed = detail::trim(line);
    if (!trimmed.empty()) {
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(line_number) +
                          ": expected key = value");
      }
      try {
        apply_setting(base, detail::trim(trimmed.substr(0, eq)),
                      detail::trim(trimmed.substr(eq + 1)));
      } catch (const ConfigError& e) {
        throw ConfigError("config line " + std::to_string(line_number) + ": " + e.what());
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return base;
}

// The full-scale preset translates the recorded epoch/traversal schedule
// into iteration counts (one iteration consumes one labeled and, in the
// SSL stage, one unlabeled scene).
inline void apply_preset(ExperimentConfig& cfg) {
  if (cfg.preset != "full-scale") return;
  const auto labeled = static_cast<std::uint64_t>(cfg.toy.labeled_scenes);
  const auto unlabeled = static_cast<std::uint64_t>(cfg.toy.unlabeled_scenes);
  cfg.toy.pretrain_iterations =
      cfg.full_scale_pretrain_epochs * cfg.full_scale_pretrain_traversals * labeled;
  cfg.toy.ssl_iterations =
      cfg.full_scale_ssl_epochs * cfg.full_scale_ssl_traversals * unlabeled;
  cfg.toy.learning_rate = cfg.full_scale_max_lr;
}

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (cfg.num_scenes < 1) throw ConfigError("num_scenes must be >= 1");
  if (cfg.trajectory_stride < 1) throw ConfigError("trajectory_stride must be >= 1");
  if (!(cfg.nms_iou >= 0.0 && cfg.nms_iou <= 1.0)) {
    throw ConfigError("nms_iou must lie in [0, 1]");
  }
  if (cfg.labeled_per_batch < 1 || cfg.unlabeled_per_batch < 1) {
    throw ConfigError("batch sizes must be >= 1");
  }
  if (cfg.toy.labeled_scenes < 1 || cfg.toy.unlabeled_scenes < 1 ||
      cfg.toy.test_scenes < 1) {
    throw ConfigError("toy scene counts must be >= 1");
  }
  if (cfg.toy.feature_dim < 8) throw ConfigError("toy.feature_dim must be >= 8");
  if (cfg.toy.eval_every < 1) throw ConfigError("toy.eval_every must be >= 1");
  validate(cfg.scene);
  validate(cfg.teacher);
  validate(cfg.schedule);
  validate(cfg.toy.warmup);
  validate(cfg.loss_weights);
  for (std::size_t i = 1; i < cfg.fpfn_thresholds.size(); ++i) {
    if (cfg.fpfn_thresholds[i] < cfg.fpfn_thresholds[i - 1]) {
      throw ConfigError("fpfn.thresholds must be ascending");
    }
  }
  for (const auto& [start, end] : cfg.ablation_ranges) {
    ThresholdSchedule s{start, end, cfg.schedule.step_len, cfg.schedule.decay};
    validate(s);
  }
}

}  // namespace ssdet
