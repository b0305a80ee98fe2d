#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssdet/config.hpp"
#include "ssdet/csv.hpp"
#include "ssdet/evaluation.hpp"
#include "ssdet/kitti_io.hpp"
#include "ssdet/pseudo_labels.hpp"
#include "ssdet/simulator.hpp"
#include "ssdet/toy_detector.hpp"

namespace ssdet {

// One pseudo-labeling policy under test.
struct LabelStrategy {
  std::string name;
  bool dense = false;
  bool dynamic = false;
  double fixed_threshold = 0.4;
  ThresholdSchedule schedule;
};

// Cumulative label-quality counts for one (arm, seed) run, plus the
// derived metrics. final_f1 is the harmonic mean of label correctness and
// GT coverage micro-averaged over the whole run; see label_quality for why
// dense duplicates must not be scored by one-to-one precision.
struct ArmSeedRow {
  std::string arm;
  std::uint64_t seed = 0;
  double labels = 0;
  double correct_labels = 0;
  double covered_gt = 0;
  double total_gt = 0;
  double matched = 0;
  double correctness = 0;
  double coverage = 0;
  double precision = 0;
  double recall = 0;
  double final_f1 = 0;
};

struct TrajectoryRow {
  std::string arm;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  double threshold = 0;
  double precision = 0;  // one-to-one
  double recall = 0;     // one-to-one
  double correctness = 0;
  double coverage = 0;
  double f1 = 0;
};

struct FpFnReportRow {
  std::uint64_t seed = 0;
  bool aggregate = false;
  double threshold = 0;
  double tp = 0;
  double fp = 0;
  double fn = 0;
};

struct ToyResultRow {
  std::string arm;
  std::uint64_t seed = 0;
  double final_f1 = 0;
};

struct ToyTrajectoryRow {
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  double student_f1 = 0;
  double teacher_f1 = 0;
  double total_loss = 0;
};

struct RunReport {
  ExperimentKind kind = ExperimentKind::kStrategyAblation;
  std::vector<ArmSeedRow> rows;        // per (arm, seed)
  std::vector<ArmSeedRow> aggregates;  // per arm, mean over seeds
  std::vector<TrajectoryRow> trajectory;
  std::vector<FpFnReportRow> fpfn;
  std::vector<ToyResultRow> toy_rows;
  std::vector<ToyResultRow> toy_aggregates;
  std::vector<ToyTrajectoryRow> toy_trajectory;
};

namespace detail {

inline double harmonic(double a, double b) {
  return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0;
}

// Proposals for iteration t of a run. Keyed by (seed, scene, t) only, so
// every arm sees the identical proposal stream: arm comparisons are
// paired, never confounded by different noise draws.
inline std::vector<Proposal> proposals_at(const ExperimentConfig& cfg,
                                          const std::vector<LabeledBox>& scene,
                                          std::uint64_t seed, std::uint64_t scene_index,
                                          std::uint64_t t) {
  Rng rng = derived_rng(seed, {streams::kProposal, scene_index, t});
  return gen_proposals(scene, cfg.teacher, cfg.scene, t, rng);
}

// One shared threshold filters all classes by default; classes with a
// configured override are filtered at their own cutoff instead. Proposals
// are partitioned by class, generated per class, and merged back in input
// order.
inline PseudoLabelSet generate_with_overrides(const ExperimentConfig& cfg,
                                              std::span<const Proposal> props,
                                              bool dense, double shared_tau,
                                              std::uint64_t t) {
  bool any_override = false;
  for (const auto& o : cfg.class_threshold_override) any_override = any_override || o;
  if (!any_override) {
    return dense ? generate_dense(props, shared_tau, t)
                 : generate_sparse(props, shared_tau, cfg.nms_iou, t);
  }
  PseudoLabelSet merged;
  merged.source_iteration = t;
  merged.applied_threshold = shared_tau;
  std::vector<std::pair<std::size_t, Proposal>> picked;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double tau = cfg.class_threshold_override[c].value_or(shared_tau);
    merged.applied_threshold = std::min(merged.applied_threshold, tau);
    std::vector<Proposal> of_class;
    std::vector<std::size_t> back;
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props[i].class_id == static_cast<ObjectClass>(c)) {
        of_class.push_back(props[i]);
        back.push_back(i);
      }
    }
    const PseudoLabelSet part = dense ? generate_dense(of_class, tau, t)
                                      : generate_sparse(of_class, tau, cfg.nms_iou, t);
    for (std::size_t k = 0; k < part.labels.size(); ++k) {
      picked.emplace_back(back[part.source_indices[k]], part.labels[k]);
    }
  }
  std::sort(picked.begin(), picked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [idx, label] : picked) {
    merged.source_indices.push_back(idx);
    merged.labels.push_back(label);
  }
  return merged;
}

inline ArmSeedRow run_label_arm(const ExperimentConfig& cfg, const LabelStrategy& arm,
                                std::uint64_t seed,
                                const std::vector<std::vector<LabeledBox>>& scenes,
                                std::vector<TrajectoryRow>* trajectory) {
  ArmSeedRow row;
  row.arm = arm.name;
  row.seed = seed;
  for (std::uint64_t t = 0; t < cfg.iterations; ++t) {
    const std::uint64_t scene_index = t % scenes.size();
    const auto& scene = scenes[scene_index];
    const auto props = proposals_at(cfg, scene, seed, scene_index, t);
    const double tau = arm.dynamic ? value_at(arm.schedule, t) : arm.fixed_threshold;
    const PseudoLabelSet labels = generate_with_overrides(cfg, props, arm.dense, tau, t);
    const LabelQuality q = label_quality(labels, scene, cfg.match_thresholds, cfg.match_kind);
    row.labels += static_cast<double>(q.n_labels);
    row.correct_labels += static_cast<double>(q.correct_labels);
    row.covered_gt += static_cast<double>(q.covered_gt);
    row.total_gt += static_cast<double>(q.n_gt);
    row.matched += static_cast<double>(q.matched);
    if (trajectory && t % cfg.trajectory_stride == 0) {
      trajectory->push_back({arm.name, seed, t, tau, q.precision, q.recall,
                             q.label_correctness, q.gt_coverage,
                             harmonic(q.label_correctness, q.gt_coverage)});
    }
  }
  row.correctness = row.labels > 0 ? row.correct_labels / row.labels : 0.0;
  row.coverage = row.total_gt > 0 ? row.covered_gt / row.total_gt : 0.0;
  row.precision = row.labels > 0 ? row.matched / row.labels : 0.0;
  row.recall = row.total_gt > 0 ? row.matched / row.total_gt : 0.0;
  row.final_f1 = harmonic(row.correctness, row.coverage);
  return row;
}

inline std::vector<std::vector<LabeledBox>> scenes_for_seed(const ExperimentConfig& cfg,
                                                            std::uint64_t seed) {
  SceneSpec spec = cfg.scene;
  spec.seed = seed;
  std::vector<std::vector<LabeledBox>> scenes;
  scenes.reserve(cfg.num_scenes);
  for (std::uint64_t i = 0; i < cfg.num_scenes; ++i) scenes.push_back(gen_scene(spec, i));
  return scenes;
}

inline void add_aggregates(RunReport& report, const std::vector<std::string>& arm_order) {
  for (const std::string& arm : arm_order) {
    ArmSeedRow mean;
    mean.arm = arm;
    double n = 0;
    for (const ArmSeedRow& row : report.rows) {
      if (row.arm != arm) continue;
      mean.labels += row.labels;
      mean.correct_labels += row.correct_labels;
      mean.covered_gt += row.covered_gt;
      mean.total_gt += row.total_gt;
      mean.matched += row.matched;
      mean.correctness += row.correctness;
      mean.coverage += row.coverage;
      mean.precision += row.precision;
      mean.recall += row.recall;
      mean.final_f1 += row.final_f1;
      n += 1.0;
    }
    if (n == 0) continue;
    mean.labels /= n;
    mean.correct_labels /= n;
    mean.covered_gt /= n;
    mean.total_gt /= n;
    mean.matched /= n;
    mean.correctness /= n;
    mean.coverage /= n;
    mean.precision /= n;
    mean.recall /= n;
    mean.final_f1 /= n;
    report.aggregates.push_back(mean);
  }
}

inline RunReport run_label_experiment(const ExperimentConfig& cfg,
                                      const std::vector<LabelStrategy>& arms,
                                      ExperimentKind kind) {
  validate(cfg);
  RunReport report;
  report.kind = kind;
  std::vector<std::string> arm_order;
  for (const LabelStrategy& arm : arms) arm_order.push_back(arm.name);
  for (std::uint64_t seed : cfg.seeds) {
    const auto scenes = scenes_for_seed(cfg, seed);
    for (const LabelStrategy& arm : arms) {
      report.rows.push_back(run_label_arm(cfg, arm, seed, scenes, &report.trajectory));
    }
  }
  add_aggregates(report, arm_order);
  return report;
}

}  // namespace detail

// Table-II-style ablation: the named strategies run over identical scenes
// and proposal streams per seed.
inline std::vector<LabelStrategy> strategy_arms(const ExperimentConfig& cfg) {
  std::vector<LabelStrategy> arms;
  for (const std::string& name : cfg.strategies) {
    LabelStrategy arm;
    arm.name = name;
    arm.schedule = cfg.schedule;
    arm.fixed_threshold = cfg.fixed_threshold;
    if (name == "naive") {
      arm.dense = false;
      arm.dynamic = false;
      arm.fixed_threshold = 0.0;  // raw NMS output passed straight through
    } else if (name == "sparse_fixed") {
      arm.dense = false;
      arm.dynamic = false;
    } else if (name == "sparse_dynamic") {
      arm.dense = false;
      arm.dynamic = true;
    } else if (name == "dense_fixed") {
      arm.dense = true;
      arm.dynamic = false;
    } else if (name == "dense_dynamic") {
      arm.dense = true;
      arm.dynamic = true;
    } else {
      throw ConfigError("unknown strategy arm: '" + name + "'");
    }
    arms.push_back(arm);
  }
  return arms;
}

inline RunReport run_strategy_ablation(const ExperimentConfig& cfg) {
  return detail::run_label_experiment(cfg, strategy_arms(cfg),
                                      ExperimentKind::kStrategyAblation);
}

// Fixed thresholds against the dynamic schedule. Generation per arm
// follows the ablation-table convention by default: fixed rows use the
// sparse baseline, the dynamic row uses dense generation.
inline RunReport run_threshold_sweep(const ExperimentConfig& cfg) {
  std::vector<LabelStrategy> arms;
  for (double tau : cfg.fixed_thresholds) {
    LabelStrategy arm;
    arm.name = "fixed_" + format_double(tau, 2);
    arm.dense = cfg.sweep_generation == SweepGeneration::kDense;
    arm.dynamic = false;
    arm.fixed_threshold = tau;
    arm.schedule = cfg.schedule;
    arms.push_back(arm);
  }
  LabelStrategy dynamic;
  dynamic.name = "dynamic";
  dynamic.dense = cfg.sweep_generation != SweepGeneration::kSparse;
  dynamic.dynamic = true;
  dynamic.schedule = cfg.schedule;
  arms.push_back(dynamic);
  return detail::run_label_experiment(cfg, arms, ExperimentKind::kThresholdSweep);
}

// High-to-low versus low-to-high schedule directions, dense generation.
inline RunReport run_schedule_ablation(const ExperimentConfig& cfg) {
  std::vector<LabelStrategy> arms;
  for (const auto& [start, end] : cfg.ablation_ranges) {
    LabelStrategy arm;
    arm.name = "sched_" + format_double(start, 2) + "_to_" + format_double(end, 2);
    arm.dense = true;
    arm.dynamic = true;
    arm.schedule = ThresholdSchedule{start, end, cfg.schedule.step_len, cfg.schedule.decay};
    arms.push_back(arm);
  }
  return detail::run_label_experiment(cfg, arms, ExperimentKind::kScheduleAblation);
}

// FP/FN versus confidence threshold over the scene set, teacher frozen at
// cfg.fpfn_iteration.
inline RunReport run_fpfn_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  RunReport report;
  report.kind = ExperimentKind::kFpFnSweep;
  EvalConfig eval_cfg;
  eval_cfg.iou_thresholds = cfg.match_thresholds;
  eval_cfg.iou_kind = cfg.match_kind;

  std::vector<FpFnReportRow> totals(cfg.fpfn_thresholds.size());
  for (std::size_t k = 0; k < cfg.fpfn_thresholds.size(); ++k) {
    totals[k].aggregate = true;
    totals[k].threshold = cfg.fpfn_thresholds[k];
  }
  for (std::uint64_t seed : cfg.seeds) {
    const auto scenes = detail::scenes_for_seed(cfg, seed);
    std::vector<FpFnReportRow> rows(cfg.fpfn_thresholds.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      rows[k].seed = seed;
      rows[k].threshold = cfg.fpfn_thresholds[k];
    }
    for (std::uint64_t i = 0; i < scenes.size(); ++i) {
      const auto props =
          detail::proposals_at(cfg, scenes[i], seed, i, cfg.fpfn_iteration);
      const auto swept = fp_fn_sweep(props, scenes[i], cfg.fpfn_thresholds, eval_cfg);
      for (std::size_t k = 0; k < swept.size(); ++k) {
        rows[k].tp += static_cast<double>(swept[k].counts.tp);
        rows[k].fp += static_cast<double>(swept[k].counts.fp);
        rows[k].fn += static_cast<double>(swept[k].counts.fn);
      }
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      totals[k].tp += rows[k].tp;
      totals[k].fp += rows[k].fp;
      totals[k].fn += rows[k].fn;
      report.fpfn.push_back(rows[k]);
    }
  }
  for (const auto& row : totals) report.fpfn.push_back(row);
  return report;
}

// The full teacher-student loop on the toy detector. Both arms start from
// the same pretrained weights; the baseline continues on labeled data
// only, the SSL arm adds the dense/dynamic pseudo-label objective with an
// EMA teacher.
inline RunReport run_toy_ssl_loop(const ExperimentConfig& cfg) {
  validate(cfg);
  RunReport report;
  report.kind = ExperimentKind::kToySslLoop;
  const ToyLoopConfig& toy = cfg.toy;
  const auto all_finite = [](const ParamVector& v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };

  for (std::uint64_t seed : cfg.seeds) {
    const ToyWorld world = build_toy_world(cfg.scene, toy, seed);

    const auto make_optimizer = [&]() {
      AdamW opt;
      opt.lr = toy.learning_rate;
      opt.beta1 = toy.beta1;
      opt.beta2 = toy.beta2;
      opt.eps = toy.adam_eps;
      opt.weight_decay = toy.weight_decay;
      return opt;
    };

    // pre-training on labeled scenes only
    ToyDetector pretrained = ToyDetector::init(toy.feature_dim, seed);
    {
      AdamW opt = make_optimizer();
      for (std::uint64_t t = 0; t < toy.pretrain_iterations; ++t) {
        if (!all_finite(pretrained.params)) throw DivergenceError(t, "pretrain");
        ParamVector grad(pretrained.params.size(), 0.0);
        LossBreakdown total{};
        for (int b = 0; b < cfg.labeled_per_batch; ++b) {
          Rng pick = derived_rng(seed, {streams::kBatch, 0, t, static_cast<std::uint64_t>(b)});
          const auto& scene =
              world.labeled[static_cast<std::size_t>(pick.uniform_int(0, toy.labeled_scenes - 1))];
          const LossBreakdown l = toy_labeled_loss(pretrained, world, scene, toy, &grad);
          total.total += l.total;
        }
        if (!std::isfinite(total.total)) throw DivergenceError(t, "pretrain");
        opt.step(pretrained.params, grad);
      }
    }

    const auto run_stage = [&](bool ssl, std::vector<ToyTrajectoryRow>* traj) {
      ToyDetector student = pretrained;
      ToyDetector teacher = pretrained;
      AdamW opt = make_optimizer();
      for (std::uint64_t t = 0; t < toy.ssl_iterations; ++t) {
        if (!all_finite(student.params)) throw DivergenceError(t, ssl ? "ssl" : "baseline");
        ParamVector grad(student.params.size(), 0.0);
        double labeled_total = 0.0;
        for (int b = 0; b < cfg.labeled_per_batch; ++b) {
          Rng pick = derived_rng(seed, {streams::kBatch, 1, t, static_cast<std::uint64_t>(b)});
          const auto& scene =
              world.labeled[static_cast<std::size_t>(pick.uniform_int(0, toy.labeled_scenes - 1))];
          labeled_total += toy_labeled_loss(student, world, scene, toy, &grad).total;
        }
        double unlabeled_total = 0.0;
        if (ssl) {
          ParamVector ugrad(student.params.size(), 0.0);
          for (int b = 0; b < cfg.unlabeled_per_batch; ++b) {
            Rng pick = derived_rng(seed, {streams::kBatch, 2, t, static_cast<std::uint64_t>(b)});
            const auto& scene = world.unlabeled[static_cast<std::size_t>(
                pick.uniform_int(0, toy.unlabeled_scenes - 1))];
            Rng aug = derived_rng(seed, {streams::kAugment, t, static_cast<std::uint64_t>(b)});
            const GeoTransform weak = sample_weak(aug);
            const GeoTransform strong = sample_strong(aug);
            unlabeled_total += toy_unlabeled_loss(student, teacher, world, scene, toy,
                                                  cfg.schedule, t, weak, strong, &ugrad)
                                   .total;
          }
          const double lambda = cfg.loss_weights.lambda_u;
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += lambda * ugrad[i];
          unlabeled_total *= lambda;
        }
        const double total = labeled_total + unlabeled_total;
        if (!std::isfinite(total)) throw DivergenceError(t, ssl ? "ssl" : "baseline");
        opt.step(student.params, grad);
        if (ssl) ema_update(teacher.params, student.params, momentum_at(toy.warmup, t));

        if (traj && (t % toy.eval_every == 0 || t + 1 == toy.ssl_iterations)) {
          traj->push_back({seed, t,
                           toy_eval_f1(student, world, world.test, cfg.match_thresholds,
                                       cfg.match_kind, cfg.nms_iou),
                           ssl ? toy_eval_f1(teacher, world, world.test, cfg.match_thresholds,
                                             cfg.match_kind, cfg.nms_iou)
                               : 0.0,
                           total});
        }
      }
      return student;
    };

    const ToyDetector baseline = run_stage(false, nullptr);
    std::vector<ToyTrajectoryRow> traj;
    const ToyDetector ssl_student = run_stage(true, &traj);

    report.toy_rows.push_back(
        {"labeled_only", seed,
         toy_eval_f1(baseline, world, world.test, cfg.match_thresholds, cfg.match_kind,
                     cfg.nms_iou)});
    report.toy_rows.push_back(
        {"ssl", seed,
         toy_eval_f1(ssl_student, world, world.test, cfg.match_thresholds, cfg.match_kind,
                     cfg.nms_iou)});
    for (const auto& row : traj) report.toy_trajectory.push_back(row);
  }

  for (const std::string arm : {"labeled_only", "ssl"}) {
    ToyResultRow mean;
    mean.arm = arm;
    double n = 0;
    for (const ToyResultRow& row : report.toy_rows) {
      if (row.arm != arm) continue;
      mean.final_f1 += row.final_f1;
      n += 1.0;
    }
    if (n > 0) {
      mean.final_f1 /= n;
      report.toy_aggregates.push_back(mean);
    }
  }
  return report;
}

// Writes scene ground truth and teacher proposals as label files plus a
// split list, for inspection with standard dataset tooling.
inline void run_export_scenes(const ExperimentConfig& cfg) {
  validate(cfg);
  namespace fs = std::filesystem;
  const fs::path root(cfg.output_dir);
  fs::create_directories(root / "label_2");
  fs::create_directories(root / "proposals");
  SceneSpec spec = cfg.scene;
  spec.seed = cfg.seeds.front();
  std::vector<std::string> ids;
  for (std::uint64_t i = 0; i < cfg.export_count; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "%06llu", static_cast<unsigned long long>(i));
    ids.emplace_back(id);
    const auto scene = gen_scene(spec, i);
    Rng rng = derived_rng(spec.seed, {streams::kProposal, i, cfg.export_iteration});
    const auto props = gen_proposals(scene, cfg.teacher, spec, cfg.export_iteration, rng);
    std::ofstream(root / "label_2" / (ids.back() + ".txt"))
        << write_label_file(to_kitti_labels(scene));
    std::ofstream(root / "proposals" / (ids.back() + ".txt"))
        << write_label_file(to_kitti_labels(props));
  }
  std::ofstream(root / "split.txt") << write_split_file(ids);
}

// ---------------------------------------------------------------------------
// Report serialization: one results CSV per experiment, a trajectory CSV
// where applicable, and a plain-text summary. Column order is fixed.

inline std::string results_csv(const RunReport& report) {
  std::ostringstream os;
  if (report.kind == ExperimentKind::kFpFnSweep) {
    os << "seed,threshold,tp,fp,fn\n";
    for (const FpFnReportRow& row : report.fpfn) {
      os << (row.aggregate ? std::string("total") : std::to_string(row.seed)) << ','
         << format_double(row.threshold, 3) << ',' << format_double(row.tp, 1) << ','
         << format_double(row.fp, 1) << ',' << format_double(row.fn, 1) << '\n';
    }
    return os.str();
  }
  if (report.kind == ExperimentKind::kToySslLoop) {
    os << "arm,seed,final_f1\n";
    for (const ToyResultRow& row : report.toy_rows) {
      os << row.arm << ',' << row.seed << ',' << format_double(row.final_f1) << '\n';
    }
    for (const ToyResultRow& row : report.toy_aggregates) {
      os << row.arm << ",mean," << format_double(row.final_f1) << '\n';
    }
    return os.str();
  }
  os << "arm,seed,labels,correct_labels,covered_gt,total_gt,matched,"
        "correctness,coverage,precision,recall,final_f1\n";
  const auto emit = [&](const ArmSeedRow& row, bool aggregate) {
    os << row.arm << ',' << (aggregate ? std::string("mean") : std::to_string(row.seed))
       << ',' << format_double(row.labels, 2) << ',' << format_double(row.correct_labels, 2)
       << ',' << format_double(row.covered_gt, 2) << ',' << format_double(row.total_gt, 2)
       << ',' << format_double(row.matched, 2) << ',' << format_double(row.correctness)
       << ',' << format_double(row.coverage) << ',' << format_double(row.precision) << ','
       << format_double(row.recall) << ',' << format_double(row.final_f1) << '\n';
  };
  for (const ArmSeedRow& row : report.rows) emit(row, false);
  for (const ArmSeedRow& row : report.aggregates) emit(row, true);
  return os.str();
}

inline std::string trajectory_csv(const RunReport& report) {
  std::ostringstream os;
  if (report.kind == ExperimentKind::kToySslLoop) {
    os << "seed,iteration,student_f1,teacher_f1,total_loss\n";
    for (const ToyTrajectoryRow& row : report.toy_trajectory) {
      os << row.seed << ',' << row.iteration << ',' << format_double(row.student_f1) << ','
         << format_double(row.teacher_f1) << ',' << format_double(row.total_loss) << '\n';
    }
    return os.str();
  }
  os << "arm,seed,iteration,threshold,precision,recall,correctness,coverage,f1\n";
  for (const TrajectoryRow& row : report.trajectory) {
    os << row.arm << ',' << row.seed << ',' << row.iteration << ','
       << format_double(row.threshold, 3) << ',' << format_double(row.precision) << ','
       << format_double(row.recall) << ',' << format_double(row.correctness) << ','
       << format_double(row.coverage) << ',' << format_double(row.f1) << '\n';
  }
  return os.str();
}

inline std::string summary_text(const RunReport& report) {
  std::ostringstream os;
  os << "experiment: " << experiment_kind_name(report.kind) << "\n";
  if (report.kind == ExperimentKind::kToySslLoop) {
    for (const ToyResultRow& row : report.toy_aggregates) {
      os << "  " << row.arm << ": mean final F1 " << format_double(row.final_f1, 4) << "\n";
    }
    return os.str();
  }
  if (report.kind == ExperimentKind::kFpFnSweep) {
    for (const FpFnReportRow& row : report.fpfn) {
      if (!row.aggregate) continue;
      os << "  threshold " << format_double(row.threshold, 2) << ": FP "
         << format_double(row.fp, 0) << ", FN " << format_double(row.fn, 0) << "\n";
    }
    return os.str();
  }
  for (const ArmSeedRow& row : report.aggregates) {
    os << "  " << row.arm << ": mean F1 " << format_double(row.final_f1, 4)
       << " (correctness " << format_double(row.correctness, 4) << ", coverage "
       << format_double(row.coverage, 4) << ")\n";
  }
  return os.str();
}

inline void write_report(const RunReport& report, const std::string& output_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(output_dir);
  std::ofstream(fs::path(output_dir) / "results.csv") << results_csv(report);
  if (report.kind != ExperimentKind::kFpFnSweep) {
    std::ofstream(fs::path(output_dir) / "trajectory.csv") << trajectory_csv(report);
  }
  std::ofstream(fs::path(output_dir) / "summary.txt") << summary_text(report);
}

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::kStrategyAblation: return run_strategy_ablation(cfg);
    case ExperimentKind::kThresholdSweep: return run_threshold_sweep(cfg);
    case ExperimentKind::kScheduleAblation: return run_schedule_ablation(cfg);
    case ExperimentKind::kFpFnSweep: return run_fpfn_sweep(cfg);
    case ExperimentKind::kToySslLoop: return run_toy_ssl_loop(cfg);
    case ExperimentKind::kExportScenes: {
      run_export_scenes(cfg);
      RunReport report;
      report.kind = ExperimentKind::kExportScenes;
      return report;
    }
  }
  throw ConfigError("unhandled experiment kind");
}

}  // namespace ssdet
