#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssdet/box_codec.hpp"
#include "ssdet/config.hpp"
#include "ssdet/ema.hpp"
#include "ssdet/evaluation.hpp"
#include "ssdet/losses.hpp"
#include "ssdet/nms.hpp"
#include "ssdet/pseudo_labels.hpp"
#include "ssdet/rng.hpp"
#include "ssdet/schedule.hpp"
#include "ssdet/simulator.hpp"
#include "ssdet/transforms.hpp"

namespace ssdet {

struct DivergenceError : std::runtime_error {
  DivergenceError(std::uint64_t iteration, const std::string& stage)
      : std::runtime_error("non-finite loss at iteration " + std::to_string(iteration) +
                           " (" + stage + ")"),
        iteration(iteration) {}
  std::uint64_t iteration;
};

// A detection candidate observable in a scene: a rough box hypothesis, its
// claimed class, and fixed per-candidate sensing noise. The link to the
// underlying object (gt_index, true_iou) is hidden state used only for
// feature synthesis and ground-truth supervision on labeled scenes.
struct ToyCandidate {
  Box3D box;
  ObjectClass class_id;
  int gt_index = -1;
  double true_iou = 0.0;
  std::vector<double> sensing_noise;
};

struct ToyScene {
  std::vector<LabeledBox> gts;
  std::vector<ToyCandidate> candidates;
};

// The synthetic world the toy loop trains in: a fixed linear feature map
// from (box residual, IoU) onto feature_dim dimensions plus per-candidate
// noise, and three disjoint scene sets.
struct ToyWorld {
  int feature_dim = 12;
  double feature_noise = 0.3;
  std::vector<double> feature_map;  // feature_dim x 8, row-major
  std::vector<ToyScene> labeled;
  std::vector<ToyScene> unlabeled;
  std::vector<ToyScene> test;
};

namespace detail {

inline ToyScene build_toy_scene(const SceneSpec& spec, const ToyLoopConfig& cfg,
                                std::uint64_t seed, std::uint64_t scene_index) {
  ToyScene scene;
  SceneSpec seeded = spec;
  seeded.seed = seed;
  scene.gts = gen_scene(seeded, scene_index);
  Rng rng = derived_rng(seed, {streams::kCandidates, scene_index});

  for (std::size_t g = 0; g < scene.gts.size(); ++g) {
    const Box3D& gt = scene.gts[g].box;
    const double center_sigma = cfg.candidate_center_frac * std::min(gt.length, gt.width);
    for (int k = 0; k < cfg.candidates_per_object; ++k) {
      const Box3D box(gt.cx + rng.normal(0.0, center_sigma),
                      gt.cy + rng.normal(0.0, center_sigma),
                      gt.cz + rng.normal(0.0, 0.5 * center_sigma),
                      gt.length * std::exp(rng.normal(0.0, cfg.candidate_dim_noise)),
                      gt.width * std::exp(rng.normal(0.0, cfg.candidate_dim_noise)),
                      gt.height * std::exp(rng.normal(0.0, cfg.candidate_dim_noise)),
                      gt.yaw + rng.normal(0.0, cfg.candidate_yaw_noise));
      ToyCandidate cand{box, scene.gts[g].class_id, static_cast<int>(g), iou_3d(box, gt), {}};
      cand.sensing_noise.resize(static_cast<std::size_t>(cfg.feature_dim));
      for (double& x : cand.sensing_noise) x = rng.normal(0.0, cfg.feature_noise);
      scene.candidates.push_back(std::move(cand));
    }
  }

  for (int k = 0; k < cfg.clutter_candidates; ++k) {
    const auto cls = static_cast<ObjectClass>(rng.uniform_int(0, kNumClasses - 1));
    const ClassGeometry& geom = spec.canonical[static_cast<std::size_t>(cls)];
    const double height = geom.height * (1.0 + spec.dim_jitter * rng.uniform(-1.0, 1.0));
    const Box3D box(rng.uniform(spec.extent.x_min, spec.extent.x_max),
                    rng.uniform(spec.extent.y_min, spec.extent.y_max),
                    spec.ground_z + 0.5 * height,
                    geom.length * (1.0 + spec.dim_jitter * rng.uniform(-1.0, 1.0)),
                    geom.width * (1.0 + spec.dim_jitter * rng.uniform(-1.0, 1.0)), height,
                    rng.uniform(-kPi, kPi));
    ToyCandidate cand{box, cls, -1, 0.0, {}};
    for (std::size_t g = 0; g < scene.gts.size(); ++g) {
      if (scene.gts[g].class_id != cls) continue;
      const double iou = iou_3d(box, scene.gts[g].box);
      if (iou > cand.true_iou) {
        cand.true_iou = iou;
        cand.gt_index = iou > 0.1 ? static_cast<int>(g) : -1;
      }
    }
    cand.sensing_noise.resize(static_cast<std::size_t>(cfg.feature_dim));
    for (double& x : cand.sensing_noise) x = rng.normal(0.0, cfg.feature_noise);
    scene.candidates.push_back(std::move(cand));
  }
  return scene;
}

}  // namespace detail

// Scene index spaces are offset so the three sets never collide.
inline constexpr std::uint64_t kUnlabeledSceneOffset = 1u << 20;
inline constexpr std::uint64_t kTestSceneOffset = 1u << 21;

inline ToyWorld build_toy_world(const SceneSpec& spec, const ToyLoopConfig& cfg,
                                std::uint64_t seed) {
  ToyWorld world;
  world.feature_dim = cfg.feature_dim;
  world.feature_noise = cfg.feature_noise;

  Rng map_rng = derived_rng(seed, {streams::kWorld});
  world.feature_map.resize(static_cast<std::size_t>(cfg.feature_dim) * 8);
  const double scale = 1.0 / std::sqrt(8.0);
  for (double& x : world.feature_map) x = map_rng.normal(0.0, scale);
  // strengthen the diagonal so the latent channels stay recoverable
  for (int d = 0; d < std::min(cfg.feature_dim, 8); ++d) {
    world.feature_map[static_cast<std::size_t>(d) * 8 + d] += 1.0;
  }

  for (int i = 0; i < cfg.labeled_scenes; ++i) {
    world.labeled.push_back(detail::build_toy_scene(spec, cfg, seed, static_cast<std::uint64_t>(i)));
  }
  for (int i = 0; i < cfg.unlabeled_scenes; ++i) {
    world.unlabeled.push_back(
        detail::build_toy_scene(spec, cfg, seed, kUnlabeledSceneOffset + static_cast<std::uint64_t>(i)));
  }
  for (int i = 0; i < cfg.test_scenes; ++i) {
    world.test.push_back(
        detail::build_toy_scene(spec, cfg, seed, kTestSceneOffset + static_cast<std::uint64_t>(i)));
  }
  return world;
}

// Features for one candidate in a given augmentation frame: the fixed
// linear map applied to (residual-to-object in that frame, true IoU) plus
// the candidate's sensing noise. Clutter encodes as pure noise.
inline std::vector<double> toy_features(const ToyWorld& world, const ToyScene& scene,
                                        const ToyCandidate& cand,
                                        const GeoTransform& frame) {
  std::array<double, 8> latent{};
  if (cand.gt_index >= 0) {
    const Box3D cand_f = apply(frame, cand.box);
    const Box3D gt_f = apply(frame, scene.gts[static_cast<std::size_t>(cand.gt_index)].box);
    const auto enc = encode_box(cand_f, gt_f);
    for (int k = 0; k < 7; ++k) latent[static_cast<std::size_t>(k)] = enc[static_cast<std::size_t>(k)];
    latent[7] = cand.true_iou;  // similarity-invariant
  }
  std::vector<double> phi(static_cast<std::size_t>(world.feature_dim));
  for (int d = 0; d < world.feature_dim; ++d) {
    double acc = cand.sensing_noise[static_cast<std::size_t>(d)];
    const double* row = &world.feature_map[static_cast<std::size_t>(d) * 8];
    for (int k = 0; k < 8; ++k) acc += row[k] * latent[static_cast<std::size_t>(k)];
    phi[static_cast<std::size_t>(d)] = acc;
  }
  return phi;
}

// Linear four-head detector over candidate features: a classification
// logit, an IoU-estimate logit, an intermediate regression head, and a
// refinement head whose output decodes into the final box.
// Parameter layout: [W_cls d | b_cls | W_iou d | b_iou | W_reg 7d | b_reg 7
//                    | W_ref 7d | b_ref 7].
struct ToyDetector {
  int d = 12;
  ParamVector params;

  static std::size_t param_count(int d) {
    return 2 * (static_cast<std::size_t>(d) + 1) + 2 * (7 * static_cast<std::size_t>(d) + 7);
  }

  std::size_t off_cls() const { return 0; }
  std::size_t off_iou() const { return static_cast<std::size_t>(d) + 1; }
  std::size_t off_reg() const { return 2 * (static_cast<std::size_t>(d) + 1); }
  std::size_t off_ref() const { return off_reg() + 7 * static_cast<std::size_t>(d) + 7; }

  static ToyDetector init(int feature_dim, std::uint64_t seed) {
    ToyDetector det;
    det.d = feature_dim;
    det.params.assign(param_count(feature_dim), 0.0);
    Rng rng = derived_rng(seed, {streams::kInit});
    for (double& p : det.params) p = rng.normal(0.0, 0.01);
    return det;
  }

  struct Heads {
    double cls_logit = 0.0;
    double iou_logit = 0.0;
    std::array<double, 7> reg{};
    std::array<double, 7> ref{};
  };

  Heads forward(std::span<const double> phi) const {
    Heads h;
    const double* p = params.data();
    const auto n = static_cast<std::size_t>(d);
    double acc = p[off_cls() + n];
    for (std::size_t i = 0; i < n; ++i) acc += p[off_cls() + i] * phi[i];
    h.cls_logit = acc;
    acc = p[off_iou() + n];
    for (std::size_t i = 0; i < n; ++i) acc += p[off_iou() + i] * phi[i];
    h.iou_logit = acc;
    for (std::size_t r = 0; r < 7; ++r) {
      double v = p[off_reg() + 7 * n + r];
      for (std::size_t i = 0; i < n; ++i) v += p[off_reg() + r * n + i] * phi[i];
      h.reg[r] = v;
      double w = p[off_ref() + 7 * n + r];
      for (std::size_t i = 0; i < n; ++i) w += p[off_ref() + r * n + i] * phi[i];
      h.ref[r] = w;
    }
    return h;
  }
};

// Gradient accumulation helpers for the linear heads.
namespace detail {
inline void accum_scalar_head(ParamVector& grad, std::size_t off, int d,
                              std::span<const double> phi, double g) {
  const auto n = static_cast<std::size_t>(d);
  for (std::size_t i = 0; i < n; ++i) grad[off + i] += g * phi[i];
  grad[off + n] += g;
}
inline void accum_vector_head(ParamVector& grad, std::size_t off, int d,
                              std::span<const double> phi, std::size_t row, double g) {
  const auto n = static_cast<std::size_t>(d);
  for (std::size_t i = 0; i < n; ++i) grad[off + row * n + i] += g * phi[i];
  grad[off + 7 * n + row] += g;
}
}  // namespace detail

// Decoupled-weight-decay Adam.
struct AdamW {
  double lr = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.001;
  ParamVector m, v;
  std::uint64_t t = 0;

  void step(ParamVector& params, const ParamVector& grad) {
    if (m.empty()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * params[i]);
    }
  }
};

// Supervised loss on one scene with targets taken from ground truth
// (pretraining and the labeled half of every SSL batch). Gradients are
// accumulated into `grad` if non-null.
inline LossBreakdown toy_labeled_loss(const ToyDetector& det, const ToyWorld& world,
                                      const ToyScene& scene, const ToyLoopConfig& cfg,
                                      ParamVector* grad) {
  const std::size_t n = scene.candidates.size();
  std::vector<std::vector<double>> phis(n);
  std::vector<double> cls_logits(n);
  std::vector<int> cls_targets(n);
  std::vector<double> iou_probs(n), iou_targets(n);
  std::vector<ToyDetector::Heads> heads(n);
  std::vector<std::size_t> positives;

  for (std::size_t i = 0; i < n; ++i) {
    const ToyCandidate& cand = scene.candidates[i];
    phis[i] = toy_features(world, scene, cand, GeoTransform{});
    heads[i] = det.forward(phis[i]);
    cls_logits[i] = heads[i].cls_logit;
    cls_targets[i] = cand.gt_index >= 0 && cand.true_iou >= cfg.assign_iou ? 1 : 0;
    iou_probs[i] = std::clamp(detail::sigmoid(heads[i].iou_logit), 1e-9, 1.0 - 1e-9);
    iou_targets[i] = cand.true_iou;
    if (cls_targets[i] == 1) positives.push_back(i);
  }

  const LossResult cls = cls_loss(cls_logits, cls_targets, cfg.focal_gamma, cfg.focal_alpha);
  const LossResult iou = iou_est_loss(iou_probs, iou_targets);

  std::vector<double> reg_pred, ref_pred, reg_target;
  reg_pred.reserve(positives.size() * 7);
  for (std::size_t i : positives) {
    const ToyCandidate& cand = scene.candidates[i];
    const auto enc = encode_box(cand.box, scene.gts[static_cast<std::size_t>(cand.gt_index)].box);
    for (std::size_t r = 0; r < 7; ++r) {
      reg_pred.push_back(heads[i].reg[r]);
      ref_pred.push_back(heads[i].ref[r]);
      reg_target.push_back(enc[r]);
    }
  }
  const LossResult reg = reg_loss(reg_pred, reg_target, cfg.smooth_l1_beta);
  const LossResult ref = reg_loss(ref_pred, reg_target, cfg.smooth_l1_beta);

  if (grad) {
    for (std::size_t i = 0; i < n; ++i) {
      detail::accum_scalar_head(*grad, det.off_cls(), det.d, phis[i], cls.grad[i]);
      // chain through the sigmoid of the iou head
      const double dp = iou.grad[i] * iou_probs[i] * (1.0 - iou_probs[i]);
      detail::accum_scalar_head(*grad, det.off_iou(), det.d, phis[i], dp);
    }
    std::size_t k = 0;
    for (std::size_t i : positives) {
      for (std::size_t r = 0; r < 7; ++r, ++k) {
        detail::accum_vector_head(*grad, det.off_reg(), det.d, phis[i], r, reg.grad[k]);
        detail::accum_vector_head(*grad, det.off_ref(), det.d, phis[i], r, ref.grad[k]);
      }
    }
  }
  return supervised_total(cls.value, reg.value, iou.value, ref.value);
}

// Teacher inference on one unlabeled scene in the weak frame: every
// candidate becomes a proposal with the refined box and both score heads.
inline std::vector<Proposal> toy_teacher_proposals(const ToyDetector& teacher,
                                                   const ToyWorld& world,
                                                   const ToyScene& scene,
                                                   const GeoTransform& weak) {
  std::vector<Proposal> proposals;
  proposals.reserve(scene.candidates.size());
  for (const ToyCandidate& cand : scene.candidates) {
    const auto phi = toy_features(world, scene, cand, weak);
    const auto h = teacher.forward(phi);
    const Box3D weak_box = apply(weak, cand.box);
    proposals.push_back({decode_box(weak_box, h.ref), cand.class_id,
                         detail::sigmoid(h.cls_logit),
                         detail::sigmoid(h.iou_logit)});
  }
  return proposals;
}

// Unsupervised loss on one unlabeled scene: dense pseudo-labels from the
// teacher in the weak frame, aligned into the student's strong frame, and
// assigned to student candidates by best IoU.
inline LossBreakdown toy_unlabeled_loss(const ToyDetector& student,
                                        const ToyDetector& teacher, const ToyWorld& world,
                                        const ToyScene& scene, const ToyLoopConfig& cfg,
                                        const ThresholdSchedule& schedule, std::uint64_t t,
                                        const GeoTransform& weak, const GeoTransform& strong,
                                        ParamVector* grad) {
  const auto proposals = toy_teacher_proposals(teacher, world, scene, weak);
  const PseudoLabelSet pseudo = generate_dense(proposals, schedule, t);

  const GeoTransform align = alignment_transform(strong, weak);
  std::vector<Box3D> pseudo_boxes;
  pseudo_boxes.reserve(pseudo.labels.size());
  for (const Proposal& p : pseudo.labels) pseudo_boxes.push_back(apply(align, p.box));

  const std::size_t n = scene.candidates.size();
  std::vector<std::vector<double>> phis(n);
  std::vector<double> cls_logits(n);
  std::vector<int> cls_targets(n, 0);
  std::vector<ToyDetector::Heads> heads(n);
  std::vector<std::size_t> positives;
  std::vector<std::array<double, 7>> targets(n);

  for (std::size_t i = 0; i < n; ++i) {
    const ToyCandidate& cand = scene.candidates[i];
    phis[i] = toy_features(world, scene, cand, strong);
    heads[i] = student.forward(phis[i]);
    cls_logits[i] = heads[i].cls_logit;

    const Box3D student_box = apply(strong, cand.box);
    double best = 0.0;
    std::size_t arg = pseudo_boxes.size();
    for (std::size_t j = 0; j < pseudo_boxes.size(); ++j) {
      if (pseudo.labels[j].class_id != cand.class_id) continue;
      const double iou = iou_3d(student_box, pseudo_boxes[j]);
      if (iou > best) {
        best = iou;
        arg = j;
      }
    }
    if (arg < pseudo_boxes.size() && best >= cfg.assign_iou) {
      cls_targets[i] = 1;
      targets[i] = encode_box(student_box, pseudo_boxes[arg]);
      positives.push_back(i);
    }
  }

  const LossResult cls = cls_loss(cls_logits, cls_targets, cfg.focal_gamma, cfg.focal_alpha);
  std::vector<double> reg_pred, ref_pred, reg_target;
  for (std::size_t i : positives) {
    for (std::size_t r = 0; r < 7; ++r) {
      reg_pred.push_back(heads[i].reg[r]);
      ref_pred.push_back(heads[i].ref[r]);
      reg_target.push_back(targets[i][r]);
    }
  }
  const LossResult reg = reg_loss(reg_pred, reg_target, cfg.smooth_l1_beta);
  const LossResult ref = reg_loss(ref_pred, reg_target, cfg.smooth_l1_beta);

  if (grad) {
    for (std::size_t i = 0; i < n; ++i) {
      detail::accum_scalar_head(*grad, student.off_cls(), student.d, phis[i], cls.grad[i]);
    }
    std::size_t k = 0;
    for (std::size_t i : positives) {
      for (std::size_t r = 0; r < 7; ++r, ++k) {
        detail::accum_vector_head(*grad, student.off_reg(), student.d, phis[i], r, reg.grad[k]);
        detail::accum_vector_head(*grad, student.off_ref(), student.d, phis[i], r, ref.grad[k]);
      }
    }
  }
  return unsupervised_total(cls.value, reg.value, 0.0, ref.value);
}

// Detections for one scene in the canonical frame, NMS applied.
inline std::vector<Proposal> toy_detect(const ToyDetector& det, const ToyWorld& world,
                                        const ToyScene& scene, double nms_iou,
                                        double score_floor = 0.05) {
  std::vector<Proposal> raw;
  for (const ToyCandidate& cand : scene.candidates) {
    const auto phi = toy_features(world, scene, cand, GeoTransform{});
    const auto h = det.forward(phi);
    const double score = detail::sigmoid(h.cls_logit);
    if (score < score_floor) continue;
    raw.push_back({decode_box(cand.box, h.ref), cand.class_id, score,
                   detail::sigmoid(h.iou_logit)});
  }
  std::vector<Proposal> kept;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::vector<Proposal> of_class;
    for (const Proposal& p : raw) {
      if (p.class_id == static_cast<ObjectClass>(c)) of_class.push_back(p);
    }
    for (std::size_t k : nms_bev(of_class, nms_iou)) kept.push_back(of_class[k]);
  }
  return kept;
}

// Micro-averaged detection F1 over a scene set, maximized over an
// operating-threshold grid.
inline double toy_eval_f1(const ToyDetector& det, const ToyWorld& world,
                          std::span<const ToyScene> scenes, const IouThresholds& match,
                          IouKind kind, double nms_iou) {
  std::vector<std::vector<Proposal>> dets;
  dets.reserve(scenes.size());
  for (const ToyScene& scene : scenes) {
    dets.push_back(toy_detect(det, world, scene, nms_iou));
  }
  double best_f1 = 0.0;
  for (int step = 1; step < 20; ++step) {
    const double tau = 0.05 * step;
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto cls = static_cast<ObjectClass>(c);
        std::vector<Proposal> preds;
        for (const Proposal& p : dets[s]) {
          if (p.class_id == cls && p.cls_score >= tau) preds.push_back(p);
        }
        std::vector<Box3D> gts;
        for (const LabeledBox& g : scenes[s].gts) {
          if (g.class_id == cls) gts.push_back(g.box);
        }
        const auto m = greedy_match(preds, gts, match.for_class(cls), kind);
        tp += m.counts.tp;
        fp += m.counts.fp;
        fn += m.counts.fn;
      }
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    if (denom > 0.0) best_f1 = std::max(best_f1, 2.0 * static_cast<double>(tp) / denom);
  }
  return best_f1;
}

}  // namespace ssdet
