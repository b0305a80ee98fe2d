#include <doctest.h>

#include <set>

#include "ssdet/pseudo_labels.hpp"
#include "ssdet/simulator.hpp"
#include "support/oracles.hpp"

using namespace ssdet;

namespace {
Proposal make(double cx, double cy, ObjectClass cls, double score,
              double l = 2.0, double w = 2.0) {
  return {Box3D(cx, cy, 0, l, w, 1.5, 0), cls, score, score};
}
}  // namespace

TEST_CASE("sparse: duplicate boxes collapse to one label") {
  const std::vector<Proposal> props = {
      make(0, 0, ObjectClass::Car, 0.9),
      make(0.1, 0, ObjectClass::Car, 0.8),
  };
  const auto set = generate_sparse(props, 0.4, 0.3);
  CHECK(set.labels.size() == 1);
  CHECK(set.source_indices == std::vector<std::size_t>{0});
  CHECK(set.applied_threshold == 0.4);
}

TEST_CASE("sparse: all below threshold gives an empty set") {
  const std::vector<Proposal> props = {
      make(0, 0, ObjectClass::Car, 0.3),
      make(5, 0, ObjectClass::Pedestrian, 0.2),
  };
  CHECK(generate_sparse(props, 0.4, 0.3).labels.empty());
  CHECK(generate_sparse({}, 0.4, 0.3).labels.empty());
}

TEST_CASE("sparse: suppression is per class, cross-class overlaps survive") {
  // car and pedestrian on the same spot; second car suppressed, the
  // pedestrian kept even though it overlaps the car footprint entirely
  const std::vector<Proposal> props = {
      make(0, 0, ObjectClass::Car, 0.9),
      make(0.05, 0, ObjectClass::Car, 0.7),
      make(0, 0, ObjectClass::Pedestrian, 0.8, 0.8, 0.6),
  };
  const auto set = generate_sparse(props, 0.4, 0.3);
  REQUIRE(set.labels.size() == 2);
  CHECK(set.source_indices == std::vector<std::size_t>{0, 2});

  // cross-check against per-class reference NMS
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::vector<Proposal> of_class;
    std::vector<std::size_t> back;
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props[i].class_id == static_cast<ObjectClass>(c)) {
        of_class.push_back(props[i]);
        back.push_back(i);
      }
    }
    const auto ref = oracle::reference_nms(of_class, 0.3, iou_bev);
    for (std::size_t k : ref) {
      if (of_class[k].cls_score >= 0.4) {
        CHECK(std::find(set.source_indices.begin(), set.source_indices.end(), back[k]) !=
              set.source_indices.end());
      }
    }
  }
}

TEST_CASE("dense: keeps everything at or above the schedule value") {
  const std::vector<Proposal> props = {
      make(0, 0, ObjectClass::Car, 0.7),
      make(10, 0, ObjectClass::Car, 0.5),
      make(20, 0, ObjectClass::Car, 0.3),
  };
  const ThresholdSchedule sched{0.6, 0.4, 100, 0.1};
  // at t=200 the schedule sits at 0.4
  const auto set = generate_dense(props, sched, 200);
  CHECK(set.applied_threshold == 0.4);
  CHECK(set.source_indices == std::vector<std::size_t>{0, 1});
  CHECK(set.source_iteration == 200);
}

TEST_CASE("dense: heavily overlapping high scorers are both retained") {
  const std::vector<Proposal> props = {
      make(0, 0, ObjectClass::Car, 0.9),
      make(0.05, 0, ObjectClass::Car, 0.85),
  };
  CHECK(generate_dense(props, 0.5).labels.size() == 2);
  CHECK(generate_sparse(props, 0.5, 0.3).labels.size() == 1);
}

TEST_CASE("dense output is a superset of sparse at equal threshold") {
  SceneSpec spec;
  spec.seed = 77;
  TeacherModel teacher;
  Rng tau_rng(770);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto scene = gen_scene(spec, i);
    Rng rng = derived_rng(spec.seed, {streams::kProposal, i});
    const auto props = gen_proposals(scene, teacher, spec, i * 17 % 2000, rng);
    const double tau = tau_rng.uniform(0.0, 0.9);
    const double nms_iou = tau_rng.uniform(0.0, 0.7);
    const auto dense = generate_dense(props, tau);
    const auto sparse = generate_sparse(props, tau, nms_iou);
    const std::set<std::size_t> dense_idx(dense.source_indices.begin(),
                                          dense.source_indices.end());
    for (std::size_t s : sparse.source_indices) CHECK(dense_idx.count(s) == 1);
    CHECK(dense.labels.size() >= sparse.labels.size());
  }
}

TEST_CASE("raising the threshold never increases the label count") {
  SceneSpec spec;
  spec.seed = 78;
  TeacherModel teacher;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto scene = gen_scene(spec, i);
    Rng rng = derived_rng(spec.seed, {streams::kProposal, i});
    const auto props = gen_proposals(scene, teacher, spec, 500, rng);
    for (double lo = 0.0; lo < 0.9; lo += 0.1) {
      CHECK(generate_dense(props, lo + 0.1).labels.size() <=
            generate_dense(props, lo).labels.size());
      CHECK(generate_sparse(props, lo + 0.1, 0.3).labels.size() <=
            generate_sparse(props, lo, 0.3).labels.size());
    }
  }
}

TEST_CASE("label_quality: pseudo set equal to GT is perfect") {
  const std::vector<LabeledBox> gt = {
      {Box3D(0, 0, 0, 3.9, 1.6, 1.5, 0.2), ObjectClass::Car},
      {Box3D(10, 5, 0, 0.8, 0.6, 1.7, 1.0), ObjectClass::Pedestrian},
  };
  PseudoLabelSet set;
  for (const auto& g : gt) set.labels.push_back({g.box, g.class_id, 0.9, 0.9});
  set.source_indices = {0, 1};
  const auto q = label_quality(set, gt);
  CHECK(q.precision == 1.0);
  CHECK(q.recall == 1.0);
  CHECK(q.gt_coverage == 1.0);
  CHECK(q.label_correctness == 1.0);
  CHECK(q.mean_matched_iou == doctest::Approx(1.0));
  CHECK(q.precision_defined);
}

TEST_CASE("label_quality: empty pseudo set is flagged") {
  const std::vector<LabeledBox> gt = {
      {Box3D(0, 0, 0, 3.9, 1.6, 1.5, 0), ObjectClass::Car}};
  const auto q = label_quality(PseudoLabelSet{}, gt);
  CHECK_FALSE(q.precision_defined);
  CHECK(q.precision == 0.0);
  CHECK(q.recall == 0.0);
  CHECK(q.gt_coverage == 0.0);
}

TEST_CASE("label_quality: duplicates on one GT, exhaustive oracle values") {
  // 3 GT; 5 pseudo-labels; 4 correct, of which 2 sit on GT0 and 2 on GT1;
  // GT2 uncovered; 1 clutter label. The one-to-one matching can match at
  // most one label per GT regardless of order, so tp = 2 for every
  // visiting order -- verified below by brute force over all orders.
  const std::vector<LabeledBox> gt = {
      {Box3D(0, 0, 0, 4, 2, 1.5, 0), ObjectClass::Car},
      {Box3D(20, 0, 0, 4, 2, 1.5, 0), ObjectClass::Car},
      {Box3D(40, 0, 0, 4, 2, 1.5, 0), ObjectClass::Car},
  };
  PseudoLabelSet set;
  set.labels = {
      {Box3D(0.05, 0, 0, 4, 2, 1.5, 0), ObjectClass::Car, 0.9, 0.9},   // GT0
      {Box3D(-0.05, 0, 0, 4, 2, 1.5, 0), ObjectClass::Car, 0.8, 0.8},  // GT0 dup
      {Box3D(20.05, 0, 0, 4, 2, 1.5, 0), ObjectClass::Car, 0.7, 0.7},  // GT1
      {Box3D(19.95, 0, 0, 4, 2, 1.5, 0), ObjectClass::Car, 0.6, 0.6},  // GT1 dup
      {Box3D(60, 20, 0, 4, 2, 1.5, 0), ObjectClass::Car, 0.5, 0.5},    // clutter
  };
  set.source_indices = {0, 1, 2, 3, 4};

  // exhaustive check: every permutation of the greedy visiting order
  // yields the same TP count on this instance
  std::vector<std::size_t> perm = {0, 1, 2, 3, 4};
  std::set<std::size_t> tp_counts;
  std::vector<Box3D> gt_boxes;
  for (const auto& g : gt) gt_boxes.push_back(g.box);
  do {
    std::vector<char> taken(gt.size(), 0);
    std::size_t tp = 0;
    for (std::size_t li : perm) {
      double best = 0.0;
      std::size_t arg = gt.size();
      for (std::size_t g = 0; g < gt.size(); ++g) {
        if (taken[g]) continue;
        const double iou = iou_3d(set.labels[li].box, gt_boxes[g]);
        if (iou >= 0.7 && iou > best) {
          best = iou;
          arg = g;
        }
      }
      if (arg < gt.size()) {
        taken[arg] = 1;
        ++tp;
      }
    }
    tp_counts.insert(tp);
  } while (std::next_permutation(perm.begin(), perm.end()));
  REQUIRE(tp_counts == std::set<std::size_t>{2});

  const auto q = label_quality(set, gt);
  CHECK(q.precision == doctest::Approx(2.0 / 5.0));
  CHECK(q.recall == doctest::Approx(2.0 / 3.0));
  CHECK(q.gt_coverage == doctest::Approx(2.0 / 3.0));
  CHECK(q.label_correctness == doctest::Approx(4.0 / 5.0));
}

TEST_CASE("gt_coverage of dense dominates sparse at equal threshold") {
  SceneSpec spec;
  spec.seed = 79;
  TeacherModel teacher;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto scene = gen_scene(spec, i);
    Rng rng = derived_rng(spec.seed, {streams::kProposal, i});
    const auto props = gen_proposals(scene, teacher, spec, 1500, rng);
    const auto dense = label_quality(generate_dense(props, 0.4), scene);
    const auto sparse = label_quality(generate_sparse(props, 0.4, 0.1), scene);
    CHECK(dense.gt_coverage >= sparse.gt_coverage);
  }
}
