#include <doctest.h>

#include <sstream>

#include "ssdet/evaluation.hpp"
#include "ssdet/simulator.hpp"
#include "support/oracles.hpp"

using namespace ssdet;

namespace {
Proposal pred(double cx, double score, ObjectClass cls = ObjectClass::Car) {
  return {Box3D(cx, 0, 0, 4, 2, 1.5, 0), cls, score, score};
}
Box3D gt_box(double cx) { return Box3D(cx, 0, 0, 4, 2, 1.5, 0); }
}  // namespace

TEST_CASE("greedy_match: exact hit") {
  const std::vector<Proposal> preds = {pred(0, 0.9)};
  const std::vector<Box3D> gts = {gt_box(0)};
  const auto m = greedy_match(preds, gts, 0.7);
  CHECK(m.counts.tp == 1);
  CHECK(m.counts.fp == 0);
  CHECK(m.counts.fn == 0);
  CHECK(m.pred_to_gt == std::vector<std::int64_t>{0});
}

TEST_CASE("greedy_match: two preds on one GT keeps one-to-one") {
  const std::vector<Proposal> preds = {pred(0.02, 0.9), pred(-0.02, 0.8)};
  const std::vector<Box3D> gts = {gt_box(0)};
  const auto m = greedy_match(preds, gts, 0.7);
  CHECK(m.counts.tp == 1);
  CHECK(m.counts.fp == 1);
  CHECK(m.counts.fn == 0);
  CHECK(m.pred_to_gt[0] == 0);
  CHECK(m.pred_to_gt[1] == -1);
}

TEST_CASE("greedy_match equals the brute-force re-implementation") {
  Rng rng(601);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Proposal> preds;
    std::vector<Box3D> gts;
    for (int g = 0; g < 10; ++g) gts.push_back(Box3D(6.0 * g, rng.uniform(-2, 2), 0, 4, 2, 1.5, rng.uniform(-0.4, 0.4)));
    for (int p = 0; p < 20; ++p) {
      const int target = rng.uniform_int(0, 9);
      preds.push_back({Box3D(6.0 * target + rng.normal(0, 0.8), rng.normal(0, 0.8), 0, 4, 2,
                             1.5, rng.uniform(-0.5, 0.5)),
                       ObjectClass::Car, rng.uniform(), 0.0});
    }
    const auto got = greedy_match(preds, gts, 0.5);
    const auto want = oracle::brute_greedy_match(preds, gts, 0.5);
    CHECK(got.counts.tp == want.tp);
    CHECK(got.pred_to_gt == want.pred_to_gt);
    CHECK(got.counts.tp + got.counts.fn == gts.size());
    CHECK(got.counts.tp + got.counts.fp == preds.size());
  }
}

TEST_CASE("raising the match IoU threshold never increases TP") {
  Rng rng(602);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Proposal> preds;
    std::vector<Box3D> gts;
    for (int g = 0; g < 6; ++g) gts.push_back(gt_box(6.0 * g));
    for (int p = 0; p < 12; ++p) {
      preds.push_back({Box3D(rng.uniform(0, 36), rng.normal(0, 1.0), 0, 4, 2, 1.5, 0),
                       ObjectClass::Car, rng.uniform(), 0.0});
    }
    std::size_t prev = gts.size() + 1;
    for (double thr : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const auto m = greedy_match(preds, gts, thr);
      if (prev <= gts.size()) CHECK(m.counts.tp <= prev);
      prev = m.counts.tp;
    }
  }
}

TEST_CASE("ap40: perfect detection, no detection, and the half case") {
  // all GT detected, zero FP
  std::vector<ScoredHit> perfect = {{0.9, true}, {0.8, true}};
  CHECK(average_precision(perfect, 2) == doctest::Approx(1.0));

  // zero detections
  CHECK(average_precision({}, 2) == doctest::Approx(0.0));

  // 2 GT; top pred TP, second FP: interpolated precision 1.0 up to
  // recall 0.5, zero beyond -> AP = 20/40
  std::vector<ScoredHit> half = {{0.9, true}, {0.8, false}};
  CHECK(average_precision(half, 2) == doctest::Approx(0.5));

  // zero GT: undefined
  CHECK_FALSE(average_precision({{0.9, false}}, 0).has_value());
}

TEST_CASE("ap40: pr curve samples are exposed") {
  std::vector<double> pr;
  std::vector<ScoredHit> half = {{0.9, true}, {0.8, false}};
  average_precision(half, 2, 40, &pr);
  REQUIRE(pr.size() == 40);
  for (int i = 0; i < 20; ++i) CHECK(pr[i] == doctest::Approx(1.0));
  for (int i = 20; i < 40; ++i) CHECK(pr[i] == doctest::Approx(0.0));
}

TEST_CASE("ap is monotone under adding a top-scored TP or FP") {
  Rng rng(603);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScoredHit> hits;
    const std::size_t n_gt = 1 + rng.uniform_int(0, 8);
    const int n = rng.uniform_int(1, 15);
    for (int i = 0; i < n; ++i) hits.push_back({rng.uniform(0.0, 0.9), rng.bernoulli(0.5)});
    const double base = *average_precision(hits, n_gt + 1);

    auto with_tp = hits;
    with_tp.push_back({0.95, true});
    CHECK(*average_precision(with_tp, n_gt + 1) >= base - 1e-12);

    auto with_fp = hits;
    with_fp.push_back({0.95, false});
    CHECK(*average_precision(with_fp, n_gt + 1) <= base + 1e-12);
  }
}

TEST_CASE("fp_fn_sweep: endpoints and monotonicity") {
  const std::vector<LabeledBox> gts = {
      {gt_box(0), ObjectClass::Car}, {gt_box(10), ObjectClass::Car}};
  const std::vector<Proposal> perfect = {pred(0, 0.8), pred(10, 0.9)};
  const std::vector<double> taus = {0.0, 0.85, 1.0 + 1e-9};
  const auto rows = fp_fn_sweep(perfect, gts, taus);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].counts.fp == 0);
  CHECK(rows[0].counts.fn == 0);
  CHECK(rows[1].counts.fn == 1);  // 0.8-scored pred dropped
  CHECK(rows[2].counts.fp == 0);
  CHECK(rows[2].counts.fn == 2);  // everything filtered

  CHECK_THROWS(fp_fn_sweep(perfect, gts, std::vector<double>{0.5, 0.1}));
}

TEST_CASE("fp_fn_sweep: fp non-increasing, fn non-decreasing over seeded scenes") {
  SceneSpec spec;
  spec.seed = 604;
  TeacherModel teacher;  // default miscalibrated teacher
  const std::vector<double> taus = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto scene = gen_scene(spec, i);
    Rng rng = derived_rng(spec.seed, {streams::kProposal, i});
    const auto props = gen_proposals(scene, teacher, spec, 1000, rng);
    const auto rows = fp_fn_sweep(props, scene, taus);
    for (std::size_t k = 1; k < rows.size(); ++k) {
      CHECK(rows[k].counts.fp <= rows[k - 1].counts.fp);
      CHECK(rows[k].counts.fn >= rows[k - 1].counts.fn);
    }
    for (const auto& row : rows) {
      std::size_t n_gt = 0;
      for (const auto& g : scene) { (void)g; ++n_gt; }
      CHECK(row.counts.tp + row.counts.fn == n_gt);
    }
  }
}

TEST_CASE("evaluate_detections: report structure and mAP") {
  std::vector<SceneDetections> scenes(1);
  scenes[0].gts = {{gt_box(0), ObjectClass::Car}, {gt_box(10), ObjectClass::Car}};
  scenes[0].preds = {pred(0, 0.9), pred(10, 0.8)};
  const auto report = evaluate_detections(scenes);
  CHECK(report.classes[0].ap == doctest::Approx(1.0));
  CHECK_FALSE(report.classes[1].ap.has_value());  // no pedestrian GT
  CHECK_FALSE(report.classes[2].ap.has_value());
  CHECK(report.map == doctest::Approx(1.0));  // undefined classes excluded
  CHECK(report.classes[0].n_gt == 2);
}

TEST_CASE("evaluate_detections: csv schema is stable") {
  std::vector<SceneDetections> scenes(1);
  scenes[0].gts = {{gt_box(0), ObjectClass::Car}};
  scenes[0].preds = {pred(0, 0.9)};
  std::ostringstream os;
  write_csv(evaluate_detections(scenes), os);
  const std::string text = os.str();
  CHECK(text.substr(0, text.find('\n')) == "class,threshold,tp,fp,fn,precision,recall,ap");
  CHECK(text.find("Car,0.000,1,0,0,1.000000,1.000000,1.000000") != std::string::npos);
}

TEST_CASE("eval config validation") {
  EvalConfig bad;
  bad.iou_thresholds.car = 0.0;
  CHECK_THROWS(validate(bad));
  bad.iou_thresholds.car = 1.5;
  CHECK_THROWS(validate(bad));
  EvalConfig ok;
  CHECK_NOTHROW(validate(ok));
  ok.recall_positions = 0;
  CHECK_THROWS(validate(ok));
}
