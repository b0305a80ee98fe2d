#include <doctest.h>

#include <set>

#include "ssdet/nms.hpp"
#include "support/oracles.hpp"

using namespace ssdet;

namespace {
std::vector<Proposal> random_proposals(Rng& rng, int n) {
  std::vector<Proposal> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    // clustered centers so suppression actually triggers
    const Box3D box(rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-1, 1),
                    rng.uniform(1.0, 4.0), rng.uniform(1.0, 4.0), rng.uniform(1.0, 2.0),
                    rng.uniform(-kPi, kPi));
    out.push_back({box, ObjectClass::Car, rng.uniform(), rng.uniform()});
  }
  return out;
}
}  // namespace

TEST_CASE("single proposal is kept; empty input yields empty output") {
  const Proposal p{Box3D(0, 0, 0, 1, 1, 1, 0), ObjectClass::Car, 0.5, 0.5};
  CHECK(nms_bev(std::vector<Proposal>{p}, 0.5) == std::vector<std::size_t>{0});
  CHECK(nms_bev(std::vector<Proposal>{}, 0.5).empty());
}

TEST_CASE("overlapping pair keeps only the higher score") {
  // IoU 1/3 > 0.3 threshold, scores 0.9 vs 0.8
  std::vector<Proposal> props = {
      {Box3D(0, 0, 0, 2, 2, 1, 0), ObjectClass::Car, 0.9, 0.0},
      {Box3D(1, 0, 0, 2, 2, 1, 0), ObjectClass::Car, 0.8, 0.0},
  };
  CHECK(nms_bev(props, 0.3) == std::vector<std::size_t>{0});
  // order in the input must not matter for which box survives
  std::swap(props[0], props[1]);
  CHECK(nms_bev(props, 0.3) == std::vector<std::size_t>{1});
}

TEST_CASE("suppression is strictly greater-than the threshold") {
  std::vector<Proposal> props = {
      {Box3D(0, 0, 0, 2, 2, 1, 0), ObjectClass::Car, 0.9, 0.0},
      {Box3D(1, 0, 0, 2, 2, 1, 0), ObjectClass::Car, 0.8, 0.0},
  };
  const double iou = iou_bev(props[0].box, props[1].box);
  CHECK(nms_bev(props, iou).size() == 2);        // IoU == tau survives
  CHECK(nms_bev(props, iou - 1e-9).size() == 1); // just below suppresses
}

TEST_CASE("score ties break by ascending input index") {
  std::vector<Proposal> props = {
      {Box3D(0, 0, 0, 2, 2, 1, 0), ObjectClass::Car, 0.7, 0.0},
      {Box3D(0.1, 0, 0, 2, 2, 1, 0), ObjectClass::Car, 0.7, 0.0},
  };
  CHECK(nms_bev(props, 0.1) == std::vector<std::size_t>{0});
}

TEST_CASE("matches the independent reference on random instances") {
  Rng rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    const auto props = random_proposals(rng, 50);
    const double tau = rng.uniform(0.0, 0.9);
    const auto got = nms_bev(props, tau);
    const auto want = oracle::reference_nms(props, tau, iou_bev);
    CHECK(got == want);
  }
}

TEST_CASE("kept set is an antichain and contains the top score") {
  Rng rng(203);
  for (int trial = 0; trial < 50; ++trial) {
    const auto props = random_proposals(rng, 40);
    const double tau = rng.uniform(0.0, 0.8);
    const auto kept = nms_bev(props, tau);

    std::size_t best = 0;
    for (std::size_t i = 1; i < props.size(); ++i) {
      if (props[i].cls_score > props[best].cls_score) best = i;
    }
    CHECK(std::find(kept.begin(), kept.end(), best) != kept.end());

    for (std::size_t i : kept) {
      for (std::size_t j : kept) {
        if (i < j) CHECK(iou_bev(props[i].box, props[j].box) <= tau);
      }
    }
  }
}

TEST_CASE("raising the threshold never shrinks the kept set") {
  Rng rng(204);
  for (int trial = 0; trial < 50; ++trial) {
    const auto props = random_proposals(rng, 40);
    const double t1 = rng.uniform(0.0, 0.5);
    const double t2 = t1 + rng.uniform(0.0, 0.5);
    CHECK(nms_bev(props, t1).size() <= nms_bev(props, t2).size());
  }
}

TEST_CASE("invalid inputs are rejected") {
  std::vector<Proposal> props = {
      {Box3D(0, 0, 0, 1, 1, 1, 0), ObjectClass::Car, 0.5, 0.0}};
  CHECK_THROWS(nms_bev(props, -0.1));
  CHECK_THROWS(nms_bev(props, 1.5));
  props[0].cls_score = std::numeric_limits<double>::infinity();
  CHECK_THROWS(nms_bev(props, 0.5));
}
