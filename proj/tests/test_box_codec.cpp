#include <doctest.h>

#include <cmath>

#include "ssdet/box_codec.hpp"
#include "support/oracles.hpp"

using namespace ssdet;

TEST_CASE("zero residual decodes to the anchor") {
  const Box3D anchor(3, -2, 0.5, 4, 2, 1.5, 0.4);
  const std::array<double, 7> zero{};
  const Box3D out = decode_box(anchor, zero);
  CHECK(out.cx == anchor.cx);
  CHECK(out.length == anchor.length);
  CHECK(out.yaw == anchor.yaw);
}

TEST_CASE("encode then decode reproduces the target box") {
  Rng rng(811);
  for (int i = 0; i < 500; ++i) {
    const Box3D anchor = oracle::random_box(rng);
    // keep the yaw difference inside the +-pi/2 range the sine encoding
    // can represent
    const Box3D target(anchor.cx + rng.uniform(-2, 2), anchor.cy + rng.uniform(-2, 2),
                       anchor.cz + rng.uniform(-1, 1),
                       anchor.length * rng.uniform(0.5, 2.0),
                       anchor.width * rng.uniform(0.5, 2.0),
                       anchor.height * rng.uniform(0.5, 2.0),
                       anchor.yaw + rng.uniform(-1.2, 1.2));
    const Box3D back = decode_box(anchor, encode_box(anchor, target));
    CHECK(back.cx == doctest::Approx(target.cx).epsilon(1e-12));
    CHECK(back.cy == doctest::Approx(target.cy).epsilon(1e-12));
    CHECK(back.cz == doctest::Approx(target.cz).epsilon(1e-12));
    CHECK(back.length == doctest::Approx(target.length).epsilon(1e-12));
    CHECK(back.width == doctest::Approx(target.width).epsilon(1e-12));
    CHECK(back.height == doctest::Approx(target.height).epsilon(1e-12));
    CHECK(std::abs(normalize_yaw(back.yaw - target.yaw)) < 1e-9);
  }
}

TEST_CASE("decode clamps wild residuals to a valid box") {
  const Box3D anchor(0, 0, 0, 4, 2, 1.5, 0);
  const std::array<double, 7> wild{1e12, -1e12, 1e12, 50, -50, 50, 3.0};
  const Box3D out = decode_box(anchor, wild);
  CHECK(std::isfinite(out.cx));
  CHECK(out.length > 0);
  CHECK(out.length == doctest::Approx(4.0 * std::exp(3.0)));
  CHECK(std::abs(out.cx) <= 10.0 * std::hypot(4.0, 2.0) + 1e-9);
}
