#include <doctest.h>

#include <cmath>

#include "pmotion/pressure.hpp"
#include "pmotion/skeleton.hpp"

using namespace pmotion;

TEST_CASE("pressure: pixel centroid on handcrafted maps") {
  MatF m = MatF::Zero(3, 4);
  m(1, 2) = 5.0f;
  auto c = pixel_cop(m);
  REQUIRE(c.has_value());
  CHECK(c->x() == doctest::Approx(2.0));  // column
  CHECK(c->y() == doctest::Approx(1.0));  // row

  m(1, 0) = 5.0f;  // symmetric pair along the row
  c = pixel_cop(m);
  CHECK(c->x() == doctest::Approx(1.0));
  CHECK(c->y() == doctest::Approx(1.0));

  MatF zero = MatF::Zero(3, 4);
  CHECK_FALSE(pixel_cop(zero).has_value());

  // Nonpositive entries carry no weight.
  MatF neg = MatF::Zero(2, 2);
  neg(0, 0) = -3.0f;
  neg(1, 1) = 2.0f;
  auto cn = pixel_cop(neg);
  REQUIRE(cn.has_value());
  CHECK(cn->x() == doctest::Approx(1.0));
  CHECK(cn->y() == doctest::Approx(1.0));
}

TEST_CASE("pressure: pixel to world calibration") {
  Calibration cal;
  cal.scale = Vector2d(0.02, 0.03);
  cal.offset = Vector2d(0.5, -0.2);
  Vector3d w = cop_to_world(Vector2d(2.0, 1.0), cal);
  CHECK(w.x() == doctest::Approx(0.54));
  CHECK(w.y() == 0.0);
  CHECK(w.z() == doctest::Approx(-0.17));

  MatF m = MatF::Zero(3, 4);
  m(1, 2) = 1.0f;
  auto ww = world_cop(m, cal);
  REQUIRE(ww.has_value());
  CHECK(ww->x() == doctest::Approx(0.54));
  CHECK(ww->z() == doctest::Approx(-0.17));
}

TEST_CASE("pressure: motion cop matches a direct softmax oracle") {
  JointSequence js;
  js.pos = MatD::Zero(1, kJoints * 3);
  for (int j = 0; j < kJoints; ++j) js.set_joint(0, j, Vector3d(0, 1.0, 0));
  js.set_joint(0, LAnkle, Vector3d(-0.1, 0.04, 0.0));
  js.set_joint(0, LFoot, Vector3d(-0.1, 0.00, 0.14));
  js.set_joint(0, RAnkle, Vector3d(0.1, 0.04, 0.0));
  js.set_joint(0, RFoot, Vector3d(0.1, 0.00, 0.14));

  const double temp = 0.05;
  double wsum = 0;
  Vector3d expect = Vector3d::Zero();
  for (int j : kContactJoints) {
    const Vector3d p = js.joint(0, j);
    const double w = std::exp(-p.y() / temp);  // oracle: no max-shift
    expect.x() += w * p.x();
    expect.z() += w * p.z();
    wsum += w;
  }
  expect /= wsum;
  expect.y() = 0;

  Vector3d got = motion_cop(js, 0, temp);
  CHECK((got - expect).norm() < 1e-12);
  CHECK(got.y() == 0.0);
}

TEST_CASE("pressure: temporal difference layout") {
  PressureSequence seq;
  seq.height = 2;
  seq.width = 2;
  MatF a = MatF::Zero(2, 2), b = MatF::Zero(2, 2);
  a(0, 0) = 1.0f;
  b(0, 0) = 3.0f;
  b(1, 1) = 2.0f;
  seq.maps = {a, b};
  std::vector<MatF> d = temporal_diff(seq);
  REQUIRE(d.size() == 2);
  CHECK(d[0].cwiseAbs().maxCoeff() == 0.0f);  // frame 0 has no past
  CHECK(d[1](0, 0) == doctest::Approx(2.0f));
  CHECK(d[1](1, 1) == doctest::Approx(2.0f));
}

TEST_CASE("pressure: grid encoding structure") {
  const int H = 3, W = 4, D = 8;
  MatF g = grid_encoding(H, W, D);
  REQUIRE(g.rows() == D);
  REQUIRE(g.cols() == H * W);
  CHECK(g.cwiseAbs().maxCoeff() <= 1.0f + 1e-6f);
  // First half encodes the column axis: constant down each column of pixels.
  for (int c = 0; c < D / 2; ++c)
    for (int x = 0; x < W; ++x)
      for (int z = 1; z < H; ++z)
        CHECK(g(c, z * W + x) == doctest::Approx(g(c, x)));
  // Channel 0 is sin at frequency pi over the normalized coordinate.
  CHECK(g(0, 0) == doctest::Approx(0.0));
  CHECK(g(0, 1) == doctest::Approx(std::sin(M_PI * 1.0 / (W - 1))));
  CHECK(g(1, 0) == doctest::Approx(1.0));  // cos(0)
  // Second half encodes the row axis.
  CHECK(g(D / 2, W) ==
        doctest::Approx(std::sin(M_PI * 1.0 / (H - 1))));
  CHECK_THROWS_AS(grid_encoding(H, W, 7), Error);
}
