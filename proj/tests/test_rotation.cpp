#include <doctest.h>

#include <cmath>

#include "pmotion/rng.hpp"
#include "pmotion/rotation.hpp"

using namespace pmotion;

namespace {

Matrix3d random_rotation(Rng& rng) {
  Eigen::Vector4d q;
  for (int i = 0; i < 4; ++i) q[i] = rng.normal();
  q.normalize();
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

}  // namespace

TEST_CASE("rotation: 6d encode/decode round trip") {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    Matrix3d r = random_rotation(rng);
    Matrix3d back = rot6d_decode(rot6d_encode(r));
    CHECK((back - r).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("rotation: 6d encode layout is first two columns") {
  Matrix3d r = rot_y(0.7);
  Vec6 v = rot6d_encode(r);
  CHECK(v[0] == doctest::Approx(r(0, 0)));
  CHECK(v[1] == doctest::Approx(r(1, 0)));
  CHECK(v[2] == doctest::Approx(r(2, 0)));
  CHECK(v[3] == doctest::Approx(r(0, 1)));
  CHECK(v[4] == doctest::Approx(r(1, 1)));
  CHECK(v[5] == doctest::Approx(r(2, 1)));
}

TEST_CASE("rotation: decode of noisy 6d is a proper rotation") {
  Rng rng(32);
  for (int i = 0; i < 100; ++i) {
    Vec6 v;
    for (int k = 0; k < 6; ++k) v[k] = rng.uniform_range(-2, 2);
    if (v.head<3>().norm() < 0.1) v[0] += 1.0;
    Matrix3d r = rot6d_decode(v);
    CHECK((r.transpose() * r - Matrix3d::Identity()).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("rotation: degenerate 6d inputs throw") {
  Vec6 zero = Vec6::Zero();
  CHECK_THROWS_AS(rot6d_decode(zero), Error);
  Vec6 collinear;
  collinear << 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(rot6d_decode(collinear), Error);
}

TEST_CASE("rotation: yaw extraction and purity") {
  for (double t : {-2.0, -0.5, 0.0, 0.3, 2.9}) {
    CHECK(yaw_of(rot_y(t)) == doctest::Approx(wrap_angle(t)).epsilon(1e-12));
    CHECK(yaw_purity_error(rot_y(t)) < 1e-12);
  }
  CHECK(yaw_purity_error(rot_x(0.3) * rot_y(0.5)) > 1e-3);
}

TEST_CASE("rotation: axis conventions") {
  // rot_y maps +z toward +x for positive angles.
  Vector3d v = rot_y(M_PI / 2) * Vector3d(0, 0, 1);
  CHECK(v.x() == doctest::Approx(1.0));
  CHECK(std::abs(v.y()) < 1e-12);
  CHECK(std::abs(v.z()) < 1e-12);
  // rot_z maps +x toward +y.
  Vector3d w = rot_z(M_PI / 2) * Vector3d(1, 0, 0);
  CHECK(w.y() == doctest::Approx(1.0));
  // rot_x maps +y toward +z.
  Vector3d u = rot_x(M_PI / 2) * Vector3d(0, 1, 0);
  CHECK(u.z() == doctest::Approx(1.0));
}

TEST_CASE("rotation: wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(3 * M_PI + 0.1) == doctest::Approx(-M_PI + 0.1));
  CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
  for (double t = -20; t < 20; t += 0.37) {
    double w = wrap_angle(t);
    CHECK(w > -M_PI - 1e-12);
    CHECK(w <= M_PI + 1e-12);
    CHECK(std::abs(std::sin(w) - std::sin(t)) < 1e-12);
    CHECK(std::abs(std::cos(w) - std::cos(t)) < 1e-12);
  }
}
