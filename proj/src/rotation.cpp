#include "pmotion/rotation.hpp"

#include <cmath>

namespace pmotion {

Vec6 rot6d_encode(const Matrix3d& r) {
  Vec6 v;
  v << r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1);
  return v;
}

Matrix3d rot6d_decode(const Vec6& v) {
  Vector3d a1 = v.head<3>();
  Vector3d a2 = v.tail<3>();
  double n1 = a1.norm();
  require(n1 > 1e-8, "rot6d_decode: first column near zero");
  Vector3d b1 = a1 / n1;
  Vector3d u2 = a2 - b1.dot(a2) * b1;
  double n2 = u2.norm();
  require(n2 > 1e-8, "rot6d_decode: columns near collinear");
  Vector3d b2 = u2 / n2;
  Vector3d b3 = b1.cross(b2);
  Matrix3d r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b3;
  return r;
}

Matrix3d rot_y(double t) {
  double c = std::cos(t), s = std::sin(t);
  Matrix3d r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Matrix3d rot_z(double t) {
  double c = std::cos(t), s = std::sin(t);
  Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Matrix3d rot_x(double t) {
  double c = std::cos(t), s = std::sin(t);
  Matrix3d r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

double yaw_of(const Matrix3d& r) { return std::atan2(r(0, 2), r(2, 2)); }

double yaw_purity_error(const Matrix3d& r) {
  return (r - rot_y(yaw_of(r))).cwiseAbs().maxCoeff();
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace pmotion
