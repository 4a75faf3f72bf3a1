#pragma once

#include "pmotion/common.hpp"

namespace pmotion {

using Vec6 = Eigen::Matrix<double, 6, 1>;

// 6-value rotation code: the first two columns of the matrix,
// (r00, r10, r20, r01, r11, r21).
Vec6 rot6d_encode(const Matrix3d& r);

// Gram-Schmidt decode; third column from the cross product.
// Fails on a near-zero first column or near-collinear columns.
Matrix3d rot6d_decode(const Vec6& v);

Matrix3d rot_y(double theta);
Matrix3d rot_z(double theta);
Matrix3d rot_x(double theta);

// Yaw angle of a rotation about the vertical axis.
double yaw_of(const Matrix3d& r);

// Max abs deviation from a pure yaw rotation.
double yaw_purity_error(const Matrix3d& r);

// Wrap angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace pmotion
