#pragma once

#include <Eigen/Dense>

namespace gaitnet::gait {

using Vector6d = Eigen::Matrix<double, 6, 1>;

// 6D rotation code: the first two columns of the rotation matrix, stored
// column-major as (R00,R10,R20, R01,R11,R21).
Vector6d rot_encode(const Eigen::Matrix3d& r);

// Gram-Schmidt on the two stored columns, third column by cross product.
// Throws data_error on (near-)parallel or null columns.
Eigen::Matrix3d rot_decode(const Vector6d& q);

// d rot_decode: given dL/dR, accumulates dL/dq. Used by training losses that
// differentiate through the decode.
Vector6d rot_decode_grad(const Vector6d& q, const Eigen::Matrix3d& upstream);

// Frobenius norm of the difference of the decoded rotation matrices.
double d_rot(const Vector6d& a, const Vector6d& b);

// Geodesic angle between two rotations, in degrees.
double geodesic_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

Eigen::Matrix3d rot_x(double angle);
Eigen::Matrix3d rot_y(double angle);
Eigen::Matrix3d rot_z(double angle);

}  // namespace gaitnet::gait
