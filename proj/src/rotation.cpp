#include "gaitnet/rotation.hpp"

#include <cmath>

#include "gaitnet/errors.hpp"

namespace gaitnet::gait {

namespace {
constexpr double kDegenerate = 1e-9;
}

Vector6d rot_encode(const Eigen::Matrix3d& r) {
  Vector6d q;
  q << r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1);
  return q;
}

Eigen::Matrix3d rot_decode(const Vector6d& q) {
  const Eigen::Vector3d a1 = q.head<3>();
  const Eigen::Vector3d a2 = q.tail<3>();
  const double n1 = a1.norm();
  if (n1 < kDegenerate) throw data_error("rot_decode: first column is (near-)null");
  const Eigen::Vector3d b1 = a1 / n1;
  const Eigen::Vector3d u2 = a2 - b1.dot(a2) * b1;
  const double n2 = u2.norm();
  if (n2 < kDegenerate * std::max(1.0, a2.norm()))
    throw data_error("rot_decode: columns are (near-)parallel");
  const Eigen::Vector3d b2 = u2 / n2;
  Eigen::Matrix3d r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

Vector6d rot_decode_grad(const Vector6d& q, const Eigen::Matrix3d& upstream) {
  const Eigen::Vector3d a1 = q.head<3>();
  const Eigen::Vector3d a2 = q.tail<3>();
  const double n1 = a1.norm();
  if (n1 < kDegenerate) throw data_error("rot_decode_grad: first column is (near-)null");
  const Eigen::Vector3d b1 = a1 / n1;
  const double s = b1.dot(a2);
  const Eigen::Vector3d u2 = a2 - s * b1;
  const double n2 = u2.norm();
  if (n2 < kDegenerate * std::max(1.0, a2.norm()))
    throw data_error("rot_decode_grad: columns are (near-)parallel");
  const Eigen::Vector3d b2 = u2 / n2;

  const Eigen::Vector3d g1 = upstream.col(0);
  const Eigen::Vector3d g2 = upstream.col(1);
  const Eigen::Vector3d g3 = upstream.col(2);

  // b3 = b1 x b2 contributes to both b1 and b2
  Eigen::Vector3d db1 = g1 + b2.cross(g3);
  Eigen::Vector3d db2 = g2 + g3.cross(b1);

  // b2 = u2/|u2|
  Eigen::Vector3d du = (db2 - b2 * b2.dot(db2)) / n2;
  // u2 = a2 - (b1.a2) b1
  Eigen::Vector3d da2 = du - b1 * b1.dot(du);
  db1 += -a2 * b1.dot(du) - s * du;
  // b1 = a1/|a1|
  const Eigen::Vector3d da1 = (db1 - b1 * b1.dot(db1)) / n1;

  Vector6d dq;
  dq << da1, da2;
  return dq;
}

double d_rot(const Vector6d& a, const Vector6d& b) {
  return (rot_decode(a) - rot_decode(b)).norm();
}

double geodesic_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double tr = (a * b.transpose()).trace();
  const double c = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / EIGEN_PI;
}

Eigen::Matrix3d rot_x(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Eigen::Matrix3d rot_y(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Eigen::Matrix3d r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Eigen::Matrix3d rot_z(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Eigen::Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

}  // namespace gaitnet::gait
