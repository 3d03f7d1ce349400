#include "gaitnet/gait.hpp"

#include <cmath>

#include "gaitnet/errors.hpp"

namespace gaitnet::gait {

Pose::Pose(PoseLayout l, Eigen::VectorXd d) : layout(l), data(std::move(d)) {
  if (data.size() != layout.pose_dim())
    throw config_error("Pose: vector size " + std::to_string(data.size()) + " != pose dim " +
                       std::to_string(layout.pose_dim()));
}

GaitPattern::GaitPattern(PoseLayout l, Eigen::VectorXd d) : layout(l), data(std::move(d)) {
  if (data.size() != layout.gait_dim())
    throw config_error("GaitPattern: vector size " + std::to_string(data.size()) +
                       " != gait dim " + std::to_string(layout.gait_dim()));
}

Pose GaitPattern::frame(int k) const {
  if (k < 0 || k >= kFrames) throw config_error("GaitPattern::frame: index out of range");
  return Pose(layout, data.segment(k * layout.pose_dim(), layout.pose_dim()));
}

void GaitPattern::set_frame(int k, const Pose& p) {
  if (k < 0 || k >= kFrames) throw config_error("GaitPattern::set_frame: index out of range");
  data.segment(k * layout.pose_dim(), layout.pose_dim()) = p.data;
}

double d_pose(const Pose& a, const Pose& b, double w_h, double w_v) {
  if (a.layout.n_joints != b.layout.n_joints) throw config_error("d_pose: pose layout mismatch");
  double d = w_h * (a.h() - b.h()) * (a.h() - b.h()) + w_v * (a.v() - b.v()).squaredNorm();
  for (int j = 0; j < a.layout.n_joints; ++j) {
    const double dr = d_rot(a.joint(j), b.joint(j));
    d += dr * dr;
  }
  return d;
}

double d_pose_grad(const Pose& target, const Pose& pred, double w_h, double w_v,
                   Eigen::Ref<Eigen::VectorXd> grad) {
  if (target.layout.n_joints != pred.layout.n_joints)
    throw config_error("d_pose_grad: pose layout mismatch");
  if (grad.size() != pred.layout.pose_dim())
    throw config_error("d_pose_grad: gradient size mismatch");
  grad.setZero();
  double d = w_h * (pred.h() - target.h()) * (pred.h() - target.h()) +
             w_v * (pred.v() - target.v()).squaredNorm();
  grad[0] = 2.0 * w_h * (pred.h() - target.h());
  grad.segment<2>(1) = 2.0 * w_v * (pred.v() - target.v());
  for (int j = 0; j < pred.layout.n_joints; ++j) {
    const Vector6d qt = target.joint(j);
    const Vector6d qp = pred.joint(j);
    const Eigen::Matrix3d rt = rot_decode(qt);
    const Eigen::Matrix3d rp = rot_decode(qp);
    const Eigen::Matrix3d diff = rp - rt;
    d += diff.squaredNorm();
    grad.segment<6>(pred.layout.joint_offset(j)) = rot_decode_grad(qp, 2.0 * diff);
  }
  return d;
}

double d_gait(const GaitPattern& a, const GaitPattern& b, double w_h, double w_v) {
  if (a.layout.n_joints != b.layout.n_joints) throw config_error("d_gait: layout mismatch");
  double acc = 0.0;
  for (int k = 0; k < kFrames; ++k) acc += d_pose(a.frame(k), b.frame(k), w_h, w_v);
  return acc / kFrames;
}

std::vector<JointErrorStat> joint_angle_error_deg(const GaitPattern& a, const GaitPattern& b) {
  if (a.layout.n_joints != b.layout.n_joints)
    throw config_error("joint_angle_error_deg: layout mismatch");
  const int nj = a.layout.n_joints;
  std::vector<JointErrorStat> out(nj);
  for (int j = 0; j < nj; ++j) {
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < kFrames; ++k) {
      const double deg =
          geodesic_angle_deg(rot_decode(a.frame(k).joint(j)), rot_decode(b.frame(k).joint(j)));
      sum += deg;
      sum2 += deg * deg;
    }
    const double mean = sum / kFrames;
    out[j].mean = mean;
    out[j].variance = std::max(0.0, sum2 / kFrames - mean * mean);
  }
  return out;
}

Eigen::VectorXd normalize_condition(const Eigen::VectorXd& c, const Eigen::VectorXd& lo,
                                    const Eigen::VectorXd& hi) {
  if (c.size() != lo.size() || c.size() != hi.size())
    throw config_error("normalize_condition: size mismatch");
  Eigen::VectorXd out(c.size());
  for (int i = 0; i < c.size(); ++i) {
    const double range = hi[i] - lo[i];
    // collapsed ranges map to the midpoint
    out[i] = range > 0.0 ? (c[i] - lo[i]) / range : 0.5;
  }
  return out;
}

Eigen::VectorXd denormalize_condition(const Eigen::VectorXd& n, const Eigen::VectorXd& lo,
                                      const Eigen::VectorXd& hi) {
  if (n.size() != lo.size() || n.size() != hi.size())
    throw config_error("denormalize_condition: size mismatch");
  Eigen::VectorXd c = lo.array() + n.array() * (hi - lo).array();
  return c.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace gaitnet::gait
