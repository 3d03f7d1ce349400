#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "gaitnet/rotation.hpp"

namespace gaitnet::gait {

inline constexpr int kFrames = 60;          // samples per two gait cycles
inline constexpr double kPhaseSpan = 4.0 * EIGEN_PI;

inline double frame_phase(int k) { return kPhaseSpan * k / kFrames; }

// Pose vector layout: [h, v_fwd, v_lat, q_0 .. q_{J-1}] with each q in the
// 6D rotation code. h is the pelvis height, v the planar root velocity.
struct PoseLayout {
  int n_joints = 9;
  int pose_dim() const { return 3 + 6 * n_joints; }
  int gait_dim() const { return kFrames * pose_dim(); }
  int joint_offset(int j) const { return 3 + 6 * j; }
};

struct Pose {
  PoseLayout layout;
  Eigen::VectorXd data;  // pose_dim

  Pose() = default;
  Pose(PoseLayout l, Eigen::VectorXd d);

  double h() const { return data[0]; }
  Eigen::Vector2d v() const { return data.segment<2>(1); }
  Vector6d joint(int j) const { return data.segment<6>(layout.joint_offset(j)); }
  void set_h(double h) { data[0] = h; }
  void set_v(const Eigen::Vector2d& v) { data.segment<2>(1) = v; }
  void set_joint(int j, const Vector6d& q) { data.segment<6>(layout.joint_offset(j)) = q; }
};

// 60 phase-aligned poses spanning two gait cycles; phase grid 4*pi*k/60.
struct GaitPattern {
  PoseLayout layout;
  Eigen::VectorXd data;  // kFrames * pose_dim, frame-major

  GaitPattern() = default;
  explicit GaitPattern(PoseLayout l) : layout(l), data(Eigen::VectorXd::Zero(l.gait_dim())) {}
  GaitPattern(PoseLayout l, Eigen::VectorXd d);

  Pose frame(int k) const;
  void set_frame(int k, const Pose& p);
  Eigen::VectorXd frame_vector(int k) const {
    return data.segment(k * layout.pose_dim(), layout.pose_dim());
  }
  const Eigen::VectorXd& flatten() const { return data; }
  static GaitPattern from_flat(PoseLayout l, const Eigen::VectorXd& flat) {
    return GaitPattern(l, flat);
  }
};

// Eq.-style pose distance: w_h|h-h'|^2 + w_v|v-v'|^2 + sum_j D_rot(q_j,q_j')^2
double d_pose(const Pose& a, const Pose& b, double w_h = 1.0, double w_v = 1.0);

// d_pose plus its gradient with respect to the second (predicted) pose vector.
double d_pose_grad(const Pose& target, const Pose& pred, double w_h, double w_v,
                   Eigen::Ref<Eigen::VectorXd> grad_pred);

// Frame-mean of d_pose over the 60 aligned frames.
double d_gait(const GaitPattern& a, const GaitPattern& b, double w_h = 1.0, double w_v = 1.0);

struct JointErrorStat {
  double mean = 0.0;
  double variance = 0.0;
};

// Per-joint geodesic angle of R*R'^T in degrees; mean and (population)
// variance over the 60 frames.
std::vector<JointErrorStat> joint_angle_error_deg(const GaitPattern& a, const GaitPattern& b);

// Affine map of each parameter onto [0,1] given per-dimension [min,max].
// denormalize clamps to the range.
Eigen::VectorXd normalize_condition(const Eigen::VectorXd& c, const Eigen::VectorXd& lo,
                                    const Eigen::VectorXd& hi);
Eigen::VectorXd denormalize_condition(const Eigen::VectorXd& n, const Eigen::VectorXd& lo,
                                      const Eigen::VectorXd& hi);

}  // namespace gaitnet::gait
