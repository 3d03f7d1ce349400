#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gaitnet/gait.hpp"
#include "gaitnet/schema.hpp"

namespace gaitnet {

// Deterministic synthetic anatomy->gait simulator. Joint angles follow
//   theta_ch(phi) = amp_ch(stride) * (base_ch(psi) + dev_ch * shape_ch(psi))
//                   + asym_ch(phi)
// with psi = phi mod 2pi, dev_ch the influence-weighted sum of parameter
// deviations from reference, and asym a small period-4pi term that makes the
// two cycles distinguishable. Root height dips with knee-flexion deviation;
// root speed scales with stride * cadence * leg scale.
class Oracle {
 public:
  explicit Oracle(schema::Schema s);

  const schema::Schema& schema() const { return schema_; }
  gait::PoseLayout pose_layout() const { return layout_; }

  // anatomy: skeleton block + muscle block; gait_cond: (stride, cadence).
  // Throws data_error when any parameter is outside its valid range.
  gait::GaitPattern simulate(const Eigen::VectorXd& anatomy,
                             const Eigen::VectorXd& gait_cond) const;

  // Moves the anatomy along certified redundancy direction `direction` by
  // `magnitude`: +magnitude on param_plus, -magnitude on param_minus. The
  // simulated gait is unchanged. Throws data_error if the result leaves the
  // valid range.
  Eigen::VectorXd redundant_pair(const Eigen::VectorXd& anatomy, int direction,
                                 double magnitude) const;

  // per-parameter [min,max] table used by samplers and normalizers
  const std::vector<schema::Param>& valid_ranges() const { return schema_.params; }

  // Internal structure probes used by the invariant checks.
  double channel_angle(int channel, const Eigen::VectorXd& anatomy,
                       const Eigen::VectorXd& gait_cond, double phi) const;
  // Mean projection of the channel trajectory onto its shape function over
  // the 60-frame grid; linear (hence monotone) in every influencing
  // parameter.
  double channel_projection(int channel, const Eigen::VectorXd& anatomy,
                            const Eigen::VectorXd& gait_cond) const;

  // Documented Lipschitz constant: |simulate(c) - simulate(c')|_2 <=
  // L * |c - c'|_2 over normalized full conditions (anatomy + gait).
  double lipschitz_bound() const;

  // Named pathology-analog presets (anatomy, gait condition) pairs.
  struct Preset {
    std::string name;
    Eigen::VectorXd anatomy;
    Eigen::VectorXd gait_cond;
  };
  std::vector<Preset> pathology_presets() const;

 private:
  double channel_dev(int channel, const Eigen::VectorXd& full) const;
  void check_ranges(const Eigen::VectorXd& anatomy, const Eigen::VectorXd& gait_cond) const;

  schema::Schema schema_;
  gait::PoseLayout layout_;
  // influence entries grouped per channel, in schema order
  std::vector<std::vector<std::pair<int, double>>> per_channel_;
};

}  // namespace gaitnet
