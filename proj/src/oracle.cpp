#include "gaitnet/oracle.hpp"

#include <cmath>

#include "gaitnet/errors.hpp"

namespace gaitnet {

using gait::GaitPattern;
using gait::Pose;

Oracle::Oracle(schema::Schema s) : schema_(std::move(s)) {
  schema_.validate();
  layout_.n_joints = schema_.n_joints();
  per_channel_.resize(schema_.channels.size());
  for (const auto& inf : schema_.influence)
    per_channel_[inf.channel].emplace_back(inf.param, inf.coeff);
}

void Oracle::check_ranges(const Eigen::VectorXd& anatomy, const Eigen::VectorXd& gait_cond) const {
  if (anatomy.size() != schema_.anatomy_dim())
    throw config_error("oracle: anatomy dimension " + std::to_string(anatomy.size()) +
                       " != " + std::to_string(schema_.anatomy_dim()));
  if (gait_cond.size() != schema_.n_gait())
    throw config_error("oracle: gait condition dimension mismatch");
  for (int i = 0; i < schema_.n_params(); ++i) {
    const double v = i < schema_.anatomy_dim() ? anatomy[i] : gait_cond[i - schema_.anatomy_dim()];
    const auto& p = schema_.params[i];
    // tolerance covers float32 quantization of stored conditions
    const double tol = 1e-6 * std::max(1.0, p.max - p.min);
    if (v < p.min - tol || v > p.max + tol)
      throw data_error("oracle: parameter '" + p.name + "' = " + std::to_string(v) +
                       " outside [" + std::to_string(p.min) + ", " + std::to_string(p.max) + "]");
  }
}

double Oracle::channel_dev(int channel, const Eigen::VectorXd& full) const {
  double dev = 0.0;
  for (const auto& [param, coeff] : per_channel_[channel])
    dev += coeff * (schema_.params[param].ref - full[param]);
  return dev;
}

double Oracle::channel_angle(int channel, const Eigen::VectorXd& anatomy,
                             const Eigen::VectorXd& gait_cond, double phi) const {
  Eigen::VectorXd full(schema_.n_params());
  full << anatomy, gait_cond;
  const auto& ch = schema_.channels[channel];
  const double psi = std::fmod(phi, 2.0 * EIGEN_PI);
  const double stride = gait_cond[0];
  const double amp = 1.0 + ch.stride_gain * (stride - 1.0);
  const double asym =
      schema_.asym_eps * ch.asym_weight * std::sin(0.5 * phi + ch.asym_phase);
  return amp * (ch.base.eval(psi) + channel_dev(channel, full) * ch.shape.eval(psi)) + asym;
}

GaitPattern Oracle::simulate(const Eigen::VectorXd& anatomy,
                             const Eigen::VectorXd& gait_cond) const {
  check_ranges(anatomy, gait_cond);
  Eigen::VectorXd full(schema_.n_params());
  full << anatomy, gait_cond;

  const int nch = static_cast<int>(schema_.channels.size());
  Eigen::VectorXd dev(nch), amp(nch);
  const double stride = gait_cond[0];
  const double cadence = gait_cond[1];
  for (int c = 0; c < nch; ++c) {
    dev[c] = channel_dev(c, full);
    amp[c] = 1.0 + schema_.channels[c].stride_gain * (stride - 1.0);
  }

  const int il = schema_.find_param("scale_leg_l");
  const int ir = schema_.find_param("scale_leg_r");
  const double leg_avg = 0.5 * (full[il] + full[ir]);
  const int kl = schema_.find_channel("knee_flex_l");
  const int kr = schema_.find_channel("knee_flex_r");
  const double knee_dev = (kl >= 0 ? dev[kl] : 0.0) + (kr >= 0 ? dev[kr] : 0.0);
  const double speed = schema_.v_base * stride * cadence * leg_avg;

  GaitPattern m(layout_);
  Pose pose(layout_, Eigen::VectorXd::Zero(layout_.pose_dim()));
  for (int k = 0; k < gait::kFrames; ++k) {
    const double phi = gait::frame_phase(k);
    const double psi = std::fmod(phi, 2.0 * EIGEN_PI);

    pose.set_h(leg_avg * (schema_.h_base + schema_.h_amp * std::cos(2.0 * psi + schema_.h_phase)) -
               schema_.h_knee_dip * knee_dev);
    pose.set_v(Eigen::Vector2d(speed * (1.0 + schema_.v_amp * std::cos(2.0 * psi)),
                               schema_.v_lat * std::sin(psi)));

    for (int j = 0; j < layout_.n_joints; ++j) {
      double ax = 0.0, ay = 0.0, az = 0.0;
      for (int c = 0; c < nch; ++c) {
        const auto& ch = schema_.channels[c];
        if (ch.joint != j) continue;
        const double asym =
            schema_.asym_eps * ch.asym_weight * std::sin(0.5 * phi + ch.asym_phase);
        const double angle = amp[c] * (ch.base.eval(psi) + dev[c] * ch.shape.eval(psi)) + asym;
        if (ch.axis == 0)
          ax += angle;
        else if (ch.axis == 1)
          ay += angle;
        else
          az += angle;
      }
      const Eigen::Matrix3d r = gait::rot_x(ax) * gait::rot_y(ay) * gait::rot_z(az);
      pose.set_joint(j, gait::rot_encode(r));
    }
    m.set_frame(k, pose);
  }
  return m;
}

Eigen::VectorXd Oracle::redundant_pair(const Eigen::VectorXd& anatomy, int direction,
                                       double magnitude) const {
  if (direction < 0 || direction >= static_cast<int>(schema_.redundancy.size()))
    throw config_error("redundant_pair: no certified direction " + std::to_string(direction));
  const auto& r = schema_.redundancy[direction];
  Eigen::VectorXd out = anatomy;
  out[r.param_plus] += magnitude;
  out[r.param_minus] -= magnitude;
  for (int idx : {r.param_plus, r.param_minus}) {
    const auto& p = schema_.params[idx];
    if (out[idx] < p.min || out[idx] > p.max)
      throw data_error("redundant_pair: magnitude pushes '" + p.name + "' out of range");
  }
  return out;
}

double Oracle::channel_projection(int channel, const Eigen::VectorXd& anatomy,
                                  const Eigen::VectorXd& gait_cond) const {
  const auto& ch = schema_.channels[channel];
  double acc = 0.0;
  for (int k = 0; k < gait::kFrames; ++k) {
    const double phi = gait::frame_phase(k);
    const double psi = std::fmod(phi, 2.0 * EIGEN_PI);
    acc += channel_angle(channel, anatomy, gait_cond, phi) * ch.shape.eval(psi);
  }
  return acc / gait::kFrames;
}

double Oracle::lipschitz_bound() const {
  // Per channel: |d theta| <= amp_max * |A_cp| * range_p * shape_max per unit
  // normalized parameter change; a rotation 6D block moves at most sqrt(2)
  // per radian (two columns, each bounded by the angle). Root terms are
  // affine in the parameters with explicit coefficients.
  const double stride_range = schema_.params[schema_.gait_begin()].max -
                              schema_.params[schema_.gait_begin()].min;
  double total_sq = 0.0;
  std::vector<double> joint_rate(schema_.n_joints(), 0.0);
  for (std::size_t c = 0; c < schema_.channels.size(); ++c) {
    const auto& ch = schema_.channels[c];
    const double amp_max = 1.0 + std::abs(ch.stride_gain) * 0.5 * stride_range;
    double rate = 0.0;  // radians per unit normalized condition step
    for (const auto& [param, coeff] : per_channel_[c]) {
      const auto& p = schema_.params[param];
      rate += std::abs(coeff) * (p.max - p.min) * ch.shape.max_abs() * amp_max;
    }
    // stride also modulates the whole channel amplitude
    double dev_max = 0.0;
    for (const auto& [param, coeff] : per_channel_[c]) {
      const auto& p = schema_.params[param];
      dev_max += std::abs(coeff) * std::max(p.ref - p.min, p.max - p.ref);
    }
    rate += std::abs(ch.stride_gain) * stride_range *
            (ch.base.max_abs() + dev_max * ch.shape.max_abs());
    joint_rate[ch.joint] += rate;
  }
  for (int j = 0; j < schema_.n_joints(); ++j)
    total_sq += 2.0 * joint_rate[j] * joint_rate[j];  // sqrt(2) per radian, squared

  // h: leg scales and knee dip
  const auto& leg = schema_.params[schema_.find_param("scale_leg_l")];
  double h_rate = 0.5 * (leg.max - leg.min) * (schema_.h_base + std::abs(schema_.h_amp)) * 2.0;
  double knee_rate = 0.0;
  for (int c : {schema_.find_channel("knee_flex_l"), schema_.find_channel("knee_flex_r")})
    if (c >= 0)
      for (const auto& [param, coeff] : per_channel_[c])
        knee_rate += std::abs(coeff) * (schema_.params[param].max - schema_.params[param].min);
  h_rate += schema_.h_knee_dip * knee_rate;
  total_sq += h_rate * h_rate;

  // v: product of stride, cadence, leg scale
  double v_rate = 0.0;
  const double vmax = schema_.v_base * 1.3 * 1.3 * 1.2 * (1.0 + std::abs(schema_.v_amp));
  v_rate = 3.0 * vmax;  // conservative: each factor contributes at most its range
  total_sq += v_rate * v_rate + schema_.v_lat * schema_.v_lat;

  return std::sqrt(total_sq * gait::kFrames) * 1.5;  // slack factor
}

std::vector<Oracle::Preset> Oracle::pathology_presets() const {
  std::vector<Preset> out;
  const Eigen::VectorXd ref = schema_.anatomy_ref();
  const Eigen::VectorXd gait_ref = schema_.param_ref().tail(schema_.n_gait());
  auto add = [&](const std::string& name,
                 const std::vector<std::pair<std::string, double>>& tweaks) {
    Preset p;
    p.name = name;
    p.anatomy = ref;
    p.gait_cond = gait_ref;
    for (const auto& [pname, value] : tweaks) {
      const int idx = schema_.find_param(pname);
      if (idx < 0 || idx >= schema_.anatomy_dim())
        throw config_error("pathology preset references unknown anatomy parameter " + pname);
      p.anatomy[idx] = value;
    }
    out.push_back(std::move(p));
  };
  add("normal", {});
  add("foot_drop", {{"ankle_dorsiflexor_l_weakness", 0.5}});
  add("equinus", {{"ankle_plantarflexor_l_contracture", 0.5}});
  add("stiff_knee", {{"knee_extensor_l_contracture", 0.5}});
  add("crouch", {{"knee_extensor_l_weakness", 0.5}, {"knee_extensor_r_weakness", 0.5}});
  add("trendelenburg", {{"hip_abductor_l_weakness", 0.5}});
  add("waddling", {{"hip_abductor_l_weakness", 0.5}, {"hip_abductor_r_weakness", 0.5}});
  return out;
}

}  // namespace gaitnet
