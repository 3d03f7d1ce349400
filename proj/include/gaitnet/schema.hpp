#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace gaitnet::schema {

enum class ParamGroup : std::uint8_t { skeleton = 0, muscle = 1, gait = 2 };

struct Param {
  std::string name;
  ParamGroup group;
  double min = 0.0;
  double max = 1.0;
  double ref = 0.5;  // reference (healthy) value; 1.0 for scales/muscles, 0 for torsions
};

// constant + three harmonics of the single-cycle phase psi
struct Harmonic {
  double c0 = 0.0;
  double cos1 = 0.0, sin1 = 0.0;
  double cos2 = 0.0, sin2 = 0.0;
  double cos3 = 0.0, sin3 = 0.0;

  double eval(double psi) const {
    return c0 + cos1 * std::cos(psi) + sin1 * std::sin(psi) + cos2 * std::cos(2 * psi) +
           sin2 * std::sin(2 * psi) + cos3 * std::cos(3 * psi) + sin3 * std::sin(3 * psi);
  }
  double max_abs() const {
    return std::abs(c0) + std::abs(cos1) + std::abs(sin1) + std::abs(cos2) + std::abs(sin2) +
           std::abs(cos3) + std::abs(sin3);
  }
};

// One rotational degree of freedom of one joint. The simulated angle is
//   amp(stride) * (base(psi) + dev * shape(psi)) + asym(phi)
// with dev the accumulated influence of the condition deviations.
struct Channel {
  std::string name;
  int joint = 0;
  int axis = 0;  // 0=x, 1=y, 2=z
  Harmonic base;
  Harmonic shape;
  double stride_gain = 0.0;   // amp = 1 + stride_gain*(stride-1)
  double asym_weight = 0.0;   // cycle-to-cycle asymmetry coupling
  double asym_phase = 0.0;
};

struct Influence {
  int param = 0;
  int channel = 0;
  double coeff = 0.0;
};

// Certified null direction of the gait response: +1 on param_plus, -1 on
// param_minus. Valid because both parameters carry identical influence
// columns.
struct Redundancy {
  std::string name;
  int param_plus = 0;
  int param_minus = 0;
};

struct Schema {
  std::string name = "desk";
  std::uint32_t version = 1;

  std::vector<std::string> joints;
  std::vector<Param> params;  // ordered: skeleton block, muscle block, gait block
  std::vector<Channel> channels;
  std::vector<Influence> influence;
  std::vector<Redundancy> redundancy;
  std::vector<int> inert_params;  // muscle params with all-zero influence columns

  // root trajectory constants
  double h_base = 0.92, h_amp = 0.015, h_phase = 0.3, h_knee_dip = 0.10;
  double v_base = 1.25, v_amp = 0.08, v_lat = 0.06;
  double asym_eps = 0.01;

  int n_params() const { return static_cast<int>(params.size()); }
  int n_joints() const { return static_cast<int>(joints.size()); }
  int n_skeleton() const;
  int n_muscle() const;
  int n_gait() const;
  int skeleton_begin() const { return 0; }
  int muscle_begin() const { return n_skeleton(); }
  int gait_begin() const { return n_skeleton() + n_muscle(); }
  int anatomy_dim() const { return n_skeleton() + n_muscle(); }

  int find_param(const std::string& name) const;  // -1 if absent
  int find_joint(const std::string& name) const;
  int find_channel(const std::string& name) const;

  Eigen::VectorXd param_min() const;
  Eigen::VectorXd param_max() const;
  Eigen::VectorXd param_ref() const;
  // slices over the anatomy (skeleton+muscle) block
  Eigen::VectorXd anatomy_min() const;
  Eigen::VectorXd anatomy_max() const;
  Eigen::VectorXd anatomy_ref() const;
  Eigen::VectorXd muscle_min() const;
  Eigen::VectorXd muscle_max() const;
  Eigen::VectorXd gait_min() const;
  Eigen::VectorXd gait_max() const;

  void validate() const;  // throws config_error on inconsistency
};

// The built-in desk-scale configuration: 9 joints, 13 channels, 6 skeleton +
// 32 muscle + 2 gait parameters, 3 certified redundancy directions, 2 inert
// muscle parameters.
Schema desk_default();

std::string to_json(const Schema& s);
Schema from_json(const std::string& text);
void save(const Schema& s, const std::string& path);
Schema load(const std::string& path);

// FNV-1a over the canonical JSON serialization; recorded in dataset and
// weight files for compatibility checks.
std::uint64_t hash(const Schema& s);

}  // namespace gaitnet::schema
