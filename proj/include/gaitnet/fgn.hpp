#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gaitnet/dataset.hpp"
#include "gaitnet/gait.hpp"
#include "gaitnet/nn.hpp"
#include "gaitnet/schema.hpp"

namespace gaitnet {

struct FgnConfig {
  std::vector<int> hidden = {512, 512, 512};
  double learning_rate = 1e-5;  // paper default; desk configs override
  int batch = 4096;
  int epochs = 50;
  double w_h = 1.0;
  double w_v = 1.0;
  std::uint64_t seed = 1;
  double plateau_rel = 1e-4;  // early stop when relative improvement stays below
  int plateau_epochs = 5;
};

// (cos(phi/2), sin(phi/2)): injective over [0, 4pi), continuous at the seam,
// and distinguishes the two cycles.
Eigen::Vector2d phase_features(double phi);

// Input layout: [phase(2) | normalized anatomy | normalized gait condition].
nn::Network build_fgn(const FgnConfig& cfg, const schema::Schema& s);

Eigen::VectorXd fgn_input_row(const schema::Schema& s, const Eigen::VectorXd& anatomy_norm,
                              const Eigen::VectorXd& gait_norm, double phi);

struct FgnTrainResult {
  nn::Network net;
  std::vector<double> epoch_loss;  // mean per-pair regression loss
};

// Minibatch Adam over (tuple, frame) pairs; loss is the pose distance of the
// predicted frame against the stored one. Aborts with numeric_error on
// divergence.
FgnTrainResult train_fgn(const Dataset& ds, const FgnConfig& cfg, const schema::Schema& s);

// Regression loss (mean pose distance) over explicit (tuple, frame) pairs;
// the trainer reports exactly this quantity.
double fgn_loss_on_pairs(const nn::Network& net, const Dataset& ds, const schema::Schema& s,
                         const std::vector<std::pair<std::int64_t, int>>& pairs, double w_h,
                         double w_v);

// Evaluates the network at the 60 canonical phases; pure.
gait::GaitPattern rollout(const nn::Network& fgn, const schema::Schema& s,
                          const Eigen::VectorXd& anatomy, const Eigen::VectorXd& gait_cond);

void save_fgn(const nn::Network& net, const std::string& path, std::uint64_t schema_hash);
// Validates the stored schema hash and the input width against the schema.
nn::Network load_fgn(const std::string& path, const schema::Schema& s);

}  // namespace gaitnet
