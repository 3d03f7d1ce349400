#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gaitnet/dataset.hpp"
#include "gaitnet/fgn.hpp"
#include "gaitnet/gait.hpp"
#include "gaitnet/nn.hpp"

namespace gaitnet {

// log-sigma clamp applied to the encoder variance head
inline constexpr double kLogSigmaMin = -6.0;
inline constexpr double kLogSigmaMax = 2.0;

struct BgnConfig {
  std::vector<int> encoder_hidden = {256, 256, 256};
  std::vector<int> decoder_hidden = {256, 256, 256};
  int latent = 32;
  double w_g = 1.0;
  double w_kl = 1e-3;
  Eigen::VectorXd w_m;  // per-muscle regularization; empty = uniform value below
  double w_m_uniform = 1e-3;
  double w_h = 1.0;
  double w_v = 1.0;
  int batch = 2048;             // paper default; desk configs override
  double learning_rate = 1e-5;  // paper default
  int epochs = 10;
  std::uint64_t seed = 2;
  std::vector<int> muscle_mask;  // indices into the muscle block; empty = all
};

// Conditional VAE: encoder (M, gait cond, skeleton) -> (mu, log sigma),
// pre-decoder z -> normalized muscle conditions for the masked subset.
struct Bgn {
  nn::Network encoder;
  nn::Network pre_decoder;
  BgnConfig cfg;
  std::vector<int> mask;  // resolved muscle indices
  std::uint64_t schema_hash = 0;
};

struct PosteriorSample {
  Eigen::VectorXd z;
  Eigen::VectorXd muscle;  // full muscle block, physical units, unmasked = reference
};

Bgn build_bgn(const BgnConfig& cfg, const schema::Schema& s);

// Deterministic; log sigma clamped.
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const Bgn& bgn, const gait::GaitPattern& m,
                                                   const Eigen::VectorXd& gait_cond,
                                                   const Eigen::VectorXd& skeleton);

// Sigmoid outputs denormalized to schema ranges; unmasked muscles at
// reference value.
Eigen::VectorXd decode_muscle(const Bgn& bgn, const Eigen::VectorXd& z, const schema::Schema& s);

struct BgnEpochStats {
  double total = 0.0;
  double reconstruction = 0.0;  // D_g term, unweighted
  double kl = 0.0;              // KL term, unweighted
  double regularization = 0.0;  // muscle deviation term, weighted sum
};

struct BgnTrainResult {
  std::vector<BgnEpochStats> history;
};

// Trains encoder + pre-decoder through the frozen forward network: encode,
// reparameterize, decode muscle, assemble anatomy with ground-truth skeleton,
// roll the full 60-phase pattern through fgn, apply the gait/KL/regularization
// loss. fgn parameters are bit-identical afterwards.
BgnTrainResult train_bgn(Bgn& bgn, const Dataset& ds, const nn::Network& fgn,
                         const schema::Schema& s);

// One loss evaluation on explicit tuple indices with a fixed latent draw
// (noise from `seed`); returns the decomposed terms. Used by consistency
// tests and expert selection diagnostics.
BgnEpochStats bgn_loss_on_tuples(const Bgn& bgn, const Dataset& ds, const nn::Network& fgn,
                                 const schema::Schema& s,
                                 const std::vector<std::int64_t>& tuples, std::uint64_t seed);

std::vector<PosteriorSample> posterior_samples(const Bgn& bgn, const schema::Schema& s,
                                               const gait::GaitPattern& m,
                                               const Eigen::VectorXd& gait_cond,
                                               const Eigen::VectorXd& skeleton, int n,
                                               std::uint64_t seed);

// Posterior-mean muscle prediction (z = mu).
Eigen::VectorXd posterior_mean_muscle(const Bgn& bgn, const schema::Schema& s,
                                      const gait::GaitPattern& m,
                                      const Eigen::VectorXd& gait_cond,
                                      const Eigen::VectorXd& skeleton);

// Expert 0 masks to knee+ankle muscles; experts 1-2 cover the full muscle
// set with different loss weights.
std::vector<BgnConfig> default_expert_configs(const schema::Schema& s, std::uint64_t seed);

std::vector<Bgn> train_experts(const Dataset& ds, const nn::Network& fgn,
                               const std::vector<BgnConfig>& cfgs, const schema::Schema& s,
                               std::vector<BgnTrainResult>* histories = nullptr);

// Picks the expert whose posterior-mean reconstruction through fgn is
// closest to the observed gait; ties break to the lowest index.
std::pair<int, Eigen::VectorXd> select_expert(const std::vector<Bgn>& experts,
                                              const nn::Network& fgn, const schema::Schema& s,
                                              const gait::GaitPattern& m,
                                              const Eigen::VectorXd& gait_cond,
                                              const Eigen::VectorXd& skeleton);

// Expert bundle: every (encoder, pre-decoder) pair plus configs and the
// schema hash in one archive.
inline constexpr std::uint32_t kBundleFormatVersion = 1;
void save_bundle(const std::vector<Bgn>& experts, const std::string& path,
                 std::uint64_t schema_hash);
std::vector<Bgn> load_bundle(const std::string& path, const schema::Schema& s);

// Knee+ankle muscle subset of the desk schema (indices into the muscle block).
std::vector<int> knee_ankle_mask(const schema::Schema& s);

}  // namespace gaitnet
