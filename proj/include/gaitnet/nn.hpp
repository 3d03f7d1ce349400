#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gaitnet::nn {

enum class HiddenAct : std::uint8_t { relu = 0, leaky_relu = 1 };
enum class OutputAct : std::uint8_t { linear = 0, sigmoid = 1 };

// Per-dimension affine normalization. Inputs are standardized as
// (x - mean) / scale; outputs are de-standardized as y * scale + mean.
struct Norm {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  static Norm identity(int dim);
};

struct Layer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out
};

struct Network {
  std::vector<Layer> layers;
  HiddenAct hidden_act = HiddenAct::relu;
  double leaky_slope = 0.01;
  OutputAct output_act = OutputAct::linear;
  bool frozen = false;
  Norm input_norm;
  Norm output_norm;

  int input_dim() const { return static_cast<int>(layers.front().w.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().w.rows()); }
  std::int64_t param_count() const;
};

// Uniform init in +-sqrt(6/(fan_in+fan_out)), zero biases; identical seed
// gives identical parameter bytes.
Network mlp_new(const std::vector<int>& layer_sizes, HiddenAct hidden, OutputAct output,
                std::uint64_t seed);

// Forward record needed by backward(); holds the normalized input and every
// pre-activation.
struct Trace {
  Eigen::MatrixXd normed_input;
  std::vector<Eigen::MatrixXd> pre;   // one per layer
  std::vector<Eigen::MatrixXd> post;  // activated outputs, last = before output denorm
};

// Batched forward; rows are samples. Pure function of (net, batch).
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& batch);
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& batch, Trace& trace);
// Single-sample path (used by rollout and small predictions).
Eigen::VectorXd forward_row(const Network& net, const Eigen::VectorXd& x);

struct Grads {
  std::vector<Layer> layers;
  static Grads zeros_like(const Network& net);
  void add_scaled(const Grads& other, double s);
};

// Exact reverse-mode gradients of the recorded forward pass. upstream is
// dL/d(output) including the output denormalization, n x out. Returns
// dL/d(batch input). param_grads may be null when only input gradients are
// needed (e.g. a frozen decoder).
Eigen::MatrixXd backward(const Network& net, const Trace& trace, const Eigen::MatrixXd& upstream,
                         Grads* param_grads);

struct AdamState {
  std::vector<Layer> m;
  std::vector<Layer> v;
  std::int64_t step_count = 0;
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(const Network& net, double learning_rate);
};

// Standard Adam with bias correction. Throws if the network is frozen,
// shapes mismatch, or any gradient is non-finite.
void adam_step(AdamState& state, Network& net, const Grads& grads);

// mu + exp(log_sigma) .* noise
Eigen::VectorXd reparam_sample(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma,
                               const Eigen::VectorXd& noise);

// KL(N(mu, diag(sigma^2)) || N(0, I)), sigma = exp(log_sigma)
double kl_diag_gaussian(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma);
void kl_diag_gaussian_grad(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma,
                           Eigen::VectorXd& d_mu, Eigen::VectorXd& d_log_sigma);

// BGNW weight file: magic, u32 version, architecture header, norm stats,
// little-endian 64-bit floats, row-major matrices.
inline constexpr std::uint32_t kWeightFormatVersion = 1;
void save_weights(const Network& net, const std::string& path, std::uint64_t schema_hash = 0);
struct LoadedNetwork {
  Network net;
  std::uint64_t schema_hash = 0;
};
LoadedNetwork load_weights(const std::string& path);

// Digest of the raw parameter bytes; freeze-integrity checks compare this.
std::uint64_t param_bytes_hash(const Network& net);

bool all_finite(const Network& net);

}  // namespace gaitnet::nn

namespace gaitnet {
class BinWriter;
class BinReader;
}

namespace gaitnet::nn {
// Streaming forms used by archive formats that embed several networks.
void write_network(BinWriter& w, const Network& net);
Network read_network(BinReader& r, const std::string& context);
}  // namespace gaitnet::nn
