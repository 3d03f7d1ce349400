#include "gaitnet/nn.hpp"

#include <cmath>
#include <cstring>

#include "gaitnet/errors.hpp"
#include "gaitnet/io.hpp"
#include "gaitnet/parallel.hpp"
#include "gaitnet/rng.hpp"

namespace gaitnet::nn {

namespace {

void check_norm(const Norm& n, int dim, const char* which) {
  if (n.mean.size() != dim || n.scale.size() != dim)
    throw config_error(std::string(which) + " normalization size mismatch");
  if ((n.scale.array() <= 0.0).any())
    throw config_error(std::string(which) + " normalization scale must be positive");
}

void apply_hidden(const Network& net, Eigen::MatrixXd& m) {
  if (net.hidden_act == HiddenAct::relu) {
    m = m.array().max(0.0);
  } else {
    const double s = net.leaky_slope;
    m = m.array().max(m.array() * s);
  }
}

void hidden_deriv_inplace(const Network& net, const Eigen::MatrixXd& pre, Eigen::MatrixXd& g) {
  if (net.hidden_act == HiddenAct::relu) {
    g.array() *= (pre.array() > 0.0).cast<double>();
  } else {
    const double s = net.leaky_slope;
    g.array() *= pre.array().unaryExpr([s](double z) { return z > 0.0 ? 1.0 : s; });
  }
}

}  // namespace

Norm Norm::identity(int dim) {
  Norm n;
  n.mean = Eigen::VectorXd::Zero(dim);
  n.scale = Eigen::VectorXd::Ones(dim);
  return n;
}

std::int64_t Network::param_count() const {
  std::int64_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

Network mlp_new(const std::vector<int>& sizes, HiddenAct hidden, OutputAct output,
                std::uint64_t seed) {
  if (sizes.size() < 2) throw config_error("mlp_new: need at least input and output sizes");
  for (int s : sizes)
    if (s < 1) throw config_error("mlp_new: layer sizes must be >= 1");

  Network net;
  net.hidden_act = hidden;
  net.output_act = output;
  Rng rng(derive_seed(seed, 0x6d6c705fULL));
  net.layers.resize(sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    auto& layer = net.layers[l];
    layer.w.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) layer.w(r, c) = rng.uniform(-limit, limit);
    layer.b = Eigen::VectorXd::Zero(fan_out);
  }
  net.input_norm = Norm::identity(sizes.front());
  net.output_norm = Norm::identity(sizes.back());
  return net;
}

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& batch, Trace& trace) {
  if (net.layers.empty()) throw config_error("forward: empty network");
  if (batch.cols() != net.input_dim())
    throw config_error("forward: batch width " + std::to_string(batch.cols()) +
                       " != network input " + std::to_string(net.input_dim()));
  check_norm(net.input_norm, net.input_dim(), "input");
  check_norm(net.output_norm, net.output_dim(), "output");

  trace.normed_input = (batch.rowwise() - net.input_norm.mean.transpose()).array().rowwise() /
                       net.input_norm.scale.transpose().array();
  trace.pre.resize(net.layers.size());
  trace.post.resize(net.layers.size());

  const Eigen::MatrixXd* x = &trace.normed_input;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    matmul_rows(*x, net.layers[l].w.transpose(), trace.pre[l]);
    trace.pre[l].rowwise() += net.layers[l].b.transpose();
    trace.post[l] = trace.pre[l];
    if (l + 1 < net.layers.size()) {
      apply_hidden(net, trace.post[l]);
    } else if (net.output_act == OutputAct::sigmoid) {
      trace.post[l] = (1.0 / (1.0 + (-trace.post[l].array()).exp())).matrix();
    }
    x = &trace.post[l];
  }
  Eigen::MatrixXd out = (trace.post.back().array().rowwise() *
                         net.output_norm.scale.transpose().array())
                            .matrix();
  out.rowwise() += net.output_norm.mean.transpose();
  return out;
}

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& batch) {
  Trace t;
  return forward(net, batch, t);
}

Eigen::VectorXd forward_row(const Network& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim()) throw config_error("forward_row: input size mismatch");
  Eigen::VectorXd h = (x - net.input_norm.mean).cwiseQuotient(net.input_norm.scale);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Eigen::VectorXd z = net.layers[l].w * h + net.layers[l].b;
    if (l + 1 < net.layers.size()) {
      if (net.hidden_act == HiddenAct::relu)
        z = z.array().max(0.0);
      else
        z = z.array().max(z.array() * net.leaky_slope);
    } else if (net.output_act == OutputAct::sigmoid) {
      z = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    }
    h = std::move(z);
  }
  return h.cwiseProduct(net.output_norm.scale) + net.output_norm.mean;
}

Grads Grads::zeros_like(const Network& net) {
  Grads g;
  g.layers.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    g.layers[l].w = Eigen::MatrixXd::Zero(net.layers[l].w.rows(), net.layers[l].w.cols());
    g.layers[l].b = Eigen::VectorXd::Zero(net.layers[l].b.size());
  }
  return g;
}

void Grads::add_scaled(const Grads& other, double s) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].w += s * other.layers[l].w;
    layers[l].b += s * other.layers[l].b;
  }
}

Eigen::MatrixXd backward(const Network& net, const Trace& trace, const Eigen::MatrixXd& upstream,
                         Grads* param_grads) {
  if (trace.pre.size() != net.layers.size() || trace.normed_input.rows() == 0)
    throw config_error("backward: no recorded forward pass for this network");
  if (upstream.rows() != trace.normed_input.rows() || upstream.cols() != net.output_dim())
    throw config_error("backward: upstream gradient shape mismatch");

  // through output denormalization
  Eigen::MatrixXd g = (upstream.array().rowwise() * net.output_norm.scale.transpose().array()).matrix();
  if (net.output_act == OutputAct::sigmoid) {
    const auto& y = trace.post.back().array();
    g.array() *= y * (1.0 - y);
  }

  if (param_grads && param_grads->layers.size() != net.layers.size())
    *param_grads = Grads::zeros_like(net);

  Eigen::MatrixXd gx;
  for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
    const Eigen::MatrixXd& x = (l == 0) ? trace.normed_input : trace.post[l - 1];
    if (param_grads) {
      auto& pg = param_grads->layers[l];
      // block over output rows: contraction order over the batch stays fixed
      pg.w.resize(net.layers[l].w.rows(), net.layers[l].w.cols());
      Eigen::MatrixXd gt = g.transpose();
      matmul_rows(gt, x, pg.w);
      pg.b = g.colwise().sum().transpose();
    }
    matmul_rows(g, net.layers[l].w, gx);
    if (l > 0) {
      g = std::move(gx);
      hidden_deriv_inplace(net, trace.pre[l - 1], g);
    }
  }
  // through input standardization
  gx.array().rowwise() /= net.input_norm.scale.transpose().array();
  return gx;
}

AdamState AdamState::init(const Network& net, double learning_rate) {
  AdamState st;
  st.learning_rate = learning_rate;
  st.m.resize(net.layers.size());
  st.v.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    st.m[l].w = Eigen::MatrixXd::Zero(net.layers[l].w.rows(), net.layers[l].w.cols());
    st.m[l].b = Eigen::VectorXd::Zero(net.layers[l].b.size());
    st.v[l] = st.m[l];
  }
  return st;
}

void adam_step(AdamState& st, Network& net, const Grads& grads) {
  if (net.frozen) throw config_error("adam_step: network is frozen");
  if (st.m.size() != net.layers.size() || grads.layers.size() != net.layers.size())
    throw config_error("adam_step: state/gradient layer count mismatch");

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (grads.layers[l].w.rows() != net.layers[l].w.rows() ||
        grads.layers[l].w.cols() != net.layers[l].w.cols() ||
        grads.layers[l].b.size() != net.layers[l].b.size())
      throw config_error("adam_step: gradient shape mismatch at layer " + std::to_string(l));
    if (!grads.layers[l].w.allFinite() || !grads.layers[l].b.allFinite())
      throw numeric_error("adam_step: non-finite gradient at layer " + std::to_string(l) +
                          " (step " + std::to_string(st.step_count + 1) + ")");
  }

  st.step_count += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
      m = st.beta1 * m + (1.0 - st.beta1) * g;
      v = (st.beta2 * v.array() + (1.0 - st.beta2) * g.array().square()).matrix();
      p.array() -=
          st.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + st.epsilon);
    };
    update(net.layers[l].w, st.m[l].w, st.v[l].w, grads.layers[l].w);
    update(net.layers[l].b, st.m[l].b, st.v[l].b, grads.layers[l].b);
  }
}

Eigen::VectorXd reparam_sample(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma,
                               const Eigen::VectorXd& noise) {
  if (mu.size() != log_sigma.size() || mu.size() != noise.size())
    throw config_error("reparam_sample: size mismatch");
  return mu.array() + log_sigma.array().exp() * noise.array();
}

double kl_diag_gaussian(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma) {
  if (mu.size() != log_sigma.size()) throw config_error("kl_diag_gaussian: size mismatch");
  const auto s2 = (2.0 * log_sigma.array()).exp();
  return 0.5 * (mu.array().square() + s2 - 1.0 - 2.0 * log_sigma.array()).sum();
}

void kl_diag_gaussian_grad(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma,
                           Eigen::VectorXd& d_mu, Eigen::VectorXd& d_log_sigma) {
  d_mu = mu;
  d_log_sigma = ((2.0 * log_sigma.array()).exp() - 1.0).matrix();
}

void write_network(BinWriter& w, const Network& net) {
  w.u8(static_cast<std::uint8_t>(net.hidden_act));
  w.u8(static_cast<std::uint8_t>(net.output_act));
  w.u8(net.frozen ? 1 : 0);
  w.u8(0);
  w.f64(net.leaky_slope);
  w.u32(static_cast<std::uint32_t>(net.layers.size() + 1));
  w.u32(static_cast<std::uint32_t>(net.input_dim()));
  for (const auto& l : net.layers) w.u32(static_cast<std::uint32_t>(l.w.rows()));
  w.f64s(net.input_norm.mean.data(), net.input_norm.mean.size());
  w.f64s(net.input_norm.scale.data(), net.input_norm.scale.size());
  w.f64s(net.output_norm.mean.data(), net.output_norm.mean.size());
  w.f64s(net.output_norm.scale.data(), net.output_norm.scale.size());
  for (const auto& l : net.layers) {
    // row-major on disk
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wr = l.w;
    w.f64s(wr.data(), wr.size());
    w.f64s(l.b.data(), l.b.size());
  }
}

Network read_network(BinReader& r, const std::string& context) {
  Network net;
  net.hidden_act = static_cast<HiddenAct>(r.u8());
  net.output_act = static_cast<OutputAct>(r.u8());
  net.frozen = r.u8() != 0;
  r.u8();
  net.leaky_slope = r.f64();
  const std::uint32_t n_sizes = r.u32();
  if (n_sizes < 2 || n_sizes > 64) throw data_error(context + ": implausible layer count");
  std::vector<int> sizes(n_sizes);
  for (auto& s : sizes) {
    s = static_cast<int>(r.u32());
    if (s < 1 || s > (1 << 24)) throw data_error(context + ": implausible layer size");
  }
  auto read_vec = [&](int n) {
    Eigen::VectorXd v(n);
    r.f64s(v.data(), static_cast<std::size_t>(n));
    return v;
  };
  net.input_norm.mean = read_vec(sizes.front());
  net.input_norm.scale = read_vec(sizes.front());
  net.output_norm.mean = read_vec(sizes.back());
  net.output_norm.scale = read_vec(sizes.back());
  net.layers.resize(n_sizes - 1);
  for (std::uint32_t l = 0; l + 1 < n_sizes; ++l) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wr(sizes[l + 1], sizes[l]);
    r.f64s(wr.data(), wr.size());
    net.layers[l].w = wr;
    net.layers[l].b = read_vec(sizes[l + 1]);
  }
  if (!all_finite(net)) throw data_error(context + ": non-finite parameters");
  return net;
}

void save_weights(const Network& net, const std::string& path, std::uint64_t schema_hash) {
  BinWriter w(path);
  w.magic("BGNW");
  w.u32(kWeightFormatVersion);
  w.u64(schema_hash);
  write_network(w, net);
  w.close();
}

LoadedNetwork load_weights(const std::string& path) {
  BinReader r(path);
  r.expect_magic("BGNW", "BGNW weight");
  const std::uint32_t version = r.u32();
  if (version != kWeightFormatVersion)
    throw data_error(path + ": weight file version " + std::to_string(version) +
                     " unsupported (supported: " + std::to_string(kWeightFormatVersion) + ")");
  LoadedNetwork out;
  out.schema_hash = r.u64();
  out.net = read_network(r, path);
  r.expect_eof();
  return out;
}

std::uint64_t param_bytes_hash(const Network& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : net.layers) {
    h = fnv1a(l.w.data(), sizeof(double) * l.w.size(), h);
    h = fnv1a(l.b.data(), sizeof(double) * l.b.size(), h);
  }
  return h;
}

bool all_finite(const Network& net) {
  for (const auto& l : net.layers)
    if (!l.w.allFinite() || !l.b.allFinite()) return false;
  return true;
}

}  // namespace gaitnet::nn

namespace gaitnet {

namespace {
int g_threads = 1;
}

int max_threads() { return g_threads; }
void set_max_threads(int n) { g_threads = n < 1 ? 1 : n; }

}  // namespace gaitnet
