#include <doctest.h>

#include <cstring>

#include "gaitnet/errors.hpp"
#include "gaitnet/nn.hpp"
#include "gaitnet/parallel.hpp"
#include "gaitnet/rng.hpp"
#include "helpers.hpp"

using namespace gaitnet;
using namespace gaitnet::nn;

namespace {

Network random_net(const std::vector<int>& sizes, HiddenAct h, OutputAct o, std::uint64_t seed) {
  Network net = mlp_new(sizes, h, o, seed);
  // non-trivial normalization so its gradients are exercised too
  Rng rng(derive_seed(seed, 77));
  for (int i = 0; i < net.input_dim(); ++i) {
    net.input_norm.mean[i] = rng.uniform(-0.5, 0.5);
    net.input_norm.scale[i] = rng.uniform(0.5, 2.0);
  }
  for (int i = 0; i < net.output_dim(); ++i) {
    net.output_norm.mean[i] = rng.uniform(-0.5, 0.5);
    net.output_norm.scale[i] = rng.uniform(0.5, 2.0);
  }
  return net;
}

// flattens all parameters, runs f, restores: used for finite differences
double loss_at(Network& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
  return (forward(net, x).array() * c.array()).sum();
}

}  // namespace

TEST_CASE("mlp_new shapes and determinism") {
  const Network net = mlp_new({3, 512, 512, 512, 7}, HiddenAct::relu, OutputAct::linear, 1);
  REQUIRE(net.layers.size() == 4);
  CHECK(net.layers[0].w.rows() == 512);
  CHECK(net.layers[0].w.cols() == 3);
  CHECK(net.layers[1].w.rows() == 512);
  CHECK(net.layers[1].w.cols() == 512);
  CHECK(net.layers[2].w.rows() == 512);
  CHECK(net.layers[2].w.cols() == 512);
  CHECK(net.layers[3].w.rows() == 7);
  CHECK(net.layers[3].w.cols() == 512);
  for (const auto& l : net.layers) CHECK(l.b.isZero());

  const Network tiny = mlp_new({2, 2}, HiddenAct::relu, OutputAct::linear, 0);
  CHECK(tiny.layers.size() == 1);
  CHECK(tiny.layers[0].w.rows() == 2);
  CHECK(tiny.layers[0].w.cols() == 2);

  const Network a = mlp_new({4, 8, 3}, HiddenAct::leaky_relu, OutputAct::sigmoid, 42);
  const Network b = mlp_new({4, 8, 3}, HiddenAct::leaky_relu, OutputAct::sigmoid, 42);
  CHECK(param_bytes_hash(a) == param_bytes_hash(b));
  CHECK(std::memcmp(a.layers[0].w.data(), b.layers[0].w.data(),
                    sizeof(double) * a.layers[0].w.size()) == 0);
  const Network c = mlp_new({4, 8, 3}, HiddenAct::leaky_relu, OutputAct::sigmoid, 43);
  CHECK(param_bytes_hash(a) != param_bytes_hash(c));

  CHECK_THROWS_AS(mlp_new({5}, HiddenAct::relu, OutputAct::linear, 0), config_error);
  CHECK_THROWS_AS(mlp_new({5, 0, 3}, HiddenAct::relu, OutputAct::linear, 0), config_error);
}

TEST_CASE("forward basics") {
  Network net = mlp_new({3, 4, 2}, HiddenAct::relu, OutputAct::linear, 7);
  for (auto& l : net.layers) l.w.setZero();
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
  CHECK(forward(net, x).isZero());

  net.output_act = OutputAct::sigmoid;
  const Eigen::MatrixXd y = forward(net, x);
  CHECK(y.rows() == 5);
  CHECK(y.cols() == 2);
  CHECK((y.array() == 0.5).all());

  Network one = mlp_new({1, 1}, HiddenAct::relu, OutputAct::linear, 0);
  one.layers[0].w(0, 0) = 2.0;
  one.layers[0].b[0] = 1.0;
  Eigen::VectorXd in(1);
  in << 3.0;
  CHECK(forward_row(one, in)[0] == 7.0);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Random(2, 4);
  CHECK_THROWS_AS(forward(net, bad), config_error);
}

TEST_CASE("backward matches central finite differences") {
  struct Combo {
    HiddenAct h;
    OutputAct o;
  };
  const Combo combos[] = {{HiddenAct::relu, OutputAct::linear},
                          {HiddenAct::relu, OutputAct::sigmoid},
                          {HiddenAct::leaky_relu, OutputAct::linear},
                          {HiddenAct::leaky_relu, OutputAct::sigmoid}};
  int combo_idx = 0;
  for (const auto& combo : combos) {
    Network net = random_net({4, 8, 3}, combo.h, combo.o, 100 + combo_idx);
    Rng rng(900 + combo_idx);
    Eigen::MatrixXd x(6, 4), c(6, 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    for (int i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-1, 1);

    Trace trace;
    forward(net, x, trace);
    Grads grads;
    const Eigen::MatrixXd input_grad = backward(net, trace, c, &grads);

    // parameter gradients
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      for (int r = 0; r < net.layers[l].w.rows(); ++r)
        for (int col = 0; col < net.layers[l].w.cols(); ++col) {
          const double orig = net.layers[l].w(r, col);
          net.layers[l].w(r, col) = orig + 1e-4;
          const double hi = loss_at(net, x, c);
          net.layers[l].w(r, col) = orig - 1e-4;
          const double lo = loss_at(net, x, c);
          net.layers[l].w(r, col) = orig;
          CHECK(testutil::rel_err(grads.layers[l].w(r, col), (hi - lo) / 2e-4) < 1e-4);
        }
      for (int r = 0; r < net.layers[l].b.size(); ++r) {
        const double orig = net.layers[l].b[r];
        net.layers[l].b[r] = orig + 1e-4;
        const double hi = loss_at(net, x, c);
        net.layers[l].b[r] = orig - 1e-4;
        const double lo = loss_at(net, x, c);
        net.layers[l].b[r] = orig;
        CHECK(testutil::rel_err(grads.layers[l].b[r], (hi - lo) / 2e-4) < 1e-4);
      }
    }
    // input gradients
    for (int r = 0; r < 2; ++r)
      for (int col = 0; col < x.cols(); ++col) {
        const double orig = x(r, col);
        x(r, col) = orig + 1e-4;
        const double hi = loss_at(net, x, c);
        x(r, col) = orig - 1e-4;
        const double lo = loss_at(net, x, c);
        x(r, col) = orig;
        CHECK(testutil::rel_err(input_grad(r, col), (hi - lo) / 2e-4) < 1e-4);
      }
    ++combo_idx;
  }
}

TEST_CASE("backward edge cases") {
  Network net = random_net({3, 5, 2}, HiddenAct::relu, OutputAct::linear, 5);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
  Trace trace;
  forward(net, x, trace);

  Grads grads;
  const Eigen::MatrixXd zero_in = backward(net, trace, Eigen::MatrixXd::Zero(4, 2), &grads);
  CHECK(zero_in.isZero());
  for (const auto& l : grads.layers) {
    CHECK(l.w.isZero());
    CHECK(l.b.isZero());
  }

  Trace empty;
  CHECK_THROWS_AS(backward(net, empty, Eigen::MatrixXd::Zero(4, 2), &grads), config_error);
  CHECK_THROWS_AS(backward(net, trace, Eigen::MatrixXd::Zero(4, 3), &grads), config_error);

  // frozen network still reports gradients, optimizer refuses it
  net.frozen = true;
  Grads fg;
  const Eigen::MatrixXd in_grad = backward(net, trace, Eigen::MatrixXd::Ones(4, 2), &fg);
  CHECK(in_grad.cwiseAbs().maxCoeff() > 0.0);
  AdamState st = AdamState::init(net, 0.1);
  CHECK_THROWS_AS(adam_step(st, net, fg), config_error);
}

TEST_CASE("adam first step magnitude and invariants") {
  Network net = mlp_new({1, 1}, HiddenAct::relu, OutputAct::linear, 0);
  net.layers[0].w(0, 0) = 0.0;
  AdamState st = AdamState::init(net, 0.1);
  Grads g = Grads::zeros_like(net);
  g.layers[0].w(0, 0) = 1.0;
  adam_step(st, net, g);
  CHECK(st.step_count == 1);
  // bias-corrected first step: lr * 1 / (1 + eps)
  CHECK(net.layers[0].w(0, 0) == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));

  // zero gradient with zero moments leaves parameters unchanged
  Network net2 = mlp_new({2, 3, 1}, HiddenAct::relu, OutputAct::linear, 3);
  const std::uint64_t before = param_bytes_hash(net2);
  AdamState st2 = AdamState::init(net2, 1e-3);
  adam_step(st2, net2, Grads::zeros_like(net2));
  CHECK(param_bytes_hash(net2) == before);
  CHECK(st2.step_count == 1);

  // identical runs from identical state
  Network a = mlp_new({3, 4, 2}, HiddenAct::relu, OutputAct::linear, 9);
  Network b = mlp_new({3, 4, 2}, HiddenAct::relu, OutputAct::linear, 9);
  AdamState sa = AdamState::init(a, 1e-2);
  AdamState sb = AdamState::init(b, 1e-2);
  Rng rng(4);
  for (int step = 0; step < 5; ++step) {
    Grads g2 = Grads::zeros_like(a);
    for (auto& l : g2.layers)
      for (int i = 0; i < l.w.size(); ++i) l.w.data()[i] = rng.uniform(-1, 1);
    adam_step(sa, a, g2);
    adam_step(sb, b, g2);
  }
  CHECK(param_bytes_hash(a) == param_bytes_hash(b));

  // shape mismatch and non-finite gradients
  Grads bad = Grads::zeros_like(a);
  bad.layers[0].w.resize(2, 2);
  CHECK_THROWS_AS(adam_step(sa, a, bad), config_error);
  Grads nan_g = Grads::zeros_like(a);
  nan_g.layers[0].w(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(sa, a, nan_g), numeric_error);
}

TEST_CASE("reparameterization and KL") {
  Eigen::VectorXd mu(3), ls(3), noise(3);
  mu << 0.3, -1.0, 2.0;
  ls << 0.0, 0.5, -1.0;
  noise.setZero();
  CHECK((reparam_sample(mu, ls, noise) - mu).norm() == 0.0);

  Eigen::VectorXd eps(3);
  eps << 0.1, -0.2, 0.3;
  CHECK((reparam_sample(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), eps) - eps).norm() ==
        0.0);

  // Monte-Carlo mean approaches mu
  Rng rng(11);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(3);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z(3);
    for (int d = 0; d < 3; ++d) z[d] = rng.normal();
    acc += reparam_sample(mu, ls, z);
  }
  acc /= n;
  for (int d = 0; d < 3; ++d) {
    const double sigma = std::exp(ls[d]);
    CHECK(std::abs(acc[d] - mu[d]) < 3.0 * sigma / std::sqrt(static_cast<double>(n)));
  }

  CHECK(kl_diag_gaussian(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)) == 0.0);
  Eigen::VectorXd m2(2), l2(2);
  m2 << 1.0, 0.0;
  l2.setZero();
  CHECK(kl_diag_gaussian(m2, l2) == doctest::Approx(0.5).epsilon(1e-15));

  // quadrature oracle in 1D: integrate p log(p/q) on a wide grid
  Rng qr(21);
  for (int trial = 0; trial < 5; ++trial) {
    const double m = qr.uniform(-2, 2);
    const double logs = qr.uniform(-1, 1);
    const double s = std::exp(logs);
    auto p = [&](double x) {
      return std::exp(-0.5 * (x - m) * (x - m) / (s * s)) / (s * std::sqrt(2 * EIGEN_PI));
    };
    auto q = [&](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * EIGEN_PI); };
    const int grid = 20001;
    const double lo = -14, hi = 14;
    const double h = (hi - lo) / (grid - 1);
    double integral = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double x = lo + i * h;
      const double w = (i == 0 || i == grid - 1) ? 0.5 : 1.0;
      const double px = p(x);
      if (px > 1e-300) integral += w * px * std::log(px / q(x));
    }
    integral *= h;
    Eigen::VectorXd mm(1), ll(1);
    mm << m;
    ll << logs;
    CHECK(std::abs(kl_diag_gaussian(mm, ll) - integral) < 1e-3);
    CHECK(kl_diag_gaussian(mm, ll) >= 0.0);
  }

  // gradient of the KL term matches finite differences
  Eigen::VectorXd dmu, dls;
  kl_diag_gaussian_grad(mu, ls, dmu, dls);
  const Eigen::VectorXd fd_mu = testutil::fd_gradient(
      [&](const Eigen::VectorXd& v) { return kl_diag_gaussian(v, ls); }, mu);
  const Eigen::VectorXd fd_ls = testutil::fd_gradient(
      [&](const Eigen::VectorXd& v) { return kl_diag_gaussian(mu, v); }, ls);
  for (int d = 0; d < 3; ++d) {
    CHECK((testutil::rel_err(dmu[d], fd_mu[d]) < 1e-4 || std::abs(dmu[d] - fd_mu[d]) < 1e-6));
    CHECK((testutil::rel_err(dls[d], fd_ls[d]) < 1e-4 || std::abs(dls[d] - fd_ls[d]) < 1e-6));
  }
}

TEST_CASE("weight file round trip and error paths") {
  testutil::TempDir tmp("nn_io");
  Network net = random_net({5, 7, 4}, HiddenAct::leaky_relu, OutputAct::sigmoid, 31);
  net.frozen = true;
  const std::string path = tmp.file("w.bgnw");
  save_weights(net, path, 0xabcdefULL);

  const LoadedNetwork loaded = load_weights(path);
  CHECK(loaded.schema_hash == 0xabcdefULL);
  CHECK(loaded.net.frozen);
  CHECK(loaded.net.hidden_act == HiddenAct::leaky_relu);
  CHECK(param_bytes_hash(loaded.net) == param_bytes_hash(net));

  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
  const Eigen::MatrixXd y0 = forward(net, x);
  const Eigen::MatrixXd y1 = forward(loaded.net, x);
  CHECK(std::memcmp(y0.data(), y1.data(), sizeof(double) * y0.size()) == 0);

  // a second save must be byte-identical
  const std::string path2 = tmp.file("w2.bgnw");
  save_weights(loaded.net, path2, 0xabcdefULL);
  CHECK(testutil::slurp(path) == testutil::slurp(path2));

  // truncation
  {
    const std::string all = testutil::slurp(path);
    std::ofstream out(tmp.file("trunc.bgnw"), std::ios::binary);
    out.write(all.data(), static_cast<std::streamsize>(all.size() / 2));
  }
  CHECK_THROWS_AS(load_weights(tmp.file("trunc.bgnw")), data_error);

  // version mismatch names both versions
  {
    std::string all = testutil::slurp(path);
    all[4] = 9;  // version byte
    std::ofstream out(tmp.file("ver.bgnw"), std::ios::binary);
    out.write(all.data(), static_cast<std::streamsize>(all.size()));
  }
  try {
    load_weights(tmp.file("ver.bgnw"));
    CHECK(false);
  } catch (const data_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("9") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }

  // wrong magic
  {
    std::ofstream out(tmp.file("junk.bgnw"), std::ios::binary);
    out << "JUNKJUNKJUNK";
  }
  CHECK_THROWS_AS(load_weights(tmp.file("junk.bgnw")), data_error);
}

TEST_CASE("thread count does not change results") {
  Network net = random_net({6, 32, 4}, HiddenAct::relu, OutputAct::linear, 55);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(600, 6);
  Eigen::MatrixXd up = Eigen::MatrixXd::Random(600, 4);

  set_max_threads(1);
  Trace t1;
  const Eigen::MatrixXd y1 = forward(net, x, t1);
  Grads g1;
  const Eigen::MatrixXd i1 = backward(net, t1, up, &g1);

  set_max_threads(2);
  Trace t2;
  const Eigen::MatrixXd y2 = forward(net, x, t2);
  Grads g2;
  const Eigen::MatrixXd i2 = backward(net, t2, up, &g2);
  set_max_threads(1);

  CHECK(std::memcmp(y1.data(), y2.data(), sizeof(double) * y1.size()) == 0);
  CHECK(std::memcmp(i1.data(), i2.data(), sizeof(double) * i1.size()) == 0);
  for (std::size_t l = 0; l < g1.layers.size(); ++l)
    CHECK(std::memcmp(g1.layers[l].w.data(), g2.layers[l].w.data(),
                      sizeof(double) * g1.layers[l].w.size()) == 0);
}
