#include "gaitnet/bgn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gaitnet/errors.hpp"
#include "gaitnet/io.hpp"
#include "gaitnet/parallel.hpp"
#include "gaitnet/rng.hpp"

namespace gaitnet {

using gait::GaitPattern;
using gait::Pose;

namespace {

// tuples processed per decoder-rollout chunk; fixed so results are
// independent of the thread count and trace memory stays bounded
constexpr std::int64_t kRolloutChunk = 32;

int encoder_input_dim(const schema::Schema& s) {
  return gait::PoseLayout{s.n_joints()}.gait_dim() + s.n_gait() + s.n_skeleton();
}

std::vector<int> resolve_mask(const BgnConfig& cfg, const schema::Schema& s) {
  std::vector<int> mask = cfg.muscle_mask;
  if (mask.empty()) {
    mask.resize(s.n_muscle());
    for (int i = 0; i < s.n_muscle(); ++i) mask[i] = i;
  }
  for (int m : mask)
    if (m < 0 || m >= s.n_muscle())
      throw config_error("bgn: muscle mask index " + std::to_string(m) + " out of range");
  return mask;
}

Eigen::VectorXd resolve_wm(const BgnConfig& cfg, std::size_t mask_size) {
  if (cfg.w_m.size() == 0)
    return Eigen::VectorXd::Constant(static_cast<int>(mask_size), cfg.w_m_uniform);
  if (static_cast<std::size_t>(cfg.w_m.size()) != mask_size)
    throw config_error("bgn: per-muscle weight vector does not match mask size");
  return cfg.w_m;
}

void fill_encoder_row(Eigen::MatrixXd& dst, std::int64_t row, const Eigen::VectorXd& m,
                      const Eigen::VectorXd& gait_cond, const Eigen::VectorXd& skeleton) {
  dst.row(row).head(m.size()) = m.transpose();
  dst.row(row).segment(m.size(), gait_cond.size()) = gait_cond.transpose();
  dst.row(row).tail(skeleton.size()) = skeleton.transpose();
}

nn::Norm encoder_input_norm(const Dataset& ds, const schema::Schema& s) {
  const int gait_dim = ds.gait_dim;
  const int dim = encoder_input_dim(s);
  const std::int64_t n = ds.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(dim);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int d = 0; d < gait_dim; ++d) {
      const double v = ds.gaits[i * gait_dim + d];
      sum[d] += v;
      sum2[d] += v * v;
    }
    for (int d = 0; d < s.n_gait(); ++d) {
      const double v = ds.cond[i * ds.cond_dim + s.gait_begin() + d];
      sum[gait_dim + d] += v;
      sum2[gait_dim + d] += v * v;
    }
    for (int d = 0; d < s.n_skeleton(); ++d) {
      const double v = ds.cond[i * ds.cond_dim + d];
      sum[gait_dim + s.n_gait() + d] += v;
      sum2[gait_dim + s.n_gait() + d] += v * v;
    }
  }
  nn::Norm norm;
  norm.mean = sum / static_cast<double>(n);
  norm.scale = ((sum2 / static_cast<double>(n)) - norm.mean.cwiseProduct(norm.mean))
                   .cwiseMax(0.0)
                   .cwiseSqrt()
                   .cwiseMax(1e-6);
  return norm;
}

struct SchemaSlices {
  Eigen::VectorXd lo, hi;            // full condition ranges
  Eigen::VectorXd mask_lo, mask_hi;  // masked muscle ranges
  Eigen::VectorXd ref_norm;          // normalized reference condition
};

SchemaSlices make_slices(const schema::Schema& s, const std::vector<int>& mask) {
  SchemaSlices sl;
  sl.lo = s.param_min();
  sl.hi = s.param_max();
  sl.ref_norm = gait::normalize_condition(s.param_ref(), sl.lo, sl.hi);
  sl.mask_lo.resize(static_cast<int>(mask.size()));
  sl.mask_hi.resize(static_cast<int>(mask.size()));
  for (std::size_t m = 0; m < mask.size(); ++m) {
    sl.mask_lo[static_cast<int>(m)] = sl.lo[s.muscle_begin() + mask[m]];
    sl.mask_hi[static_cast<int>(m)] = sl.hi[s.muscle_begin() + mask[m]];
  }
  return sl;
}

Eigen::MatrixXd normalized_conditions(const Dataset& ds, const schema::Schema& s,
                                      const SchemaSlices& sl) {
  const std::int64_t n = ds.size();
  Eigen::MatrixXd out(n, ds.cond_dim);
  for (std::int64_t i = 0; i < n; ++i)
    out.row(i) = gait::normalize_condition(ds.condition(i), sl.lo, sl.hi).transpose();
  return out;
}

struct StepWorkspace {
  Eigen::MatrixXd enc_in, enc_out, mu, log_sigma_raw, log_sigma, sigma, noise, z, y;
  nn::Trace enc_trace, dec_trace, fgn_trace;
  Eigen::MatrixXd fgn_in, fgn_out, fgn_upstream, fgn_in_grad;
  Eigen::MatrixXd d_y, d_z, d_mu, d_log_sigma, enc_upstream;
  nn::Grads enc_grads, dec_grads;
};

struct StepStats {
  double recon = 0.0;  // mean D_g, unweighted
  double kl = 0.0;     // mean KL, unweighted
  double reg = 0.0;    // mean weighted muscle regularization
  double total(const BgnConfig& cfg) const {
    return cfg.w_g * recon + cfg.w_kl * kl + reg;
  }
};

// One full c-VAE pass over tuples[begin, end). When learn is set, fills the
// encoder/decoder gradients (mean-scaled) by backpropagating through the
// frozen forward network.
StepStats bgn_step(const Bgn& bgn, const Dataset& ds, const nn::Network& fgn,
                   const schema::Schema& s, const SchemaSlices& sl,
                   const Eigen::MatrixXd& cond_norm, const std::vector<std::int64_t>& tuples,
                   std::int64_t begin, std::int64_t end, Rng& noise_rng, bool learn,
                   StepWorkspace& ws) {
  const std::int64_t b = end - begin;
  const int z_dim = bgn.cfg.latent;
  const int n_mask = static_cast<int>(bgn.mask.size());
  const gait::PoseLayout layout{s.n_joints()};
  const int pose_dim = layout.pose_dim();
  const int muscle_off = 2 + s.n_skeleton();  // fgn input: [phase | skeleton | muscle | gait]

  // encoder forward
  ws.enc_in.resize(b, bgn.encoder.input_dim());
  parallel_blocks(b, [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t r = r0; r < r1; ++r) {
      const std::int64_t t = tuples[begin + r];
      fill_encoder_row(ws.enc_in, r, ds.gait(t), ds.gait_cond(t, s.anatomy_dim()),
                       ds.anatomy(t, s.anatomy_dim()).head(s.n_skeleton()));
    }
  });
  ws.enc_out = nn::forward(bgn.encoder, ws.enc_in, ws.enc_trace);
  ws.mu = ws.enc_out.leftCols(z_dim);
  ws.log_sigma_raw = ws.enc_out.rightCols(z_dim);
  ws.log_sigma = ws.log_sigma_raw.cwiseMax(kLogSigmaMin).cwiseMin(kLogSigmaMax);
  ws.sigma = ws.log_sigma.array().exp();

  // reparameterized draw; row-major order so the stream is reproducible
  ws.noise.resize(b, z_dim);
  for (std::int64_t r = 0; r < b; ++r)
    for (int d = 0; d < z_dim; ++d) ws.noise(r, d) = noise_rng.normal();
  ws.z = ws.mu + ws.sigma.cwiseProduct(ws.noise);

  // pre-decoder forward: normalized muscle predictions in (0,1)
  ws.y = nn::forward(bgn.pre_decoder, ws.z, ws.dec_trace);

  // reconstruction through the frozen forward network, fixed-size chunks
  ws.d_y = Eigen::MatrixXd::Zero(b, n_mask);
  const double recon_scale = bgn.cfg.w_g / (gait::kFrames * static_cast<double>(b));
  double recon_sum = 0.0;
  for (std::int64_t c0 = 0; c0 < b; c0 += kRolloutChunk) {
    const std::int64_t c1 = std::min(b, c0 + kRolloutChunk);
    const std::int64_t nt = c1 - c0;
    const std::int64_t rows = nt * gait::kFrames;

    ws.fgn_in.resize(rows, fgn.input_dim());
    parallel_blocks(nt, [&](std::int64_t i0, std::int64_t i1) {
      for (std::int64_t i = i0; i < i1; ++i) {
        const std::int64_t t = tuples[begin + c0 + i];
        Eigen::RowVectorXd cond_row(s.n_params());
        cond_row = sl.ref_norm.transpose();
        cond_row.head(s.n_skeleton()) = cond_norm.row(t).head(s.n_skeleton());
        cond_row.tail(s.n_gait()) = cond_norm.row(t).tail(s.n_gait());
        for (int m = 0; m < n_mask; ++m)
          cond_row[s.n_skeleton() + bgn.mask[m]] = ws.y(c0 + i, m);
        for (int k = 0; k < gait::kFrames; ++k) {
          const std::int64_t row = i * gait::kFrames + k;
          ws.fgn_in.row(row).head<2>() = phase_features(gait::frame_phase(k)).transpose();
          ws.fgn_in.row(row).tail(s.n_params()) = cond_row;
        }
      }
    });
    ws.fgn_out = nn::forward(fgn, ws.fgn_in, ws.fgn_trace);

    // pose distance and upstream gradient per frame
    ws.fgn_upstream.resize(rows, pose_dim);
    Eigen::VectorXd chunk_recon(nt);
    parallel_blocks(nt, [&](std::int64_t i0, std::int64_t i1) {
      Eigen::VectorXd grad(pose_dim);
      Eigen::VectorXd target(pose_dim);
      for (std::int64_t i = i0; i < i1; ++i) {
        const std::int64_t t = tuples[begin + c0 + i];
        double acc = 0.0;
        for (int k = 0; k < gait::kFrames; ++k) {
          const std::int64_t row = i * gait::kFrames + k;
          for (int d = 0; d < pose_dim; ++d)
            target[d] = ds.gaits[t * ds.gait_dim + k * pose_dim + d];
          const Pose target_pose(layout, target);
          const Pose pred_pose(layout, ws.fgn_out.row(row).transpose());
          if (learn) {
            acc += gait::d_pose_grad(target_pose, pred_pose, bgn.cfg.w_h, bgn.cfg.w_v, grad);
            ws.fgn_upstream.row(row) = recon_scale * grad.transpose();
          } else {
            acc += gait::d_pose(target_pose, pred_pose, bgn.cfg.w_h, bgn.cfg.w_v);
          }
        }
        chunk_recon[i] = acc / gait::kFrames;
      }
    });
    recon_sum += chunk_recon.sum();

    if (learn) {
      // input gradients only; the decoder is frozen
      ws.fgn_in_grad = nn::backward(fgn, ws.fgn_trace, ws.fgn_upstream, nullptr);
      parallel_blocks(nt, [&](std::int64_t i0, std::int64_t i1) {
        for (std::int64_t i = i0; i < i1; ++i)
          for (int k = 0; k < gait::kFrames; ++k) {
            const std::int64_t row = i * gait::kFrames + k;
            for (int m = 0; m < n_mask; ++m)
              ws.d_y(c0 + i, m) += ws.fgn_in_grad(row, muscle_off + bgn.mask[m]);
          }
      });
    }
  }

  StepStats stats;
  stats.recon = recon_sum / static_cast<double>(b);

  // muscle regularization toward the reference condition, physical units
  Eigen::ArrayXXd dev(b, n_mask);
  stats.reg = 0.0;
  for (int m = 0; m < n_mask; ++m) {
    dev.col(m) = 1.0 - (sl.mask_lo[m] + ws.y.col(m).array() * (sl.mask_hi[m] - sl.mask_lo[m]));
    stats.reg += bgn.cfg.w_m[m] * dev.col(m).square().sum();
  }
  stats.reg /= static_cast<double>(b);

  // KL against the standard normal prior
  stats.kl = 0.5 *
             (ws.mu.array().square() + ws.sigma.array().square() - 1.0 -
              2.0 * ws.log_sigma.array())
                 .sum() /
             static_cast<double>(b);

  if (!learn) return stats;

  // d/dy of the regularization term
  for (int m = 0; m < n_mask; ++m) {
    const double coeff =
        -2.0 / static_cast<double>(b) * bgn.cfg.w_m[m] * (sl.mask_hi[m] - sl.mask_lo[m]);
    ws.d_y.col(m) += coeff * dev.col(m).matrix();
  }

  // pre-decoder backward
  ws.d_z = nn::backward(bgn.pre_decoder, ws.dec_trace, ws.d_y, &ws.dec_grads);

  // reparameterization + KL gradients
  const double kl_scale = bgn.cfg.w_kl / static_cast<double>(b);
  ws.d_mu = ws.d_z + kl_scale * ws.mu;
  ws.d_log_sigma =
      ws.d_z.cwiseProduct(ws.noise).cwiseProduct(ws.sigma) +
      kl_scale * (ws.sigma.array().square() - 1.0).matrix();
  // clamp: zero gradient outside the active range
  ws.d_log_sigma.array() *=
      ((ws.log_sigma_raw.array() > kLogSigmaMin) && (ws.log_sigma_raw.array() < kLogSigmaMax))
          .cast<double>();

  ws.enc_upstream.resize(b, 2 * z_dim);
  ws.enc_upstream.leftCols(z_dim) = ws.d_mu;
  ws.enc_upstream.rightCols(z_dim) = ws.d_log_sigma;
  nn::backward(bgn.encoder, ws.enc_trace, ws.enc_upstream, &ws.enc_grads);
  return stats;
}

}  // namespace

std::vector<int> knee_ankle_mask(const schema::Schema& s) {
  std::vector<int> mask;
  for (int m = 0; m < s.n_muscle(); ++m) {
    const std::string& name = s.params[s.muscle_begin() + m].name;
    if (name.rfind("knee_", 0) == 0 || name.rfind("ankle_", 0) == 0) mask.push_back(m);
  }
  return mask;
}

Bgn build_bgn(const BgnConfig& cfg, const schema::Schema& s) {
  if (cfg.latent < 1) throw config_error("bgn: latent dimension must be >= 1");
  if (cfg.w_g < 0 || cfg.w_kl < 0 || cfg.w_m_uniform < 0)
    throw config_error("bgn: loss weights must be non-negative");
  Bgn bgn;
  bgn.cfg = cfg;
  bgn.mask = resolve_mask(cfg, s);
  if (bgn.mask.empty()) throw config_error("bgn: muscle mask is empty");
  bgn.cfg.w_m = resolve_wm(cfg, bgn.mask.size());
  bgn.schema_hash = schema::hash(s);

  std::vector<int> enc_sizes;
  enc_sizes.push_back(encoder_input_dim(s));
  for (int h : cfg.encoder_hidden) enc_sizes.push_back(h);
  enc_sizes.push_back(2 * cfg.latent);
  bgn.encoder = nn::mlp_new(enc_sizes, nn::HiddenAct::leaky_relu, nn::OutputAct::linear,
                            derive_seed(cfg.seed, 0x656e63ULL));

  std::vector<int> dec_sizes;
  dec_sizes.push_back(cfg.latent);
  for (int h : cfg.decoder_hidden) dec_sizes.push_back(h);
  dec_sizes.push_back(static_cast<int>(bgn.mask.size()));
  bgn.pre_decoder = nn::mlp_new(dec_sizes, nn::HiddenAct::leaky_relu, nn::OutputAct::sigmoid,
                                derive_seed(cfg.seed, 0x646563ULL));
  return bgn;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const Bgn& bgn, const GaitPattern& m,
                                                   const Eigen::VectorXd& gait_cond,
                                                   const Eigen::VectorXd& skeleton) {
  Eigen::VectorXd x(bgn.encoder.input_dim());
  if (m.data.size() + gait_cond.size() + skeleton.size() != x.size())
    throw config_error("encode: input dimensions do not match the encoder");
  x << m.data, gait_cond, skeleton;
  const Eigen::VectorXd out = nn::forward_row(bgn.encoder, x);
  const int z = bgn.cfg.latent;
  Eigen::VectorXd mu = out.head(z);
  Eigen::VectorXd log_sigma = out.tail(z).cwiseMax(kLogSigmaMin).cwiseMin(kLogSigmaMax);
  return {mu, log_sigma};
}

Eigen::VectorXd decode_muscle(const Bgn& bgn, const Eigen::VectorXd& z, const schema::Schema& s) {
  if (z.size() != bgn.cfg.latent) throw config_error("decode_muscle: latent size mismatch");
  const Eigen::VectorXd y = nn::forward_row(bgn.pre_decoder, z);
  Eigen::VectorXd muscle(s.n_muscle());
  for (int m = 0; m < s.n_muscle(); ++m) muscle[m] = s.params[s.muscle_begin() + m].ref;
  for (std::size_t m = 0; m < bgn.mask.size(); ++m) {
    const auto& p = s.params[s.muscle_begin() + bgn.mask[m]];
    muscle[bgn.mask[m]] = p.min + y[static_cast<int>(m)] * (p.max - p.min);
  }
  return muscle;
}

BgnTrainResult train_bgn(Bgn& bgn, const Dataset& ds, const nn::Network& fgn,
                         const schema::Schema& s) {
  if (ds.size() == 0) throw config_error("train_bgn: empty dataset");
  if (ds.schema_hash != schema::hash(s)) throw data_error("train_bgn: dataset schema mismatch");
  if (!fgn.frozen) throw config_error("train_bgn: forward network must be frozen");
  if (fgn.input_dim() != 2 + s.anatomy_dim() + s.n_gait())
    throw data_error("train_bgn: forward network does not match the schema");
  if (bgn.schema_hash != ds.schema_hash)
    throw data_error("train_bgn: backward model built for a different schema");
  if (bgn.cfg.batch < 1) throw config_error("train_bgn: batch size must be positive");

  bgn.encoder.input_norm = encoder_input_norm(ds, s);

  const SchemaSlices sl = make_slices(s, bgn.mask);
  const Eigen::MatrixXd cond_norm = normalized_conditions(ds, s, sl);

  nn::AdamState enc_adam = nn::AdamState::init(bgn.encoder, bgn.cfg.learning_rate);
  nn::AdamState dec_adam = nn::AdamState::init(bgn.pre_decoder, bgn.cfg.learning_rate);

  const std::int64_t n = ds.size();
  const std::int64_t batch = std::min<std::int64_t>(bgn.cfg.batch, n);
  std::vector<std::int64_t> order(n);
  for (std::int64_t i = 0; i < n; ++i) order[i] = i;

  StepWorkspace ws;
  BgnTrainResult result;
  for (int epoch = 0; epoch < bgn.cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(bgn.cfg.seed, 0x62677368ULL + epoch));
    for (std::int64_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.below(i + 1)]);
    Rng noise_rng(derive_seed(bgn.cfg.seed, 0x626e6f69ULL + epoch));

    BgnEpochStats ep;
    std::int64_t steps = 0;
    for (std::int64_t b0 = 0; b0 + batch <= n; b0 += batch) {
      const StepStats st = bgn_step(bgn, ds, fgn, s, sl, cond_norm, order, b0, b0 + batch,
                                    noise_rng, true, ws);
      const double total = st.total(bgn.cfg);
      if (!std::isfinite(total))
        throw numeric_error("train_bgn: non-finite loss at epoch " + std::to_string(epoch));
      nn::adam_step(enc_adam, bgn.encoder, ws.enc_grads);
      nn::adam_step(dec_adam, bgn.pre_decoder, ws.dec_grads);
      ep.total += total;
      ep.reconstruction += st.recon;
      ep.kl += st.kl;
      ep.regularization += st.reg;
      ++steps;
    }
    if (steps > 0) {
      ep.total /= steps;
      ep.reconstruction /= steps;
      ep.kl /= steps;
      ep.regularization /= steps;
    }
    result.history.push_back(ep);
  }
  return result;
}

BgnEpochStats bgn_loss_on_tuples(const Bgn& bgn, const Dataset& ds, const nn::Network& fgn,
                                 const schema::Schema& s,
                                 const std::vector<std::int64_t>& tuples, std::uint64_t seed) {
  const SchemaSlices sl = make_slices(s, bgn.mask);
  const Eigen::MatrixXd cond_norm = normalized_conditions(ds, s, sl);
  Rng noise_rng(derive_seed(seed, 0x626e6f69ULL));
  StepWorkspace ws;
  const StepStats st = bgn_step(bgn, ds, fgn, s, sl, cond_norm, tuples, 0,
                                static_cast<std::int64_t>(tuples.size()), noise_rng, false, ws);
  BgnEpochStats ep;
  ep.total = st.total(bgn.cfg);
  ep.reconstruction = st.recon;
  ep.kl = st.kl;
  ep.regularization = st.reg;
  return ep;
}

std::vector<PosteriorSample> posterior_samples(const Bgn& bgn, const schema::Schema& s,
                                               const GaitPattern& m,
                                               const Eigen::VectorXd& gait_cond,
                                               const Eigen::VectorXd& skeleton, int n,
                                               std::uint64_t seed) {
  if (n < 0) throw config_error("posterior_samples: negative count");
  const auto [mu, log_sigma] = encode(bgn, m, gait_cond, skeleton);
  const Eigen::VectorXd sigma = log_sigma.array().exp();
  Rng rng(derive_seed(seed, 0x706f7374ULL));
  std::vector<PosteriorSample> out;
  out.reserve(n);
  Eigen::VectorXd noise(bgn.cfg.latent);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < bgn.cfg.latent; ++d) noise[d] = rng.normal();
    PosteriorSample ps;
    ps.z = nn::reparam_sample(mu, log_sigma, noise);
    ps.muscle = decode_muscle(bgn, ps.z, s);
    out.push_back(std::move(ps));
  }
  return out;
}

Eigen::VectorXd posterior_mean_muscle(const Bgn& bgn, const schema::Schema& s,
                                      const GaitPattern& m, const Eigen::VectorXd& gait_cond,
                                      const Eigen::VectorXd& skeleton) {
  return decode_muscle(bgn, encode(bgn, m, gait_cond, skeleton).first, s);
}

std::vector<BgnConfig> default_expert_configs(const schema::Schema& s, std::uint64_t seed) {
  BgnConfig knees_ankles;
  knees_ankles.muscle_mask = knee_ankle_mask(s);
  knees_ankles.w_kl = 1e-3;
  knees_ankles.w_m_uniform = 1e-3;
  knees_ankles.seed = derive_seed(seed, 0);

  BgnConfig full_soft;
  full_soft.w_kl = 1e-3;
  full_soft.w_m_uniform = 1e-3;
  full_soft.seed = derive_seed(seed, 1);

  BgnConfig full_firm;
  full_firm.w_kl = 1e-2;
  full_firm.w_m_uniform = 1e-2;
  full_firm.seed = derive_seed(seed, 2);

  return {knees_ankles, full_soft, full_firm};
}

std::vector<Bgn> train_experts(const Dataset& ds, const nn::Network& fgn,
                               const std::vector<BgnConfig>& cfgs, const schema::Schema& s,
                               std::vector<BgnTrainResult>* histories) {
  std::vector<Bgn> experts;
  if (histories) histories->clear();
  for (const auto& cfg : cfgs) {
    Bgn bgn = build_bgn(cfg, s);
    BgnTrainResult hist = train_bgn(bgn, ds, fgn, s);
    if (histories) histories->push_back(std::move(hist));
    experts.push_back(std::move(bgn));
  }
  return experts;
}

std::pair<int, Eigen::VectorXd> select_expert(const std::vector<Bgn>& experts,
                                              const nn::Network& fgn, const schema::Schema& s,
                                              const GaitPattern& m,
                                              const Eigen::VectorXd& gait_cond,
                                              const Eigen::VectorXd& skeleton) {
  if (experts.empty()) throw config_error("select_expert: no experts");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_muscle;
  for (std::size_t e = 0; e < experts.size(); ++e) {
    const Eigen::VectorXd muscle = posterior_mean_muscle(experts[e], s, m, gait_cond, skeleton);
    Eigen::VectorXd anatomy(s.anatomy_dim());
    anatomy << skeleton, muscle;
    const GaitPattern recon = rollout(fgn, s, anatomy, gait_cond);
    const double d = gait::d_gait(m, recon);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(e);
      best_muscle = muscle;
    }
  }
  return {best, best_muscle};
}

void save_bundle(const std::vector<Bgn>& experts, const std::string& path,
                 std::uint64_t schema_hash) {
  BinWriter w(path);
  w.magic("BGNB");
  w.u32(kBundleFormatVersion);
  w.u64(schema_hash);
  w.u32(static_cast<std::uint32_t>(experts.size()));
  for (const auto& e : experts) {
    const auto& c = e.cfg;
    w.u32(static_cast<std::uint32_t>(c.latent));
    w.f64(c.w_g);
    w.f64(c.w_kl);
    w.f64(c.w_m_uniform);
    w.f64(c.w_h);
    w.f64(c.w_v);
    w.u32(static_cast<std::uint32_t>(c.batch));
    w.f64(c.learning_rate);
    w.u32(static_cast<std::uint32_t>(c.epochs));
    w.u64(c.seed);
    w.u32(static_cast<std::uint32_t>(e.mask.size()));
    for (int m : e.mask) w.u32(static_cast<std::uint32_t>(m));
    w.u32(static_cast<std::uint32_t>(c.w_m.size()));
    w.f64s(c.w_m.data(), c.w_m.size());
    nn::write_network(w, e.encoder);
    nn::write_network(w, e.pre_decoder);
  }
  w.close();
}

std::vector<Bgn> load_bundle(const std::string& path, const schema::Schema& s) {
  BinReader r(path);
  r.expect_magic("BGNB", "BGNB expert bundle");
  const std::uint32_t version = r.u32();
  if (version != kBundleFormatVersion)
    throw data_error(path + ": bundle version " + std::to_string(version) +
                     " unsupported (supported: " + std::to_string(kBundleFormatVersion) + ")");
  const std::uint64_t schema_hash = r.u64();
  const std::uint64_t expect = schema::hash(s);
  if (schema_hash != expect)
    throw data_error(path + ": schema hash mismatch (file " + std::to_string(schema_hash) +
                     ", expected " + std::to_string(expect) + ")");
  const std::uint32_t n_experts = r.u32();
  if (n_experts == 0 || n_experts > 64) throw data_error(path + ": implausible expert count");
  std::vector<Bgn> experts;
  for (std::uint32_t e = 0; e < n_experts; ++e) {
    Bgn bgn;
    bgn.schema_hash = schema_hash;
    auto& c = bgn.cfg;
    c.latent = static_cast<int>(r.u32());
    c.w_g = r.f64();
    c.w_kl = r.f64();
    c.w_m_uniform = r.f64();
    c.w_h = r.f64();
    c.w_v = r.f64();
    c.batch = static_cast<int>(r.u32());
    c.learning_rate = r.f64();
    c.epochs = static_cast<int>(r.u32());
    c.seed = r.u64();
    const std::uint32_t mask_n = r.u32();
    if (mask_n == 0 || mask_n > static_cast<std::uint32_t>(s.n_muscle()))
      throw data_error(path + ": implausible mask size");
    bgn.mask.resize(mask_n);
    for (auto& m : bgn.mask) {
      m = static_cast<int>(r.u32());
      if (m < 0 || m >= s.n_muscle()) throw data_error(path + ": mask index out of range");
    }
    c.muscle_mask = bgn.mask;
    const std::uint32_t wm_n = r.u32();
    if (wm_n != mask_n) throw data_error(path + ": weight vector does not match mask");
    c.w_m.resize(wm_n);
    r.f64s(c.w_m.data(), wm_n);
    bgn.encoder = nn::read_network(r, path + " (encoder)");
    bgn.pre_decoder = nn::read_network(r, path + " (pre-decoder)");
    if (bgn.encoder.input_dim() != encoder_input_dim(s) ||
        bgn.encoder.output_dim() != 2 * c.latent)
      throw data_error(path + ": encoder dimensions do not match the schema");
    if (bgn.pre_decoder.input_dim() != c.latent ||
        bgn.pre_decoder.output_dim() != static_cast<int>(mask_n))
      throw data_error(path + ": pre-decoder dimensions do not match the mask");
    experts.push_back(std::move(bgn));
  }
  r.expect_eof();
  return experts;
}

}  // namespace gaitnet
