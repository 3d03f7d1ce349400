#include "gaitnet/fgn.hpp"

#include <cmath>
#include <limits>

#include "gaitnet/errors.hpp"
#include "gaitnet/parallel.hpp"
#include "gaitnet/rng.hpp"

namespace gaitnet {

using gait::GaitPattern;
using gait::Pose;

Eigen::Vector2d phase_features(double phi) {
  return {std::cos(0.5 * phi), std::sin(0.5 * phi)};
}

Eigen::VectorXd fgn_input_row(const schema::Schema& s, const Eigen::VectorXd& anatomy_norm,
                              const Eigen::VectorXd& gait_norm, double phi) {
  Eigen::VectorXd x(2 + s.anatomy_dim() + s.n_gait());
  x.head<2>() = phase_features(phi);
  x.segment(2, s.anatomy_dim()) = anatomy_norm;
  x.tail(s.n_gait()) = gait_norm;
  return x;
}

nn::Network build_fgn(const FgnConfig& cfg, const schema::Schema& s) {
  std::vector<int> sizes;
  sizes.push_back(2 + s.anatomy_dim() + s.n_gait());
  for (int h : cfg.hidden) sizes.push_back(h);
  gait::PoseLayout layout{s.n_joints()};
  sizes.push_back(layout.pose_dim());
  return nn::mlp_new(sizes, nn::HiddenAct::relu, nn::OutputAct::linear, cfg.seed);
}

namespace {

// normalized conditions for every tuple, n x (anatomy+gait), f64
Eigen::MatrixXd normalized_conditions(const Dataset& ds, const schema::Schema& s) {
  const Eigen::VectorXd lo = s.param_min();
  const Eigen::VectorXd hi = s.param_max();
  const std::int64_t n = ds.size();
  Eigen::MatrixXd out(n, ds.cond_dim);
  for (std::int64_t i = 0; i < n; ++i)
    out.row(i) = gait::normalize_condition(ds.condition(i), lo, hi).transpose();
  return out;
}

// pose mean/scale over all frames of all tuples; fixed accumulation order
nn::Norm pose_output_norm(const Dataset& ds, int pose_dim) {
  const std::int64_t rows = ds.size() * gait::kFrames;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(pose_dim);
  Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(pose_dim);
  for (std::int64_t r = 0; r < rows; ++r)
    for (int d = 0; d < pose_dim; ++d) {
      const double v = ds.gaits[r * pose_dim + d];
      sum[d] += v;
      sum2[d] += v * v;
    }
  nn::Norm norm;
  norm.mean = sum / static_cast<double>(rows);
  norm.scale = ((sum2 / static_cast<double>(rows)) - norm.mean.cwiseProduct(norm.mean))
                   .cwiseMax(0.0)
                   .cwiseSqrt()
                   .cwiseMax(1e-6);
  return norm;
}

struct PairBatch {
  Eigen::MatrixXd inputs;   // B x in
  Eigen::MatrixXd targets;  // B x pose_dim
};

void fill_batch(const Dataset& ds, const schema::Schema& s, const Eigen::MatrixXd& cond_norm,
                const std::vector<std::int64_t>& pair_ids, std::int64_t begin, std::int64_t end,
                PairBatch& batch) {
  const int pose_dim = gait::PoseLayout{s.n_joints()}.pose_dim();
  const int in_dim = 2 + s.anatomy_dim() + s.n_gait();
  const std::int64_t b = end - begin;
  batch.inputs.resize(b, in_dim);
  batch.targets.resize(b, pose_dim);
  parallel_blocks(b, [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t r = r0; r < r1; ++r) {
      const std::int64_t pid = pair_ids[begin + r];
      const std::int64_t tuple = pid / gait::kFrames;
      const int frame = static_cast<int>(pid % gait::kFrames);
      batch.inputs.row(r).head<2>() = phase_features(gait::frame_phase(frame)).transpose();
      batch.inputs.row(r).tail(in_dim - 2) = cond_norm.row(tuple);
      for (int d = 0; d < pose_dim; ++d)
        batch.targets(r, d) = ds.gaits[(tuple * gait::kFrames + frame) * pose_dim + d];
    }
  });
}

// Sum of pose distances over the batch plus upstream gradient d(sum)/d(pred).
double batch_pose_loss(const schema::Schema& s, const Eigen::MatrixXd& targets,
                       const Eigen::MatrixXd& preds, double w_h, double w_v,
                       Eigen::MatrixXd* upstream) {
  const gait::PoseLayout layout{s.n_joints()};
  const std::int64_t b = targets.rows();
  if (upstream) upstream->resize(b, layout.pose_dim());
  Eigen::VectorXd losses(b);
  parallel_blocks(b, [&](std::int64_t r0, std::int64_t r1) {
    Eigen::VectorXd grad(layout.pose_dim());
    for (std::int64_t r = r0; r < r1; ++r) {
      const Pose target(layout, targets.row(r).transpose());
      const Pose pred(layout, preds.row(r).transpose());
      if (upstream) {
        losses[r] = gait::d_pose_grad(target, pred, w_h, w_v, grad);
        upstream->row(r) = grad.transpose();
      } else {
        losses[r] = gait::d_pose(target, pred, w_h, w_v);
      }
    }
  });
  return losses.sum();
}

}  // namespace

double fgn_loss_on_pairs(const nn::Network& net, const Dataset& ds, const schema::Schema& s,
                         const std::vector<std::pair<std::int64_t, int>>& pairs, double w_h,
                         double w_v) {
  const Eigen::MatrixXd cond_norm = normalized_conditions(ds, s);
  std::vector<std::int64_t> ids;
  ids.reserve(pairs.size());
  for (const auto& [t, f] : pairs) ids.push_back(t * gait::kFrames + f);
  PairBatch batch;
  fill_batch(ds, s, cond_norm, ids, 0, static_cast<std::int64_t>(ids.size()), batch);
  const Eigen::MatrixXd preds = nn::forward(net, batch.inputs);
  return batch_pose_loss(s, batch.targets, preds, w_h, w_v, nullptr) /
         static_cast<double>(pairs.size());
}

FgnTrainResult train_fgn(const Dataset& ds, const FgnConfig& cfg, const schema::Schema& s) {
  if (ds.size() == 0) throw config_error("train_fgn: empty dataset");
  if (ds.schema_hash != schema::hash(s)) throw data_error("train_fgn: dataset schema mismatch");
  if (ds.cond_dim != s.n_params()) throw data_error("train_fgn: condition dimension mismatch");
  if (cfg.batch < 1) throw config_error("train_fgn: batch size must be positive");
  const std::int64_t n_pairs = ds.size() * gait::kFrames;
  const std::int64_t batch = std::min<std::int64_t>(cfg.batch, n_pairs);

  FgnTrainResult result;
  result.net = build_fgn(cfg, s);
  result.net.output_norm = pose_output_norm(ds, result.net.output_dim());

  const Eigen::MatrixXd cond_norm = normalized_conditions(ds, s);
  nn::AdamState adam = nn::AdamState::init(result.net, cfg.learning_rate);

  std::vector<std::int64_t> pair_ids(n_pairs);
  for (std::int64_t i = 0; i < n_pairs; ++i) pair_ids[i] = i;

  PairBatch batch_data;
  nn::Trace trace;
  nn::Grads grads;
  Eigen::MatrixXd upstream;

  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, 0x65706f63ULL + epoch));
    for (std::int64_t i = n_pairs - 1; i > 0; --i)
      std::swap(pair_ids[i], pair_ids[shuffle_rng.below(i + 1)]);

    double epoch_sum = 0.0;
    std::int64_t seen = 0;
    for (std::int64_t begin = 0; begin + batch <= n_pairs; begin += batch) {
      fill_batch(ds, s, cond_norm, pair_ids, begin, begin + batch, batch_data);
      const Eigen::MatrixXd preds = nn::forward(result.net, batch_data.inputs, trace);
      const double loss_sum =
          batch_pose_loss(s, batch_data.targets, preds, cfg.w_h, cfg.w_v, &upstream);
      if (!std::isfinite(loss_sum))
        throw numeric_error("train_fgn: non-finite loss at epoch " + std::to_string(epoch) +
                            " offset " + std::to_string(begin));
      upstream /= static_cast<double>(batch);
      nn::backward(result.net, trace, upstream, &grads);
      nn::adam_step(adam, result.net, grads);
      epoch_sum += loss_sum;
      seen += batch;
    }
    const double epoch_loss = epoch_sum / static_cast<double>(seen);
    result.epoch_loss.push_back(epoch_loss);

    if (epoch_loss < best * (1.0 - cfg.plateau_rel)) {
      best = epoch_loss;
      stale = 0;
    } else if (++stale >= cfg.plateau_epochs) {
      break;
    }
  }
  return result;
}

GaitPattern rollout(const nn::Network& fgn, const schema::Schema& s,
                    const Eigen::VectorXd& anatomy, const Eigen::VectorXd& gait_cond) {
  const Eigen::VectorXd lo = s.param_min();
  const Eigen::VectorXd hi = s.param_max();
  Eigen::VectorXd full(s.n_params());
  full << anatomy, gait_cond;
  const Eigen::VectorXd norm = gait::normalize_condition(full, lo, hi);
  const Eigen::VectorXd anatomy_norm = norm.head(s.anatomy_dim());
  const Eigen::VectorXd gait_norm = norm.tail(s.n_gait());

  const gait::PoseLayout layout{s.n_joints()};
  GaitPattern m(layout);
  for (int k = 0; k < gait::kFrames; ++k) {
    const Eigen::VectorXd x = fgn_input_row(s, anatomy_norm, gait_norm, gait::frame_phase(k));
    m.data.segment(k * layout.pose_dim(), layout.pose_dim()) = nn::forward_row(fgn, x);
  }
  return m;
}

void save_fgn(const nn::Network& net, const std::string& path, std::uint64_t schema_hash) {
  nn::save_weights(net, path, schema_hash);
}

nn::Network load_fgn(const std::string& path, const schema::Schema& s) {
  nn::LoadedNetwork loaded = nn::load_weights(path);
  const std::uint64_t expect = schema::hash(s);
  if (loaded.schema_hash != expect)
    throw data_error(path + ": schema hash mismatch (file " +
                     std::to_string(loaded.schema_hash) + ", expected " + std::to_string(expect) +
                     ")");
  if (loaded.net.input_dim() != 2 + s.anatomy_dim() + s.n_gait())
    throw data_error(path + ": network input width does not match schema");
  if (loaded.net.output_dim() != gait::PoseLayout{s.n_joints()}.pose_dim())
    throw data_error(path + ": network output width does not match schema");
  return loaded.net;
}

}  // namespace gaitnet
