#include <doctest.h>

#include <fstream>

#include "gaitnet/bgn.hpp"
#include "gaitnet/errors.hpp"
#include "gaitnet/eval.hpp"
#include "gaitnet/oracle.hpp"
#include "gaitnet/parallel.hpp"
#include "helpers.hpp"

using namespace gaitnet;

namespace {

// holdout whose gaits are produced by the network itself: a perfect predictor
Dataset holdout_from_network(const nn::Network& net, const schema::Schema& s, int n,
                             std::uint64_t seed) {
  Dataset ds;
  ds.schema_hash = schema::hash(s);
  ds.strategy = Strategy::uniform;
  ds.seed = seed;
  ds.cond_dim = s.n_params();
  ds.gait_dim = gait::PoseLayout{s.n_joints()}.gait_dim();
  const auto conds = sample_uniform(n, s, seed);
  for (const auto& c : conds) {
    const gait::GaitPattern m = rollout(net, s, c.head(s.anatomy_dim()), c.tail(s.n_gait()));
    for (int d = 0; d < ds.cond_dim; ++d) ds.cond.push_back(static_cast<float>(c[d]));
    for (int d = 0; d < ds.gait_dim; ++d) ds.gaits.push_back(static_cast<float>(m.data[d]));
  }
  return ds;
}

}  // namespace

TEST_CASE("forward evaluation: perfect predictor and constant offset") {
  const schema::Schema s = schema::desk_default();
  FgnConfig cfg;
  cfg.hidden = {24, 24};
  nn::Network net = build_fgn(cfg, s);
  // range-plausible outputs so the geodesic angles are well-defined
  net.output_norm.mean.setConstant(0.3);

  const Dataset holdout = holdout_from_network(net, s, 6, 3);
  const ForwardEval ev = eval_forward(net, holdout, s);
  // float32 storage keeps errors near machine level, far below a millidegree
  CHECK(ev.joint_avg_mean < 1e-3);
  for (const auto& st : ev.per_joint) CHECK(st.mean < 1e-3);

  // constant 5-degree offset on one joint
  Dataset offset = holdout;
  const gait::PoseLayout layout{s.n_joints()};
  for (std::int64_t i = 0; i < offset.size(); ++i) {
    gait::GaitPattern m(layout, offset.gait(i));
    for (int k = 0; k < gait::kFrames; ++k) {
      gait::Pose p = m.frame(k);
      p.set_joint(4, gait::rot_encode(gait::rot_decode(p.joint(4)) *
                                      gait::rot_x(5.0 * EIGEN_PI / 180.0)));
      m.set_frame(k, p);
    }
    for (int d = 0; d < offset.gait_dim; ++d)
      offset.gaits[i * offset.gait_dim + d] = static_cast<float>(m.data[d]);
  }
  const ForwardEval ev2 = eval_forward(net, offset, s);
  CHECK(ev2.per_joint[4].mean == doctest::Approx(5.0).epsilon(1e-3));
  CHECK(ev2.per_joint[0].mean < 1e-3);

  // the aggregate is recomputable from the per-case values
  double mean_of_cases = 0.0;
  for (double v : ev2.per_case_mean) mean_of_cases += v;
  mean_of_cases /= static_cast<double>(ev2.per_case_mean.size());
  CHECK(ev2.joint_avg_mean == doctest::Approx(mean_of_cases).epsilon(1e-10));
}

TEST_CASE("realizability: ground-truth decoder gives zero error") {
  const schema::Schema s = schema::desk_default();
  const Oracle oracle(s);

  // one holdout case with a known muscle condition
  Eigen::VectorXd anatomy = s.anatomy_ref();
  anatomy[s.find_param("knee_extensor_l_weakness")] = 0.7;
  Eigen::VectorXd gait_cond(2);
  gait_cond << 1.0, 1.0;
  const Dataset holdout = generate({(Eigen::VectorXd(s.n_params()) << anatomy, gait_cond)
                                        .finished()},
                                   oracle, Strategy::mixed, 0);

  // decoder with zero weights and logit biases reproducing the truth exactly
  BgnConfig cfg;
  cfg.encoder_hidden = {8};
  cfg.decoder_hidden = {8};
  cfg.latent = 4;
  Bgn bgn = build_bgn(cfg, s);
  const Eigen::VectorXd truth_nm = gait::normalize_condition(
      anatomy.tail(s.n_muscle()), s.muscle_min(), s.muscle_max());
  auto& last = bgn.pre_decoder.layers.back();
  last.w.setZero();
  for (int m = 0; m < s.n_muscle(); ++m) {
    const double y = std::clamp(truth_nm[m], 1e-9, 1.0 - 1e-9);
    last.b[m] = std::log(y / (1.0 - y));
  }

  FgnConfig fc;
  fc.hidden = {16};
  nn::Network fgn = build_fgn(fc, s);
  fgn.frozen = true;

  const RealizabilityEval ev = eval_backward_realizability({bgn}, fgn, oracle, holdout);
  REQUIRE(ev.cases.size() == 1);
  // float32 tuple storage bounds the reachable error
  CHECK(ev.cases[0].mean_error_deg < 1e-3);
  CHECK(ev.cases[0].pass);
  CHECK(ev.n_pass == 1);
}

TEST_CASE("coverage statistic") {
  const schema::Schema s = schema::desk_default();
  const Oracle oracle(s);
  Eigen::VectorXd gait_cond(2);
  gait_cond << 1.0, 1.0;
  const gait::GaitPattern m = oracle.simulate(s.anatomy_ref(), gait_cond);
  const Eigen::VectorXd skeleton = s.anatomy_ref().head(s.n_skeleton());

  BgnConfig cfg;
  cfg.encoder_hidden = {8};
  cfg.decoder_hidden = {8};
  cfg.latent = 4;
  const Bgn bgn = build_bgn(cfg, s);

  // ground truth equal to the decoded point cloud center: covered
  const Eigen::VectorXd center = posterior_mean_muscle(bgn, s, m, gait_cond, skeleton);
  const CoverageResult hit = eval_coverage(bgn, s, m, gait_cond, skeleton, center, 200, 4);
  CHECK(hit.covered);

  // ground truth far outside the cloud: not covered
  Eigen::VectorXd far = center;
  for (int i = 0; i < far.size(); ++i)
    far[i] = (i % 2) ? s.muscle_min()[i] : s.muscle_max()[i];
  const CoverageResult miss = eval_coverage(bgn, s, m, gait_cond, skeleton, far, 200, 4);
  CHECK_FALSE(miss.covered);
  CHECK(miss.truth_nn > miss.threshold);

  // the statistic is permutation invariant: recompute from the sample matrix
  const CoverageResult again = eval_coverage(bgn, s, m, gait_cond, skeleton, center, 200, 4);
  CHECK(again.truth_nn == hit.truth_nn);
  CHECK(again.threshold == hit.threshold);
  {
    Eigen::MatrixXd shuffled = hit.samples_nm;
    Rng rng(17);
    for (int i = static_cast<int>(shuffled.rows()) - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.below(i + 1));
      shuffled.row(i).swap(shuffled.row(j));
    }
    const double scale = std::sqrt(static_cast<double>(s.n_muscle()));
    std::vector<double> nn_dist(shuffled.rows());
    for (int i = 0; i < shuffled.rows(); ++i) {
      double best = 1e300;
      for (int k = 0; k < shuffled.rows(); ++k)
        if (k != i) best = std::min(best, (shuffled.row(i) - shuffled.row(k)).norm());
      nn_dist[i] = best / scale;
    }
    std::sort(nn_dist.begin(), nn_dist.end());
    const std::size_t idx = std::min<std::size_t>(
        nn_dist.size() - 1,
        static_cast<std::size_t>(std::ceil(0.95 * shuffled.rows())) - 1);
    CHECK(nn_dist[idx] == doctest::Approx(hit.threshold).epsilon(1e-12));
  }
}

TEST_CASE("pca embedding") {
  testutil::TempDir tmp("embed");
  Rng rng(7);

  // isotropic cloud: both components explain a similar share
  Eigen::MatrixXd iso(500, 5);
  for (int i = 0; i < iso.size(); ++i) iso.data()[i] = rng.normal();
  const Embed2d e1 = embed_2d(iso, Eigen::VectorXd::Zero(5), tmp.file("iso.csv"),
                              tmp.file("iso.svg"));
  CHECK(e1.explained_first < 2.0 * e1.explained_second);
  CHECK(e1.explained_first >= e1.explained_second);

  // cloud along one axis: first component dominates
  Eigen::MatrixXd line(300, 4);
  line.setZero();
  for (int i = 0; i < 300; ++i) {
    line(i, 2) = rng.uniform(-3, 3);
    for (int d = 0; d < 4; ++d) line(i, d) += 1e-3 * rng.normal();
  }
  const Embed2d e2 = embed_2d(line, Eigen::VectorXd::Zero(4), "", "");
  CHECK(e2.explained_first > 0.99);

  // row count = samples + 1 (the highlighted truth)
  const std::string csv = testutil::slurp(tmp.file("iso.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 500 + 2);  // header + rows
}

TEST_CASE("ablation with collapsed ranges gives identical errors") {
  // all ranges collapse to the reference point: both sampling strategies
  // yield identical datasets, so all three combinations report identical
  // errors
  schema::Schema s = schema::desk_default();
  for (auto& p : s.params) {
    p.min = p.ref;
    p.max = p.ref;
  }
  s.validate();
  const Oracle oracle(s);

  AblationConfig cfg;
  cfg.n_train = 24;
  cfg.n_corner_cases = 5;
  cfg.seeds = {11};
  cfg.fgn.hidden = {16, 16};
  cfg.fgn.batch = 128;
  cfg.fgn.epochs = 1;
  cfg.fgn.learning_rate = 1e-3;
  cfg.bgn.encoder_hidden = {16, 16};
  cfg.bgn.decoder_hidden = {16, 16};
  cfg.bgn.latent = 4;
  cfg.bgn.batch = 8;
  cfg.bgn.epochs = 1;
  cfg.bgn.learning_rate = 1e-3;

  const AblationResult ab = ablation_grid_vs_uniform(oracle, cfg);
  REQUIRE(ab.rows.size() == 3);
  CHECK(ab.rows[0].name == "Uniform-Uniform");
  CHECK(ab.rows[1].name == "Uniform-Grid");
  CHECK(ab.rows[2].name == "Grid-Grid");
  for (int j = 0; j < s.n_joints(); ++j) {
    CHECK(ab.rows[0].per_joint[j].mean == doctest::Approx(ab.rows[2].per_joint[j].mean));
    CHECK(ab.rows[1].per_joint[j].mean == doctest::Approx(ab.rows[2].per_joint[j].mean));
  }
  CHECK(ab.rows[0].joint_avg_mean == doctest::Approx(ab.rows[2].joint_avg_mean));

  // report has three rows with per-joint columns
  testutil::TempDir tmp("ablation");
  write_ablation_report(tmp.file("ab.csv"), ab);
  const std::string csv = testutil::slurp(tmp.file("ab.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.find("Grid-Grid") != std::string::npos);
}

TEST_CASE("normalized distance") {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(16);
  Eigen::VectorXd b = Eigen::VectorXd::Constant(16, 0.1);
  CHECK(normalized_distance(a, b) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(normalized_distance(a, a) == 0.0);
  CHECK_THROWS_AS(normalized_distance(a, Eigen::VectorXd::Zero(3)), config_error);
}
