#include "gaitnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "gaitnet/errors.hpp"
#include "gaitnet/parallel.hpp"
#include "gaitnet/rng.hpp"

namespace gaitnet {

using gait::GaitPattern;
using gait::JointErrorStat;

double normalized_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw config_error("normalized_distance: size mismatch");
  if (a.size() == 0) return 0.0;
  return (a - b).norm() / std::sqrt(static_cast<double>(a.size()));
}

namespace {

struct PooledStats {
  std::vector<double> sum, sum2;
  std::int64_t count = 0;

  explicit PooledStats(int nj) : sum(nj, 0.0), sum2(nj, 0.0) {}

  void add(const std::vector<JointErrorStat>& frame_stats) {
    // each entry already pools the 60 frames of one case
    for (std::size_t j = 0; j < frame_stats.size(); ++j) {
      sum[j] += frame_stats[j].mean * gait::kFrames;
      sum2[j] += (frame_stats[j].variance + frame_stats[j].mean * frame_stats[j].mean) *
                 gait::kFrames;
    }
    count += gait::kFrames;
  }

  std::vector<JointErrorStat> finalize() const {
    std::vector<JointErrorStat> out(sum.size());
    for (std::size_t j = 0; j < sum.size(); ++j) {
      const double mean = sum[j] / static_cast<double>(count);
      out[j].mean = mean;
      out[j].variance = std::max(0.0, sum2[j] / static_cast<double>(count) - mean * mean);
    }
    return out;
  }
};

double joint_avg(const std::vector<JointErrorStat>& stats) {
  double acc = 0.0;
  for (const auto& st : stats) acc += st.mean;
  return stats.empty() ? 0.0 : acc / static_cast<double>(stats.size());
}

double case_mean(const std::vector<JointErrorStat>& stats) { return joint_avg(stats); }

}  // namespace

ForwardEval eval_forward(const nn::Network& fgn, const Dataset& holdout,
                         const schema::Schema& s) {
  const std::int64_t n = holdout.size();
  const gait::PoseLayout layout{s.n_joints()};
  ForwardEval ev;
  ev.joint_names = s.joints;
  ev.per_case_mean.resize(n);
  std::vector<std::vector<JointErrorStat>> per_case(n);

  parallel_blocks(n, [&](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) {
      const Eigen::VectorXd anatomy = holdout.anatomy(i, s.anatomy_dim());
      const Eigen::VectorXd gait_cond = holdout.gait_cond(i, s.anatomy_dim());
      const GaitPattern truth(layout, holdout.gait(i));
      const GaitPattern pred = rollout(fgn, s, anatomy, gait_cond);
      per_case[i] = gait::joint_angle_error_deg(truth, pred);
      ev.per_case_mean[i] = case_mean(per_case[i]);
    }
  });

  PooledStats pooled(s.n_joints());
  for (std::int64_t i = 0; i < n; ++i) pooled.add(per_case[i]);
  ev.per_joint = pooled.finalize();
  ev.joint_avg_mean = joint_avg(ev.per_joint);
  return ev;
}

RealizabilityEval eval_backward_realizability(const std::vector<Bgn>& experts,
                                              const nn::Network& fgn, const Oracle& oracle,
                                              const Dataset& holdout,
                                              double pass_threshold_deg) {
  const schema::Schema& s = oracle.schema();
  const std::int64_t n = holdout.size();
  const gait::PoseLayout layout{s.n_joints()};

  RealizabilityEval ev;
  ev.joint_names = s.joints;
  ev.pass_threshold_deg = pass_threshold_deg;
  ev.cases.resize(n);
  std::vector<std::vector<JointErrorStat>> per_case(n);

  parallel_blocks(n, [&](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) {
      const Eigen::VectorXd anatomy = holdout.anatomy(i, s.anatomy_dim());
      const Eigen::VectorXd gait_cond = holdout.gait_cond(i, s.anatomy_dim());
      const Eigen::VectorXd skeleton = anatomy.head(s.n_skeleton());
      const GaitPattern input(layout, holdout.gait(i));

      const auto [expert, muscle] = select_expert(experts, fgn, s, input, gait_cond, skeleton);
      Eigen::VectorXd pred_anatomy(s.anatomy_dim());
      pred_anatomy << skeleton, muscle;
      const GaitPattern resim = oracle.simulate(pred_anatomy, gait_cond);

      per_case[i] = gait::joint_angle_error_deg(input, resim);
      ev.cases[i].expert = expert;
      ev.cases[i].mean_error_deg = case_mean(per_case[i]);
      ev.cases[i].pass = ev.cases[i].mean_error_deg <= pass_threshold_deg;
    }
  });

  PooledStats pooled(s.n_joints());
  for (std::int64_t i = 0; i < n; ++i) {
    pooled.add(per_case[i]);
    if (ev.cases[i].pass) ++ev.n_pass;
  }
  ev.per_joint = pooled.finalize();
  ev.joint_avg_mean = joint_avg(ev.per_joint);
  return ev;
}

CoverageResult eval_coverage(const Bgn& bgn, const schema::Schema& s, const GaitPattern& m,
                             const Eigen::VectorXd& gait_cond, const Eigen::VectorXd& skeleton,
                             const Eigen::VectorXd& truth_muscle, int n, std::uint64_t seed) {
  if (n < 2) throw config_error("eval_coverage: need at least two samples");
  const auto samples = posterior_samples(bgn, s, m, gait_cond, skeleton, n, seed);
  const Eigen::VectorXd lo = s.muscle_min();
  const Eigen::VectorXd hi = s.muscle_max();

  CoverageResult res;
  res.samples_nm.resize(n, s.n_muscle());
  for (int i = 0; i < n; ++i)
    res.samples_nm.row(i) =
        gait::normalize_condition(samples[i].muscle, lo, hi).transpose();
  res.truth_nm = gait::normalize_condition(truth_muscle, lo, hi);

  const double scale = std::sqrt(static_cast<double>(s.n_muscle()));
  Eigen::VectorXd nn_dist(n);
  parallel_blocks(n, [&](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < n; ++k) {
        if (k == i) continue;
        const double d = (res.samples_nm.row(i) - res.samples_nm.row(k)).norm();
        best = std::min(best, d);
      }
      nn_dist[i] = best / scale;
    }
  });

  std::vector<double> sorted(nn_dist.data(), nn_dist.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t idx = std::min<std::size_t>(
      sorted.size() - 1, static_cast<std::size_t>(std::ceil(0.95 * n)) - 1);
  res.threshold = sorted[idx];

  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    best = std::min(best, (res.samples_nm.row(i).transpose() - res.truth_nm).norm());
  res.truth_nn = best / scale;
  res.covered = res.truth_nn <= res.threshold;
  return res;
}

Embed2d embed_2d(const Eigen::MatrixXd& samples_nm, const Eigen::VectorXd& truth_nm,
                 const std::string& csv_path, const std::string& svg_path) {
  const std::int64_t n = samples_nm.rows();
  if (n < 2) throw config_error("embed_2d: need at least two samples");
  const Eigen::RowVectorXd mean = samples_nm.colwise().mean();
  const Eigen::MatrixXd centered = samples_nm.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const int d = static_cast<int>(cov.rows());

  Embed2d out;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d, 2);
  basis.col(0) = es.eigenvectors().col(d - 1);
  if (d >= 2) basis.col(1) = es.eigenvectors().col(d - 2);
  const double total = std::max(es.eigenvalues().sum(), 1e-300);
  out.explained_first = es.eigenvalues()(d - 1) / total;
  out.explained_second = d >= 2 ? es.eigenvalues()(d - 2) / total : 0.0;
  out.coords = centered * basis;
  out.truth_coords = ((truth_nm.transpose() - mean) * basis).transpose();

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw data_error("cannot open for writing: " + csv_path);
    csv << "x,y,kind\n";
    csv.precision(10);
    for (std::int64_t i = 0; i < n; ++i)
      csv << out.coords(i, 0) << "," << out.coords(i, 1) << ",sample\n";
    csv << out.truth_coords[0] << "," << out.truth_coords[1] << ",truth\n";
  }

  if (!svg_path.empty()) {
    const double x0 = std::min(out.coords.col(0).minCoeff(), out.truth_coords[0]);
    const double x1 = std::max(out.coords.col(0).maxCoeff(), out.truth_coords[0]);
    const double y0 = std::min(out.coords.col(1).minCoeff(), out.truth_coords[1]);
    const double y1 = std::max(out.coords.col(1).maxCoeff(), out.truth_coords[1]);
    const double w = 640, h = 640, pad = 40;
    const double sx = (w - 2 * pad) / std::max(1e-12, x1 - x0);
    const double sy = (h - 2 * pad) / std::max(1e-12, y1 - y0);
    std::ofstream svg(svg_path);
    if (!svg) throw data_error("cannot open for writing: " + svg_path);
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    svg.precision(6);
    for (std::int64_t i = 0; i < n; ++i)
      svg << "<circle cx='" << pad + (out.coords(i, 0) - x0) * sx << "' cy='"
          << h - pad - (out.coords(i, 1) - y0) * sy << "' r='2.5' fill='#8888aa'/>\n";
    svg << "<circle cx='" << pad + (out.truth_coords[0] - x0) * sx << "' cy='"
        << h - pad - (out.truth_coords[1] - y0) * sy
        << "' r='6' fill='#cc2222' stroke='black'/>\n";
    svg << "<text x='" << pad << "' y='20' font-size='13'>principal-component projection of "
        << n << " posterior samples; red = ground truth</text>\n";
    svg << "</svg>\n";
  }
  return out;
}

AblationResult ablation_grid_vs_uniform(const Oracle& oracle, const AblationConfig& cfg) {
  const schema::Schema& s = oracle.schema();
  AblationResult result;
  result.joint_names = s.joints;
  result.rows.resize(3);
  result.rows[0].name = "Uniform-Uniform";
  result.rows[1].name = "Uniform-Grid";
  result.rows[2].name = "Grid-Grid";

  std::vector<PooledStats> pooled(3, PooledStats(s.n_joints()));

  for (const std::uint64_t seed : cfg.seeds) {
    // shared extreme-condition holdout: corner samples plus pathology analogs
    // (clamped into range so narrow schemas stay valid)
    std::vector<Eigen::VectorXd> holdout_conds =
        sample_grid(cfg.n_corner_cases, s, derive_seed(seed, 0x61626c68ULL));
    const Eigen::VectorXd lo = s.param_min();
    const Eigen::VectorXd hi = s.param_max();
    for (const auto& preset : oracle.pathology_presets()) {
      Eigen::VectorXd full(s.n_params());
      full << preset.anatomy, preset.gait_cond;
      holdout_conds.push_back(full.cwiseMax(lo).cwiseMin(hi));
    }
    const Dataset holdout = generate(holdout_conds, oracle, Strategy::mixed, seed);

    const auto uniform_conds = sample_uniform(cfg.n_train, s, derive_seed(seed, 0x756eULL));
    const auto grid_conds = sample_grid(cfg.n_train, s, derive_seed(seed, 0x6772ULL));
    const Dataset ds_uniform = generate(uniform_conds, oracle, Strategy::uniform, seed);
    const Dataset ds_grid = generate(grid_conds, oracle, Strategy::grid, seed);

    FgnConfig fgn_cfg = cfg.fgn;
    fgn_cfg.seed = derive_seed(seed, 0x666eULL);
    FgnTrainResult fgn_u = train_fgn(ds_uniform, fgn_cfg, s);
    FgnTrainResult fgn_g = train_fgn(ds_grid, fgn_cfg, s);
    fgn_u.net.frozen = true;
    fgn_g.net.frozen = true;

    // controlled comparison: one seed per outer seed, only the data and the
    // frozen decoder differ between combinations
    auto train_one = [&](const Dataset& ds, const nn::Network& fgn) {
      BgnConfig bc = cfg.bgn;
      bc.seed = derive_seed(seed, 0x62676eULL);
      Bgn bgn = build_bgn(bc, s);
      train_bgn(bgn, ds, fgn, s);
      return bgn;
    };
    const Bgn bgn_uu = train_one(ds_uniform, fgn_u.net);
    const Bgn bgn_ug = train_one(ds_grid, fgn_u.net);
    const Bgn bgn_gg = train_one(ds_grid, fgn_g.net);

    const struct {
      const nn::Network* fgn;
      const Bgn* bgn;
    } combos[3] = {{&fgn_u.net, &bgn_uu}, {&fgn_u.net, &bgn_ug}, {&fgn_g.net, &bgn_gg}};

    for (int c = 0; c < 3; ++c) {
      const RealizabilityEval ev = eval_backward_realizability(
          {*combos[c].bgn}, *combos[c].fgn, oracle, holdout);
      // seeds weighted equally; per-joint moments pooled across seeds
      for (int j = 0; j < s.n_joints(); ++j) {
        pooled[c].sum[j] += ev.per_joint[j].mean;
        pooled[c].sum2[j] +=
            ev.per_joint[j].variance + ev.per_joint[j].mean * ev.per_joint[j].mean;
      }
      pooled[c].count += 1;
    }
  }

  for (int c = 0; c < 3; ++c) {
    result.rows[c].per_joint = pooled[c].finalize();
    result.rows[c].joint_avg_mean = joint_avg(result.rows[c].per_joint);
  }
  return result;
}

void write_per_joint_csv(const std::string& path, const std::vector<std::string>& joints,
                         const std::vector<JointErrorStat>& stats) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open for writing: " + path);
  out << "joint,mean_deg,variance_deg2\n";
  out.precision(10);
  for (std::size_t j = 0; j < joints.size(); ++j)
    out << joints[j] << "," << stats[j].mean << "," << stats[j].variance << "\n";
}

void write_forward_report(const std::string& dir, const ForwardEval& ev) {
  std::filesystem::create_directories(dir);
  write_per_joint_csv(dir + "/forward_per_joint.csv", ev.joint_names, ev.per_joint);
  std::ofstream out(dir + "/forward_cases.csv");
  if (!out) throw data_error("cannot open for writing: " + dir + "/forward_cases.csv");
  out << "case,mean_error_deg\n";
  out.precision(10);
  for (std::size_t i = 0; i < ev.per_case_mean.size(); ++i)
    out << i << "," << ev.per_case_mean[i] << "\n";
}

void write_realizability_report(const std::string& dir, const RealizabilityEval& ev) {
  std::filesystem::create_directories(dir);
  write_per_joint_csv(dir + "/realizability_per_joint.csv", ev.joint_names, ev.per_joint);
  std::ofstream out(dir + "/realizability_cases.csv");
  if (!out) throw data_error("cannot open for writing: " + dir + "/realizability_cases.csv");
  out << "case,expert,mean_error_deg,pass\n";
  out.precision(10);
  for (std::size_t i = 0; i < ev.cases.size(); ++i)
    out << i << "," << ev.cases[i].expert << "," << ev.cases[i].mean_error_deg << ","
        << (ev.cases[i].pass ? 1 : 0) << "\n";
}

void write_ablation_report(const std::string& path, const AblationResult& ab) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open for writing: " + path);
  out << "strategy";
  for (const auto& j : ab.joint_names) out << "," << j << "_mean," << j << "_var";
  out << ",joint_avg_mean\n";
  out.precision(10);
  for (const auto& row : ab.rows) {
    out << row.name;
    for (const auto& st : row.per_joint) out << "," << st.mean << "," << st.variance;
    out << "," << row.joint_avg_mean << "\n";
  }
}

}  // namespace gaitnet
