#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gaitnet/bgn.hpp"
#include "gaitnet/dataset.hpp"
#include "gaitnet/fgn.hpp"
#include "gaitnet/gait.hpp"
#include "gaitnet/oracle.hpp"

namespace gaitnet {

// Distance in normalized condition space, scaled per dimension:
// |a-b|_2 / sqrt(d). Used by the coverage and multimodality checks.
double normalized_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct ForwardEval {
  std::vector<std::string> joint_names;
  std::vector<gait::JointErrorStat> per_joint;  // pooled over cases and frames
  double joint_avg_mean = 0.0;
  std::vector<double> per_case_mean;  // joint-averaged mean per holdout case
};

// Rollout vs stored gait per holdout tuple, geodesic joint errors in degrees.
ForwardEval eval_forward(const nn::Network& fgn, const Dataset& holdout,
                         const schema::Schema& s);

struct RealizabilityCase {
  int expert = 0;
  double mean_error_deg = 0.0;  // joint-averaged
  bool pass = false;
};

struct RealizabilityEval {
  std::vector<std::string> joint_names;
  std::vector<gait::JointErrorStat> per_joint;
  double joint_avg_mean = 0.0;
  std::vector<RealizabilityCase> cases;
  int n_pass = 0;
  double pass_threshold_deg = 10.0;
};

// Select expert, take the posterior-mean muscle prediction, re-simulate via
// the oracle with predicted muscle + true skeleton/gait, compare to the
// input gait.
RealizabilityEval eval_backward_realizability(const std::vector<Bgn>& experts,
                                              const nn::Network& fgn, const Oracle& oracle,
                                              const Dataset& holdout,
                                              double pass_threshold_deg = 10.0);

struct CoverageResult {
  bool covered = false;
  double truth_nn = 0.0;       // distance from ground truth to nearest sample
  double threshold = 0.0;      // 95th percentile of sample NN distances
  Eigen::MatrixXd samples_nm;  // n x n_muscle, normalized
  Eigen::VectorXd truth_nm;    // normalized ground truth muscle
};

// n posterior draws; covered iff the ground truth muscle condition is within
// the 95th percentile of the samples' own nearest-neighbor distances.
CoverageResult eval_coverage(const Bgn& bgn, const schema::Schema& s, const gait::GaitPattern& m,
                             const Eigen::VectorXd& gait_cond, const Eigen::VectorXd& skeleton,
                             const Eigen::VectorXd& truth_muscle, int n, std::uint64_t seed);

struct Embed2d {
  Eigen::MatrixXd coords;        // n x 2 sample projections
  Eigen::Vector2d truth_coords;
  double explained_first = 0.0;   // fraction of variance on each component
  double explained_second = 0.0;
};

// Principal-component projection of the normalized sample cloud; writes CSV
// (x,y,kind) and an SVG scatter with the ground truth highlighted.
Embed2d embed_2d(const Eigen::MatrixXd& samples_nm, const Eigen::VectorXd& truth_nm,
                 const std::string& csv_path, const std::string& svg_path);

struct AblationConfig {
  std::int64_t n_train = 4000;
  FgnConfig fgn;
  BgnConfig bgn;  // single full-mask expert per combination
  int n_corner_cases = 51;
  std::vector<std::uint64_t> seeds = {101, 202, 303};
};

struct AblationRow {
  std::string name;  // Uniform-Uniform, Uniform-Grid, Grid-Grid
  std::vector<gait::JointErrorStat> per_joint;
  double joint_avg_mean = 0.0;
};

struct AblationResult {
  std::vector<std::string> joint_names;
  std::vector<AblationRow> rows;
};

// Trains the three forward/backward sampling-strategy combinations per seed
// on equal-size datasets and evaluates realizability on a shared
// extreme-condition holdout (corner samples plus the pathology analogs).
AblationResult ablation_grid_vs_uniform(const Oracle& oracle, const AblationConfig& cfg);

// Report writers. Files never embed timestamps, so reruns are byte-identical.
void write_per_joint_csv(const std::string& path, const std::vector<std::string>& joints,
                         const std::vector<gait::JointErrorStat>& stats);
void write_forward_report(const std::string& dir, const ForwardEval& ev);
void write_realizability_report(const std::string& dir, const RealizabilityEval& ev);
void write_ablation_report(const std::string& path, const AblationResult& ab);

}  // namespace gaitnet
