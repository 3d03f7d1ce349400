#pragma once

#include <iosfwd>
#include <string>

#include "gaitnet/config.hpp"

namespace gaitnet::cli {

// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical divergence.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

// Desk-analog acceptance thresholds; the evaluate command and the acceptance
// suite share these pinned values.
namespace criteria {
inline constexpr double kForwardMeanDeg = 8.0;
inline constexpr double kRealizabilityDeg = 10.0;
inline constexpr int kRealizabilityMinPass = 45;   // of 51 holdout cases
inline constexpr double kCoverageFraction = 0.80;  // with n=1000 samples
inline constexpr double kMultimodalDistance = 0.15;
inline constexpr double kInertTolerance = 0.10;
}  // namespace criteria

// All recognized config keys; anything else is a hard error.
const std::vector<std::string>& known_config_keys();

void cmd_generate(const Config& cfg, const std::string& out_path, std::ostream& log);
void cmd_train_forward(const Config& cfg, const std::string& dataset_path,
                       const std::string& out_weights, std::ostream& log);
void cmd_train_backward(const Config& cfg, const std::string& dataset_path,
                        const std::string& fgn_path, const std::string& out_bundle,
                        std::ostream& log);

struct PredictArgs {
  std::string bundle_path;
  std::string fgn_path;
  std::string gait_path;     // BGNG file; or use dataset_path+index
  std::string dataset_path;
  std::int64_t index = -1;
  int n_samples = 1000;
  std::uint64_t seed = 17;
  std::string out_dir;
};
void cmd_predict(const Config& cfg, const PredictArgs& args, std::ostream& log);

struct EvaluateArgs {
  std::string dataset_path;
  std::string fgn_path;
  std::string bundle_path;
  std::string out_dir;
  bool run_ablation = false;
};
void cmd_evaluate(const Config& cfg, const EvaluateArgs& args, std::ostream& log);

struct ExportGaitArgs {
  std::string dataset_path;
  std::int64_t index = -1;
  std::string preset;  // pathology preset name, alternative to dataset+index
  std::string out_path;
};
void cmd_export_gait(const Config& cfg, const ExportGaitArgs& args, std::ostream& log);

// Full argv entry point used by the binary; maps errors to exit codes.
int run(int argc, char** argv);

// BGNG gait file: magic, u32 version, u64 schema hash, f64 skeleton, f64
// gait condition, f64 gait pattern.
inline constexpr std::uint32_t kGaitFormatVersion = 1;

}  // namespace gaitnet::cli
