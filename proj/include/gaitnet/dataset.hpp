#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gaitnet/oracle.hpp"

namespace gaitnet {

enum class Strategy : std::uint8_t { uniform = 0, grid = 1, mixed = 2 };

const char* strategy_name(Strategy s);
Strategy strategy_from(const std::string& name);  // throws config_error

// Condition-gait tuples produced by the oracle. Payload is float32 exactly
// as stored on disk; accessors upcast.
struct Dataset {
  std::uint64_t schema_hash = 0;
  Strategy strategy = Strategy::uniform;
  std::uint64_t seed = 0;
  int cond_dim = 0;  // anatomy + gait condition
  int gait_dim = 0;
  std::vector<float> cond;   // n x cond_dim, row-major
  std::vector<float> gaits;  // n x gait_dim, row-major

  std::int64_t size() const {
    return cond_dim == 0 ? 0 : static_cast<std::int64_t>(cond.size()) / cond_dim;
  }
  Eigen::VectorXd condition(std::int64_t i) const;               // full cond row
  Eigen::VectorXd anatomy(std::int64_t i, int anatomy_dim) const;
  Eigen::VectorXd gait_cond(std::int64_t i, int anatomy_dim) const;
  Eigen::VectorXd gait(std::int64_t i) const;
};

// Every parameter i.i.d. uniform on its range.
std::vector<Eigen::VectorXd> sample_uniform(std::int64_t n, const schema::Schema& s,
                                            std::uint64_t seed);

// Anatomy parameters drawn from {min, max} with probability 1/2 each (i.i.d.
// corners, with replacement); gait conditions stay continuous uniform so the
// phase/speed coverage does not degenerate.
std::vector<Eigen::VectorXd> sample_grid(std::int64_t n, const schema::Schema& s,
                                         std::uint64_t seed);

// One tuple per condition via the oracle, output order = input order
// regardless of thread count.
Dataset generate(const std::vector<Eigen::VectorXd>& conditions, const Oracle& oracle,
                 Strategy tag, std::uint64_t seed);

// Disjoint, exhaustive, deterministic split. Indices in `forced_holdout`
// always land in the holdout.
std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, std::int64_t n_holdout,
                                          std::uint64_t seed,
                                          const std::vector<std::int64_t>& forced_holdout = {});

// BGND file: magic, u32 version, schema hash, counts, dims, float32 payload.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;
void write(const Dataset& ds, const std::string& path);
Dataset read(const std::string& path);
Dataset read(const std::string& path, std::uint64_t expected_schema_hash);

void export_csv(const Dataset& ds, const schema::Schema& s, const std::string& path);

}  // namespace gaitnet
