#include "gaitnet/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "gaitnet/errors.hpp"
#include "gaitnet/io.hpp"
#include "gaitnet/parallel.hpp"
#include "gaitnet/rng.hpp"

namespace gaitnet {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::uniform: return "uniform";
    case Strategy::grid: return "grid";
    case Strategy::mixed: return "mixed";
  }
  return "?";
}

Strategy strategy_from(const std::string& name) {
  if (name == "uniform") return Strategy::uniform;
  if (name == "grid") return Strategy::grid;
  if (name == "mixed") return Strategy::mixed;
  throw config_error("unknown sampling strategy '" + name + "' (expected uniform|grid)");
}

Eigen::VectorXd Dataset::condition(std::int64_t i) const {
  Eigen::VectorXd v(cond_dim);
  for (int d = 0; d < cond_dim; ++d) v[d] = cond[i * cond_dim + d];
  return v;
}

Eigen::VectorXd Dataset::anatomy(std::int64_t i, int anatomy_dim) const {
  Eigen::VectorXd v(anatomy_dim);
  for (int d = 0; d < anatomy_dim; ++d) v[d] = cond[i * cond_dim + d];
  return v;
}

Eigen::VectorXd Dataset::gait_cond(std::int64_t i, int anatomy_dim) const {
  Eigen::VectorXd v(cond_dim - anatomy_dim);
  for (int d = anatomy_dim; d < cond_dim; ++d) v[d - anatomy_dim] = cond[i * cond_dim + d];
  return v;
}

Eigen::VectorXd Dataset::gait(std::int64_t i) const {
  Eigen::VectorXd v(gait_dim);
  for (int d = 0; d < gait_dim; ++d) v[d] = gaits[i * gait_dim + d];
  return v;
}

std::vector<Eigen::VectorXd> sample_uniform(std::int64_t n, const schema::Schema& s,
                                            std::uint64_t seed) {
  if (n < 0) throw config_error("sample_uniform: negative count");
  Rng rng(derive_seed(seed, 0x756e6966ULL));
  const int d = s.n_params();
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (std::int64_t i = 0; i < n; ++i) {
    Eigen::VectorXd c(d);
    for (int k = 0; k < d; ++k) c[k] = rng.uniform(s.params[k].min, s.params[k].max);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Eigen::VectorXd> sample_grid(std::int64_t n, const schema::Schema& s,
                                         std::uint64_t seed) {
  if (n < 0) throw config_error("sample_grid: negative count");
  Rng rng(derive_seed(seed, 0x67726964ULL));
  const int d = s.n_params();
  const int anatomy = s.anatomy_dim();
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (std::int64_t i = 0; i < n; ++i) {
    Eigen::VectorXd c(d);
    for (int k = 0; k < anatomy; ++k)
      c[k] = (rng.next_u64() & 1) ? s.params[k].max : s.params[k].min;
    for (int k = anatomy; k < d; ++k) c[k] = rng.uniform(s.params[k].min, s.params[k].max);
    out.push_back(std::move(c));
  }
  return out;
}

Dataset generate(const std::vector<Eigen::VectorXd>& conditions, const Oracle& oracle,
                 Strategy tag, std::uint64_t seed) {
  const auto& s = oracle.schema();
  Dataset ds;
  ds.schema_hash = schema::hash(s);
  ds.strategy = tag;
  ds.seed = seed;
  ds.cond_dim = s.n_params();
  ds.gait_dim = oracle.pose_layout().gait_dim();
  const std::int64_t n = static_cast<std::int64_t>(conditions.size());
  ds.cond.resize(n * ds.cond_dim);
  ds.gaits.resize(n * ds.gait_dim);

  parallel_blocks(n, [&](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) {
      const Eigen::VectorXd& c = conditions[i];
      if (c.size() != ds.cond_dim) throw config_error("generate: condition dimension mismatch");
      const auto m =
          oracle.simulate(c.head(s.anatomy_dim()), c.tail(s.n_gait()));
      for (int d = 0; d < ds.cond_dim; ++d)
        ds.cond[i * ds.cond_dim + d] = static_cast<float>(c[d]);
      for (int d = 0; d < ds.gait_dim; ++d)
        ds.gaits[i * ds.gait_dim + d] = static_cast<float>(m.data[d]);
    }
  });
  return ds;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, std::int64_t n_holdout,
                                          std::uint64_t seed,
                                          const std::vector<std::int64_t>& forced_holdout) {
  const std::int64_t n = ds.size();
  if (n_holdout < 0 || n_holdout > n)
    throw config_error("split_holdout: holdout size " + std::to_string(n_holdout) +
                       " out of range for dataset of " + std::to_string(n));
  if (static_cast<std::int64_t>(forced_holdout.size()) > n_holdout)
    throw config_error("split_holdout: more forced indices than holdout slots");

  std::vector<char> in_holdout(n, 0);
  for (std::int64_t idx : forced_holdout) {
    if (idx < 0 || idx >= n) throw config_error("split_holdout: forced index out of range");
    in_holdout[idx] = 1;
  }
  std::int64_t placed = std::count(in_holdout.begin(), in_holdout.end(), char(1));

  // Fisher-Yates over the remaining indices, take what is still needed
  std::vector<std::int64_t> rest;
  rest.reserve(n - placed);
  for (std::int64_t i = 0; i < n; ++i)
    if (!in_holdout[i]) rest.push_back(i);
  Rng rng(derive_seed(seed, 0x73706c69ULL));
  for (std::int64_t i = static_cast<std::int64_t>(rest.size()) - 1; i >= 0 && placed < n_holdout;
       --i) {
    const std::int64_t j = static_cast<std::int64_t>(rng.below(i + 1));
    std::swap(rest[i], rest[j]);
    in_holdout[rest[i]] = 1;
    ++placed;
  }

  auto take = [&](bool holdout) {
    Dataset part;
    part.schema_hash = ds.schema_hash;
    part.strategy = ds.strategy;
    part.seed = ds.seed;
    part.cond_dim = ds.cond_dim;
    part.gait_dim = ds.gait_dim;
    for (std::int64_t i = 0; i < n; ++i) {
      if ((in_holdout[i] != 0) != holdout) continue;
      part.cond.insert(part.cond.end(), ds.cond.begin() + i * ds.cond_dim,
                       ds.cond.begin() + (i + 1) * ds.cond_dim);
      part.gaits.insert(part.gaits.end(), ds.gaits.begin() + i * ds.gait_dim,
                        ds.gaits.begin() + (i + 1) * ds.gait_dim);
    }
    return part;
  };
  return {take(false), take(true)};
}

void write(const Dataset& ds, const std::string& path) {
  BinWriter w(path);
  w.magic("BGND");
  w.u32(kDatasetFormatVersion);
  w.u64(ds.schema_hash);
  w.u8(static_cast<std::uint8_t>(ds.strategy));
  w.u64(ds.seed);
  w.u64(static_cast<std::uint64_t>(ds.size()));
  w.u32(static_cast<std::uint32_t>(ds.cond_dim));
  w.u32(static_cast<std::uint32_t>(ds.gait_dim));
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    w.f32s(ds.cond.data() + i * ds.cond_dim, ds.cond_dim);
    w.f32s(ds.gaits.data() + i * ds.gait_dim, ds.gait_dim);
  }
  w.close();
}

Dataset read(const std::string& path) {
  BinReader r(path);
  r.expect_magic("BGND", "BGND dataset");
  const std::uint32_t version = r.u32();
  if (version != kDatasetFormatVersion)
    throw data_error(path + ": dataset version " + std::to_string(version) +
                     " unsupported (supported: " + std::to_string(kDatasetFormatVersion) + ")");
  Dataset ds;
  ds.schema_hash = r.u64();
  const std::uint8_t strat = r.u8();
  if (strat > 2) throw data_error(path + ": unknown strategy tag");
  ds.strategy = static_cast<Strategy>(strat);
  ds.seed = r.u64();
  const std::uint64_t n = r.u64();
  ds.cond_dim = static_cast<int>(r.u32());
  ds.gait_dim = static_cast<int>(r.u32());
  if (ds.cond_dim <= 0 || ds.gait_dim <= 0 || n > (1ULL << 32))
    throw data_error(path + ": implausible dataset header");
  ds.cond.resize(n * ds.cond_dim);
  ds.gaits.resize(n * ds.gait_dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    r.f32s(ds.cond.data() + i * ds.cond_dim, ds.cond_dim);
    r.f32s(ds.gaits.data() + i * ds.gait_dim, ds.gait_dim);
  }
  r.expect_eof();
  return ds;
}

Dataset read(const std::string& path, std::uint64_t expected_schema_hash) {
  Dataset ds = read(path);
  if (ds.schema_hash != expected_schema_hash)
    throw data_error(path + ": schema hash mismatch (file " + std::to_string(ds.schema_hash) +
                     ", expected " + std::to_string(expected_schema_hash) + ")");
  return ds;
}

void export_csv(const Dataset& ds, const schema::Schema& s, const std::string& path) {
  if (ds.cond_dim != s.n_params())
    throw data_error("export_csv: dataset does not match schema parameter count");
  std::ofstream out(path);
  if (!out) throw data_error("cannot open for writing: " + path);
  out << "index";
  for (const auto& p : s.params) out << "," << p.name;
  for (int d = 0; d < ds.gait_dim; ++d) out << ",g" << d;
  out << "\n";
  out.precision(9);
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    out << i;
    for (int d = 0; d < ds.cond_dim; ++d) out << "," << ds.cond[i * ds.cond_dim + d];
    for (int d = 0; d < ds.gait_dim; ++d) out << "," << ds.gaits[i * ds.gait_dim + d];
    out << "\n";
  }
  if (!out) throw data_error("write failed: " + path);
}

}  // namespace gaitnet
