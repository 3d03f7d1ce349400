#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <set>

#include "gaitnet/dataset.hpp"
#include "gaitnet/errors.hpp"
#include "gaitnet/parallel.hpp"
#include "helpers.hpp"

using namespace gaitnet;

namespace {

// minimal valid schema with 3 anatomy parameters (1 skeleton + 2 muscle)
schema::Schema tiny_schema() {
  schema::Schema s = schema::desk_default();
  s.name = "tiny";
  s.joints = {"pelvis"};
  s.params.clear();
  s.params.push_back({"scale_leg_l", schema::ParamGroup::skeleton, 0.8, 1.2, 1.0});
  s.params.push_back({"m_weakness", schema::ParamGroup::muscle, 0.5, 1.5, 1.0});
  s.params.push_back({"m_contracture", schema::ParamGroup::muscle, 0.5, 1.5, 1.0});
  s.params.push_back({"stride", schema::ParamGroup::gait, 0.7, 1.3, 1.0});
  s.params.push_back({"cadence", schema::ParamGroup::gait, 0.7, 1.3, 1.0});
  s.channels.clear();
  schema::Channel ch;
  ch.name = "pelvis_tilt";
  ch.joint = 0;
  ch.axis = 0;
  ch.base.cos1 = 0.2;
  ch.shape.c0 = 1.0;
  s.channels.push_back(ch);
  s.influence.clear();
  s.influence.push_back({1, 0, 0.3});
  s.redundancy.clear();
  s.inert_params = {2};
  s.validate();
  return s;
}

}  // namespace

TEST_CASE("uniform sampling statistics") {
  const schema::Schema s = schema::desk_default();
  CHECK(sample_uniform(0, s, 1).empty());

  const auto samples = sample_uniform(100000, s, 5);
  REQUIRE(samples.size() == 100000);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(s.n_params());
  for (const auto& c : samples) {
    for (int i = 0; i < s.n_params(); ++i) {
      CHECK(c[i] >= s.params[i].min);
      CHECK(c[i] <= s.params[i].max);
    }
    mean += c;
  }
  mean /= static_cast<double>(samples.size());
  for (int i = 0; i < s.n_params(); ++i) {
    const double mid = 0.5 * (s.params[i].min + s.params[i].max);
    const double sigma = (s.params[i].max - s.params[i].min) / std::sqrt(12.0);
    CHECK(std::abs(mean[i] - mid) < 3.0 * sigma / std::sqrt(100000.0));
  }

  // deterministic per seed
  const auto again = sample_uniform(100, s, 5);
  const auto other = sample_uniform(100, s, 6);
  CHECK((again[7] - sample_uniform(100, s, 5)[7]).norm() == 0.0);
  CHECK((again[7] - other[7]).norm() != 0.0);
}

TEST_CASE("grid sampling hits corners only") {
  const schema::Schema s = schema::desk_default();
  const auto samples = sample_grid(5000, s, 9);
  std::int64_t n_min = 0, n_total = 0;
  for (const auto& c : samples) {
    for (int i = 0; i < s.anatomy_dim(); ++i) {
      const bool is_min = c[i] == s.params[i].min;
      const bool is_max = c[i] == s.params[i].max;
      CHECK((is_min || is_max));
      n_min += is_min ? 1 : 0;
      ++n_total;
    }
    // gait conditions stay continuous within range
    for (int i = s.gait_begin(); i < s.n_params(); ++i) {
      CHECK(c[i] >= s.params[i].min);
      CHECK(c[i] <= s.params[i].max);
    }
  }
  const double frac = static_cast<double>(n_min) / static_cast<double>(n_total);
  CHECK(std::abs(frac - 0.5) < 3.0 * 0.5 / std::sqrt(static_cast<double>(n_total)));

  // small space: all 2^3 corners observed within 200 draws
  const schema::Schema tiny = tiny_schema();
  const auto tiny_samples = sample_grid(200, tiny, 3);
  std::set<std::array<bool, 3>> corners;
  for (const auto& c : tiny_samples)
    corners.insert({c[0] == tiny.params[0].max, c[1] == tiny.params[1].max,
                    c[2] == tiny.params[2].max});
  CHECK(corners.size() == 8);
}

TEST_CASE("generation is deterministic and order-preserving") {
  const schema::Schema s = tiny_schema();
  const Oracle oracle(s);

  // single reference condition: the stored gait is the base trajectory
  Eigen::VectorXd ref(s.n_params());
  ref << 1.0, 1.0, 1.0, 1.0, 1.0;
  const Dataset one = generate({ref}, oracle, Strategy::uniform, 0);
  CHECK(one.size() == 1);
  const gait::GaitPattern base = oracle.simulate(ref.head(3), ref.tail(2));
  for (int d = 0; d < one.gait_dim; ++d)
    CHECK(one.gaits[d] == static_cast<float>(base.data[d]));

  const auto conds = sample_uniform(2000, s, 17);
  set_max_threads(1);
  const Dataset serial = generate(conds, oracle, Strategy::uniform, 17);
  set_max_threads(2);
  const Dataset parallel = generate(conds, oracle, Strategy::uniform, 17);
  set_max_threads(1);
  CHECK(serial.size() == 2000);
  CHECK(serial.cond == parallel.cond);
  CHECK(serial.gaits == parallel.gaits);
}

TEST_CASE("split holdout") {
  const schema::Schema s = tiny_schema();
  const Oracle oracle(s);
  const Dataset ds = generate(sample_uniform(1000, s, 3), oracle, Strategy::uniform, 3);

  const auto [all_train, empty_holdout] = split_holdout(ds, 0, 1);
  CHECK(all_train.size() == 1000);
  CHECK(empty_holdout.size() == 0);

  const auto [train, holdout] = split_holdout(ds, 51, 8);
  CHECK(train.size() == 949);
  CHECK(holdout.size() == 51);

  // disjoint and exhaustive: every original row appears exactly once
  std::multiset<std::string> rows;
  auto row_key = [&](const Dataset& d, std::int64_t i) {
    return std::string(reinterpret_cast<const char*>(d.cond.data() + i * d.cond_dim),
                       sizeof(float) * d.cond_dim);
  };
  for (std::int64_t i = 0; i < train.size(); ++i) rows.insert(row_key(train, i));
  for (std::int64_t i = 0; i < holdout.size(); ++i) rows.insert(row_key(holdout, i));
  std::multiset<std::string> orig;
  for (std::int64_t i = 0; i < ds.size(); ++i) orig.insert(row_key(ds, i));
  CHECK(rows == orig);

  // deterministic
  const auto [train2, holdout2] = split_holdout(ds, 51, 8);
  CHECK(train.cond == train2.cond);
  CHECK(holdout.gaits == holdout2.gaits);

  // forced indices end up in the holdout
  const auto [train3, holdout3] = split_holdout(ds, 10, 8, {0, 999});
  bool found_first = false, found_last = false;
  for (std::int64_t i = 0; i < holdout3.size(); ++i) {
    if (row_key(holdout3, i) == row_key(ds, 0)) found_first = true;
    if (row_key(holdout3, i) == row_key(ds, 999)) found_last = true;
  }
  CHECK(found_first);
  CHECK(found_last);

  CHECK_THROWS_AS(split_holdout(ds, 2000, 1), config_error);
  CHECK_THROWS_AS(split_holdout(ds, 5, 1, {0, 1, 2, 3, 4, 5}), config_error);
}

TEST_CASE("dataset file round trip") {
  testutil::TempDir tmp("dataset_io");
  const schema::Schema s = tiny_schema();
  const Oracle oracle(s);
  Rng rng(77);

  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t n = static_cast<std::int64_t>(rng.below(40));
    const Dataset ds = generate(sample_uniform(n, s, rng.next_u64()), oracle,
                                trial % 2 ? Strategy::grid : Strategy::uniform, trial);
    const std::string path = tmp.file("ds_" + std::to_string(trial) + ".bgnd");
    write(ds, path);
    const Dataset back = read(path);
    CHECK(back.schema_hash == ds.schema_hash);
    CHECK(back.strategy == ds.strategy);
    CHECK(back.seed == ds.seed);
    CHECK(back.cond == ds.cond);
    CHECK(back.gaits == ds.gaits);

    // a rewrite is byte-identical
    const std::string path2 = tmp.file("ds_rw.bgnd");
    write(back, path2);
    CHECK(testutil::slurp(path) == testutil::slurp(path2));
  }

  // empty dataset round trips
  const Dataset empty = generate({}, oracle, Strategy::uniform, 1);
  write(empty, tmp.file("empty.bgnd"));
  CHECK(read(tmp.file("empty.bgnd")).size() == 0);

  // schema hash check
  const Dataset ds = generate(sample_uniform(3, s, 1), oracle, Strategy::uniform, 1);
  write(ds, tmp.file("hash.bgnd"));
  CHECK_THROWS_AS(read(tmp.file("hash.bgnd"), ds.schema_hash + 1), data_error);
  CHECK(read(tmp.file("hash.bgnd"), ds.schema_hash).size() == 3);

  // truncation and version errors
  {
    const std::string all = testutil::slurp(tmp.file("hash.bgnd"));
    std::ofstream out(tmp.file("trunc.bgnd"), std::ios::binary);
    out.write(all.data(), static_cast<std::streamsize>(all.size() - 7));
  }
  CHECK_THROWS_AS(read(tmp.file("trunc.bgnd")), data_error);
  {
    std::string all = testutil::slurp(tmp.file("hash.bgnd"));
    all[4] = 42;
    std::ofstream out(tmp.file("ver.bgnd"), std::ios::binary);
    out.write(all.data(), static_cast<std::streamsize>(all.size()));
  }
  CHECK_THROWS_AS(read(tmp.file("ver.bgnd")), data_error);

  // csv export emits one line per tuple plus header
  export_csv(ds, s, tmp.file("ds.csv"));
  const std::string csv = testutil::slurp(tmp.file("ds.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
