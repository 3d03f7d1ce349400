#include <doctest.h>

#include <cstring>

#include "gaitnet/errors.hpp"
#include "gaitnet/oracle.hpp"
#include "gaitnet/schema.hpp"
#include "helpers.hpp"

using namespace gaitnet;

namespace {

Eigen::VectorXd random_anatomy(const schema::Schema& s, Rng& rng, double margin = 0.0) {
  Eigen::VectorXd a(s.anatomy_dim());
  for (int i = 0; i < s.anatomy_dim(); ++i) {
    const auto& p = s.params[i];
    const double pad = margin * (p.max - p.min);
    a[i] = rng.uniform(p.min + pad, p.max - pad);
  }
  return a;
}

Eigen::VectorXd random_gait_cond(const schema::Schema& s, Rng& rng) {
  Eigen::VectorXd g(s.n_gait());
  for (int i = 0; i < s.n_gait(); ++i) {
    const auto& p = s.params[s.gait_begin() + i];
    g[i] = rng.uniform(p.min, p.max);
  }
  return g;
}

}  // namespace

TEST_CASE("desk schema shape") {
  const schema::Schema s = schema::desk_default();
  CHECK(s.n_joints() == 9);
  CHECK(s.n_skeleton() == 6);
  CHECK(s.n_muscle() == 32);
  CHECK(s.n_gait() == 2);
  CHECK(s.n_params() == 40);
  CHECK(s.anatomy_dim() == 38);
  CHECK(gait::PoseLayout{s.n_joints()}.pose_dim() == 57);
  CHECK(gait::PoseLayout{s.n_joints()}.gait_dim() == 3420);
  CHECK(s.redundancy.size() == 3);
  CHECK(s.inert_params.size() == 2);

  // valid ranges table
  const Oracle oracle(s);
  for (const auto& p : oracle.valid_ranges()) {
    CHECK(p.min < p.max);
    CHECK(p.ref >= p.min);
    CHECK(p.ref <= p.max);
  }
}

TEST_CASE("schema json round trip and hashing") {
  const schema::Schema s = schema::desk_default();
  const std::string text = schema::to_json(s);
  const schema::Schema back = schema::from_json(text);
  CHECK(schema::to_json(back) == text);
  CHECK(schema::hash(back) == schema::hash(s));

  schema::Schema tweaked = s;
  tweaked.influence[0].coeff += 1e-6;
  // certified redundancy now violated
  CHECK_THROWS_AS(tweaked.validate(), config_error);
  tweaked.influence[1].coeff += 1e-6;  // restore the matched column
  tweaked.validate();
  CHECK(schema::hash(tweaked) != schema::hash(s));

  testutil::TempDir tmp("schema");
  schema::save(s, tmp.file("s.json"));
  const schema::Schema loaded = schema::load(tmp.file("s.json"));
  CHECK(schema::hash(loaded) == schema::hash(s));

  CHECK_THROWS_AS(schema::from_json("not json"), data_error);
  CHECK_THROWS_AS(schema::from_json("{}"), data_error);
}

TEST_CASE("shipped schema file pins the desk constants") {
  const schema::Schema shipped =
      schema::load(std::string(GAITNET_SOURCE_DIR) + "/configs/desk_schema.json");
  const schema::Schema code = schema::desk_default();
  CHECK(schema::to_json(shipped) == schema::to_json(code));
  CHECK(schema::hash(shipped) == schema::hash(code));
}

TEST_CASE("oracle reference condition reproduces the base trajectory") {
  const schema::Schema s = schema::desk_default();
  const Oracle oracle(s);
  const Eigen::VectorXd ref = s.anatomy_ref();
  Eigen::VectorXd gait_ref(2);
  gait_ref << 1.0, 1.0;
  const gait::GaitPattern m = oracle.simulate(ref, gait_ref);

  // independent hand evaluation for a few frames and joints
  for (int k : {0, 7, 31, 59}) {
    const double phi = gait::frame_phase(k);
    const double psi = std::fmod(phi, 2.0 * EIGEN_PI);
    const gait::Pose pose = m.frame(k);

    // pelvis: tilt about x plus the two roll channels about z
    const double tilt = 0.10 + 0.02 * std::cos(2 * psi);
    const double roll = 0.025 * std::sin(psi) + 0.3 * s.asym_eps * std::sin(0.5 * phi + 0.9) +
                        0.025 * std::sin(psi) + 0.3 * s.asym_eps * std::sin(0.5 * phi + 4.1);
    const Eigen::Matrix3d pelvis = gait::rot_x(tilt) * gait::rot_z(roll);
    CHECK((gait::rot_decode(pose.joint(0)) - pelvis).norm() < 1e-12);

    // left hip flexion (asym weight 1, phase 0.5), zero torsion
    const double hip =
        0.10 + 0.35 * std::cos(psi) + 0.05 * std::sin(psi) + 0.03 * std::cos(2 * psi) +
        s.asym_eps * std::sin(0.5 * phi + 0.5);
    CHECK((gait::rot_decode(pose.joint(2)) - gait::rot_x(hip)).norm() < 1e-12);

    // root height and speed at reference scales
    CHECK(pose.h() == doctest::Approx(0.92 + 0.015 * std::cos(2 * psi + 0.3)).epsilon(1e-12));
    CHECK(pose.v()[0] ==
          doctest::Approx(1.25 * (1.0 + 0.08 * std::cos(2 * psi))).epsilon(1e-12));
  }

  // determinism: bit-identical repeat
  const gait::GaitPattern m2 = oracle.simulate(ref, gait_ref);
  CHECK(std::memcmp(m.data.data(), m2.data.data(), sizeof(double) * m.data.size()) == 0);
}

TEST_CASE("certified redundancy directions") {
  const schema::Schema s = schema::desk_default();
  const Oracle oracle(s);
  Eigen::VectorXd gait_ref(2);
  gait_ref << 1.0, 1.0;

  // trendelenburg analog: left abductor weakness vs contralateral adductor
  // contracture, bit-identical patterns
  Eigen::VectorXd weak = s.anatomy_ref();
  weak[s.find_param("hip_abductor_l_weakness")] = 0.5;
  const Eigen::VectorXd contracture = oracle.redundant_pair(weak, 0, 0.5);
  CHECK(contracture[s.find_param("hip_abductor_l_weakness")] == 1.0);
  CHECK(contracture[s.find_param("hip_adductor_r_contracture")] == 0.5);
  const gait::GaitPattern ma = oracle.simulate(weak, gait_ref);
  const gait::GaitPattern mb = oracle.simulate(contracture, gait_ref);
  CHECK(std::memcmp(ma.data.data(), mb.data.data(), sizeof(double) * ma.data.size()) == 0);

  // magnitude zero keeps the condition
  const Eigen::VectorXd same = oracle.redundant_pair(weak, 0, 0.0);
  CHECK((same - weak).norm() == 0.0);

  // leaving the range fails
  CHECK_THROWS_AS(oracle.redundant_pair(weak, 0, 10.0), data_error);
  CHECK_THROWS_AS(oracle.redundant_pair(weak, 99, 0.1), config_error);

  // every certified direction: 100 random (c, eps) pairs stay within 1e-12
  Rng rng(31);
  for (int dir = 0; dir < static_cast<int>(s.redundancy.size()); ++dir) {
    for (int trial = 0; trial < 34; ++trial) {
      const Eigen::VectorXd c = random_anatomy(s, rng, 0.3);
      const Eigen::VectorXd g = random_gait_cond(s, rng);
      const double eps = rng.uniform(-0.15, 0.15);
      const Eigen::VectorXd c2 = oracle.redundant_pair(c, dir, eps);
      const gait::GaitPattern p1 = oracle.simulate(c, g);
      const gait::GaitPattern p2 = oracle.simulate(c2, g);
      CHECK((p1.data - p2.data).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  // the ankle pair makes the foot-drop and equinus presets gait-identical
  const auto presets = oracle.pathology_presets();
  const gait::GaitPattern fd = oracle.simulate(presets[1].anatomy, presets[1].gait_cond);
  const gait::GaitPattern eq = oracle.simulate(presets[2].anatomy, presets[2].gait_cond);
  CHECK(presets[1].name == "foot_drop");
  CHECK(presets[2].name == "equinus");
  CHECK((fd.data - eq.data).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("monotone channel response") {
  const schema::Schema s = schema::desk_default();
  const Oracle oracle(s);
  Eigen::VectorXd gait_ref(2);
  gait_ref << 1.0, 1.0;
  Rng rng(32);

  for (const auto& inf : s.influence) {
    if (inf.param >= s.anatomy_dim()) continue;
    const Eigen::VectorXd base = random_anatomy(s, rng, 0.05);
    double prev = 0.0;
    bool first = true;
    bool increasing = false;
    for (int step = 0; step < 10; ++step) {
      Eigen::VectorXd c = base;
      const auto& p = s.params[inf.param];
      c[inf.param] = p.min + (p.max - p.min) * step / 9.0;
      const double proj = oracle.channel_projection(inf.channel, c, gait_ref);
      if (!first) {
        if (step == 1)
          increasing = proj > prev;
        else
          CHECK((proj > prev) == increasing);
        CHECK(proj != prev);
      }
      prev = proj;
      first = false;
    }
  }

  // weaker left plantarflexors reduce push-off amplitude
  const int ch = s.find_channel("ankle_flex_l");
  const int pf = s.find_param("ankle_plantarflexor_l_weakness");
  double prev_pushoff = -1e300;
  for (int step = 0; step < 10; ++step) {
    Eigen::VectorXd c = s.anatomy_ref();
    c[pf] = 0.5 + step / 9.0;  // weakest to strongest
    const double pushoff = -oracle.channel_projection(ch, c, gait_ref);
    CHECK(pushoff > prev_pushoff);
    prev_pushoff = pushoff;
  }
}

TEST_CASE("inert parameters have no influence") {
  const schema::Schema s = schema::desk_default();
  const Oracle oracle(s);
  Rng rng(33);
  Eigen::VectorXd gait_ref(2);
  gait_ref << 1.0, 1.0;
  for (int idx : s.inert_params) {
    const Eigen::VectorXd base = random_anatomy(s, rng, 0.1);
    Eigen::VectorXd moved = base;
    moved[idx] = s.params[idx].min;
    Eigen::VectorXd moved2 = base;
    moved2[idx] = s.params[idx].max;
    const gait::GaitPattern p0 = oracle.simulate(base, gait_ref);
    const gait::GaitPattern p1 = oracle.simulate(moved, gait_ref);
    const gait::GaitPattern p2 = oracle.simulate(moved2, gait_ref);
    CHECK((p0.data - p1.data).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p0.data - p2.data).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("lipschitz bound holds on random pairs") {
  const schema::Schema s = schema::desk_default();
  const Oracle oracle(s);
  const double L = oracle.lipschitz_bound();
  CHECK(L > 0.0);
  CHECK(std::isfinite(L));

  const Eigen::VectorXd lo = s.param_min();
  const Eigen::VectorXd hi = s.param_max();
  Rng rng(34);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd c1(s.n_params()), c2(s.n_params());
    for (int i = 0; i < s.n_params(); ++i) {
      c1[i] = rng.uniform(lo[i], hi[i]);
      c2[i] = rng.uniform(lo[i], hi[i]);
    }
    const gait::GaitPattern p1 =
        oracle.simulate(c1.head(s.anatomy_dim()), c1.tail(s.n_gait()));
    const gait::GaitPattern p2 =
        oracle.simulate(c2.head(s.anatomy_dim()), c2.tail(s.n_gait()));
    const double dist = (p1.data - p2.data).norm();
    const double cond_dist = (gait::normalize_condition(c1, lo, hi) -
                              gait::normalize_condition(c2, lo, hi))
                                 .norm();
    CHECK(dist <= L * cond_dist);
  }
}

TEST_CASE("oracle rejects out-of-range conditions") {
  const schema::Schema s = schema::desk_default();
  const Oracle oracle(s);
  Eigen::VectorXd bad = s.anatomy_ref();
  bad[0] = 5.0;
  Eigen::VectorXd gait_ref(2);
  gait_ref << 1.0, 1.0;
  CHECK_THROWS_AS(oracle.simulate(bad, gait_ref), data_error);
  Eigen::VectorXd bad_gait(2);
  bad_gait << 1.0, 2.5;
  CHECK_THROWS_AS(oracle.simulate(s.anatomy_ref(), bad_gait), data_error);
}

TEST_CASE("pathology presets") {
  const schema::Schema s = schema::desk_default();
  const Oracle oracle(s);
  const auto presets = oracle.pathology_presets();
  REQUIRE(presets.size() == 7);
  CHECK(presets[0].name == "normal");
  CHECK(presets[5].name == "trendelenburg");
  for (const auto& p : presets) {
    // all presets simulate without range errors
    const gait::GaitPattern m = oracle.simulate(p.anatomy, p.gait_cond);
    CHECK(m.data.allFinite());
  }
  // waddling differs from both normal and trendelenburg
  const auto gp = [&](int i) { return oracle.simulate(presets[i].anatomy, presets[i].gait_cond); };
  CHECK((gp(6).data - gp(0).data).cwiseAbs().maxCoeff() > 1e-3);
  CHECK((gp(6).data - gp(5).data).cwiseAbs().maxCoeff() > 1e-3);
}
