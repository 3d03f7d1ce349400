#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gaitnet/bgn.hpp"
#include "gaitnet/dataset.hpp"
#include "gaitnet/errors.hpp"
#include "gaitnet/eval.hpp"
#include "gaitnet/fgn.hpp"
#include "gaitnet/gait.hpp"
#include "gaitnet/nn.hpp"
#include "gaitnet/oracle.hpp"
#include "gaitnet/parallel.hpp"
#include "gaitnet/rotation.hpp"
#include "gaitnet/schema.hpp"

namespace py = pybind11;
using namespace gaitnet;

namespace {

gait::GaitPattern pattern_from_flat(const schema::Schema& s, const Eigen::VectorXd& flat) {
  return gait::GaitPattern(gait::PoseLayout{s.n_joints()}, flat);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "bidirectional gait model core: oracle, datasets, forward/backward networks";

  py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<data_error>(m, "DataError", PyExc_IOError);
  py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);

  m.attr("FRAMES") = gait::kFrames;
  m.def("set_max_threads", &set_max_threads, py::arg("n"));

  // ---- schema
  py::class_<schema::Schema>(m, "Schema")
      .def_property_readonly("name", [](const schema::Schema& s) { return s.name; })
      .def_property_readonly("joints", [](const schema::Schema& s) { return s.joints; })
      .def_property_readonly("n_params", &schema::Schema::n_params)
      .def_property_readonly("n_muscle", &schema::Schema::n_muscle)
      .def_property_readonly("n_skeleton", &schema::Schema::n_skeleton)
      .def_property_readonly("n_gait", &schema::Schema::n_gait)
      .def_property_readonly("anatomy_dim", &schema::Schema::anatomy_dim)
      .def_property_readonly("param_names",
                             [](const schema::Schema& s) {
                               std::vector<std::string> names;
                               for (const auto& p : s.params) names.push_back(p.name);
                               return names;
                             })
      .def_property_readonly("param_min", &schema::Schema::param_min)
      .def_property_readonly("param_max", &schema::Schema::param_max)
      .def_property_readonly("param_ref", &schema::Schema::param_ref)
      .def_property_readonly("inert_params",
                             [](const schema::Schema& s) { return s.inert_params; })
      .def("find_param", &schema::Schema::find_param, py::arg("name"))
      .def("to_json", &schema::to_json);

  m.def("desk_schema", &schema::desk_default);
  m.def("load_schema", &schema::load, py::arg("path"));
  m.def("save_schema", &schema::save, py::arg("schema"), py::arg("path"));
  m.def("schema_hash", &schema::hash, py::arg("schema"));

  // ---- rotations and metrics
  m.def("rot_encode", &gait::rot_encode, py::arg("rotation"));
  m.def("rot_decode", [](const Eigen::VectorXd& q) { return gait::rot_decode(gait::Vector6d(q)); },
        py::arg("code"));
  m.def(
      "d_rot",
      [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return gait::d_rot(gait::Vector6d(a), gait::Vector6d(b));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "joint_angle_error_deg",
      [](const schema::Schema& s, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        const auto stats =
            gait::joint_angle_error_deg(pattern_from_flat(s, a), pattern_from_flat(s, b));
        std::vector<std::pair<double, double>> out;
        for (const auto& st : stats) out.emplace_back(st.mean, st.variance);
        return out;
      },
      py::arg("schema"), py::arg("a"), py::arg("b"));
  m.def(
      "d_pose",
      [](const schema::Schema& s, const Eigen::VectorXd& a, const Eigen::VectorXd& b, double wh,
         double wv) {
        const gait::PoseLayout layout{s.n_joints()};
        return gait::d_pose(gait::Pose(layout, a), gait::Pose(layout, b), wh, wv);
      },
      py::arg("schema"), py::arg("a"), py::arg("b"), py::arg("w_h") = 1.0, py::arg("w_v") = 1.0);
  m.def(
      "d_gait",
      [](const schema::Schema& s, const Eigen::VectorXd& a, const Eigen::VectorXd& b, double wh,
         double wv) {
        return gait::d_gait(pattern_from_flat(s, a), pattern_from_flat(s, b), wh, wv);
      },
      py::arg("schema"), py::arg("a"), py::arg("b"), py::arg("w_h") = 1.0, py::arg("w_v") = 1.0);
  m.def("normalize_condition", &gait::normalize_condition, py::arg("c"), py::arg("lo"),
        py::arg("hi"));
  m.def("denormalize_condition", &gait::denormalize_condition, py::arg("n"), py::arg("lo"),
        py::arg("hi"));
  m.def("normalized_distance", &normalized_distance, py::arg("a"), py::arg("b"));

  // ---- oracle
  py::class_<Oracle>(m, "Oracle")
      .def(py::init<schema::Schema>(), py::arg("schema"))
      .def("lipschitz_bound", &Oracle::lipschitz_bound)
      .def("redundant_pair", &Oracle::redundant_pair, py::arg("anatomy"), py::arg("direction"),
           py::arg("magnitude"))
      .def("channel_projection", &Oracle::channel_projection, py::arg("channel"),
           py::arg("anatomy"), py::arg("gait_cond"))
      .def("pathology_presets", [](const Oracle& o) {
        std::vector<std::tuple<std::string, Eigen::VectorXd, Eigen::VectorXd>> out;
        for (const auto& p : o.pathology_presets())
          out.emplace_back(p.name, p.anatomy, p.gait_cond);
        return out;
      });
  m.def(
      "simulate",
      [](const Oracle& o, const Eigen::VectorXd& anatomy, const Eigen::VectorXd& gait_cond) {
        return o.simulate(anatomy, gait_cond).data;
      },
      py::arg("oracle"), py::arg("anatomy"), py::arg("gait_cond"));

  // ---- dataset
  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("size", &Dataset::size)
      .def_property_readonly("schema_hash", [](const Dataset& d) { return d.schema_hash; })
      .def_property_readonly("cond_dim", [](const Dataset& d) { return d.cond_dim; })
      .def_property_readonly("gait_dim", [](const Dataset& d) { return d.gait_dim; })
      .def("condition", &Dataset::condition, py::arg("i"))
      .def("gait", &Dataset::gait, py::arg("i"));
  m.def("sample_uniform", &sample_uniform, py::arg("n"), py::arg("schema"), py::arg("seed"));
  m.def("sample_grid", &sample_grid, py::arg("n"), py::arg("schema"), py::arg("seed"));
  m.def(
      "generate",
      [](const std::vector<Eigen::VectorXd>& conds, const Oracle& oracle,
         const std::string& strategy, std::uint64_t seed) {
        return generate(conds, oracle, strategy_from(strategy), seed);
      },
      py::arg("conditions"), py::arg("oracle"), py::arg("strategy") = "uniform",
      py::arg("seed") = 0);
  m.def(
      "split_holdout",
      [](const Dataset& ds, std::int64_t n, std::uint64_t seed,
         const std::vector<std::int64_t>& forced) { return split_holdout(ds, n, seed, forced); },
      py::arg("dataset"), py::arg("n_holdout"), py::arg("seed"),
      py::arg("forced") = std::vector<std::int64_t>{});
  m.def(
      "save_dataset",
      [](const Dataset& ds, const std::string& path) { gaitnet::write(ds, path); },
      py::arg("dataset"), py::arg("path"));
  m.def(
      "load_dataset", [](const std::string& path) { return gaitnet::read(path); },
      py::arg("path"));

  // ---- networks
  py::class_<nn::Network>(m, "Network")
      .def_property_readonly("input_dim", &nn::Network::input_dim)
      .def_property_readonly("output_dim", &nn::Network::output_dim)
      .def_property_readonly("param_count", &nn::Network::param_count)
      .def_property(
          "frozen", [](const nn::Network& n) { return n.frozen; },
          [](nn::Network& n, bool v) { n.frozen = v; });
  py::class_<nn::AdamState>(m, "AdamState")
      .def_property_readonly("step_count", [](const nn::AdamState& a) { return a.step_count; });

  m.def(
      "mlp_new",
      [](const std::vector<int>& sizes, const std::string& hidden, const std::string& output,
         std::uint64_t seed) {
        const auto h = hidden == "relu" ? nn::HiddenAct::relu : nn::HiddenAct::leaky_relu;
        const auto o = output == "linear" ? nn::OutputAct::linear : nn::OutputAct::sigmoid;
        return nn::mlp_new(sizes, h, o, seed);
      },
      py::arg("sizes"), py::arg("hidden") = "relu", py::arg("output") = "linear",
      py::arg("seed") = 1);
  m.def("forward", [](const nn::Network& net, const Eigen::MatrixXd& batch) {
    return nn::forward(net, batch);
  });
  m.def("reparam_sample", &nn::reparam_sample, py::arg("mu"), py::arg("log_sigma"),
        py::arg("noise"));
  m.def("kl_diag_gaussian", &nn::kl_diag_gaussian, py::arg("mu"), py::arg("log_sigma"));

  // ---- forward model
  py::class_<FgnConfig>(m, "FgnConfig")
      .def(py::init<>())
      .def_readwrite("hidden", &FgnConfig::hidden)
      .def_readwrite("learning_rate", &FgnConfig::learning_rate)
      .def_readwrite("batch", &FgnConfig::batch)
      .def_readwrite("epochs", &FgnConfig::epochs)
      .def_readwrite("w_h", &FgnConfig::w_h)
      .def_readwrite("w_v", &FgnConfig::w_v)
      .def_readwrite("seed", &FgnConfig::seed);
  m.def("phase_features", &phase_features, py::arg("phi"));
  m.def("build_fgn", &build_fgn, py::arg("config"), py::arg("schema"));
  m.def(
      "train_fgn",
      [](const Dataset& ds, const FgnConfig& cfg, const schema::Schema& s) {
        auto r = train_fgn(ds, cfg, s);
        return py::make_tuple(std::move(r.net), r.epoch_loss);
      },
      py::arg("dataset"), py::arg("config"), py::arg("schema"));
  m.def(
      "rollout",
      [](const nn::Network& fgn, const schema::Schema& s, const Eigen::VectorXd& anatomy,
         const Eigen::VectorXd& gait_cond) { return rollout(fgn, s, anatomy, gait_cond).data; },
      py::arg("fgn"), py::arg("schema"), py::arg("anatomy"), py::arg("gait_cond"));
  m.def("save_fgn", &save_fgn, py::arg("network"), py::arg("path"), py::arg("schema_hash"));
  m.def("load_fgn", &load_fgn, py::arg("path"), py::arg("schema"));

  // ---- backward model
  py::class_<BgnConfig>(m, "BgnConfig")
      .def(py::init<>())
      .def_readwrite("encoder_hidden", &BgnConfig::encoder_hidden)
      .def_readwrite("decoder_hidden", &BgnConfig::decoder_hidden)
      .def_readwrite("latent", &BgnConfig::latent)
      .def_readwrite("w_g", &BgnConfig::w_g)
      .def_readwrite("w_kl", &BgnConfig::w_kl)
      .def_readwrite("w_m_uniform", &BgnConfig::w_m_uniform)
      .def_readwrite("batch", &BgnConfig::batch)
      .def_readwrite("learning_rate", &BgnConfig::learning_rate)
      .def_readwrite("epochs", &BgnConfig::epochs)
      .def_readwrite("seed", &BgnConfig::seed)
      .def_readwrite("muscle_mask", &BgnConfig::muscle_mask);
  py::class_<Bgn>(m, "Bgn")
      .def_property_readonly("mask", [](const Bgn& b) { return b.mask; })
      .def_property_readonly("latent", [](const Bgn& b) { return b.cfg.latent; });
  m.def("build_bgn", &build_bgn, py::arg("config"), py::arg("schema"));
  m.def(
      "encode",
      [](const Bgn& bgn, const schema::Schema& s, const Eigen::VectorXd& flat_gait,
         const Eigen::VectorXd& gait_cond, const Eigen::VectorXd& skeleton) {
        return encode(bgn, pattern_from_flat(s, flat_gait), gait_cond, skeleton);
      },
      py::arg("bgn"), py::arg("schema"), py::arg("gait"), py::arg("gait_cond"),
      py::arg("skeleton"));
  m.def("decode_muscle", &decode_muscle, py::arg("bgn"), py::arg("z"), py::arg("schema"));
  m.def(
      "train_bgn",
      [](Bgn& bgn, const Dataset& ds, const nn::Network& fgn, const schema::Schema& s) {
        auto r = train_bgn(bgn, ds, fgn, s);
        std::vector<std::tuple<double, double, double, double>> hist;
        for (const auto& h : r.history)
          hist.emplace_back(h.total, h.reconstruction, h.kl, h.regularization);
        return hist;
      },
      py::arg("bgn"), py::arg("dataset"), py::arg("fgn"), py::arg("schema"));
  m.def(
      "posterior_samples",
      [](const Bgn& bgn, const schema::Schema& s, const Eigen::VectorXd& flat_gait,
         const Eigen::VectorXd& gait_cond, const Eigen::VectorXd& skeleton, int n,
         std::uint64_t seed) {
        const auto samples = posterior_samples(bgn, s, pattern_from_flat(s, flat_gait), gait_cond,
                                               skeleton, n, seed);
        Eigen::MatrixXd muscle(static_cast<int>(samples.size()), s.n_muscle());
        Eigen::MatrixXd z(static_cast<int>(samples.size()), bgn.cfg.latent);
        for (std::size_t i = 0; i < samples.size(); ++i) {
          muscle.row(static_cast<int>(i)) = samples[i].muscle.transpose();
          z.row(static_cast<int>(i)) = samples[i].z.transpose();
        }
        return py::make_tuple(z, muscle);
      },
      py::arg("bgn"), py::arg("schema"), py::arg("gait"), py::arg("gait_cond"),
      py::arg("skeleton"), py::arg("n") = 1000, py::arg("seed") = 17);
  m.def(
      "posterior_mean_muscle",
      [](const Bgn& bgn, const schema::Schema& s, const Eigen::VectorXd& flat_gait,
         const Eigen::VectorXd& gait_cond, const Eigen::VectorXd& skeleton) {
        return posterior_mean_muscle(bgn, s, pattern_from_flat(s, flat_gait), gait_cond, skeleton);
      },
      py::arg("bgn"), py::arg("schema"), py::arg("gait"), py::arg("gait_cond"),
      py::arg("skeleton"));
  m.def("default_expert_configs", &default_expert_configs, py::arg("schema"), py::arg("seed"));
  m.def(
      "train_experts",
      [](const Dataset& ds, const nn::Network& fgn, const std::vector<BgnConfig>& cfgs,
         const schema::Schema& s) { return train_experts(ds, fgn, cfgs, s); },
      py::arg("dataset"), py::arg("fgn"), py::arg("configs"), py::arg("schema"));
  m.def(
      "select_expert",
      [](const std::vector<Bgn>& experts, const nn::Network& fgn, const schema::Schema& s,
         const Eigen::VectorXd& flat_gait, const Eigen::VectorXd& gait_cond,
         const Eigen::VectorXd& skeleton) {
        return select_expert(experts, fgn, s, pattern_from_flat(s, flat_gait), gait_cond,
                             skeleton);
      },
      py::arg("experts"), py::arg("fgn"), py::arg("schema"), py::arg("gait"),
      py::arg("gait_cond"), py::arg("skeleton"));
  m.def("save_bundle", &save_bundle, py::arg("experts"), py::arg("path"), py::arg("schema_hash"));
  m.def("load_bundle", &load_bundle, py::arg("path"), py::arg("schema"));

  // ---- evaluation
  py::class_<ForwardEval>(m, "ForwardEval")
      .def_property_readonly("joint_avg_mean",
                             [](const ForwardEval& e) { return e.joint_avg_mean; })
      .def_property_readonly("per_case_mean",
                             [](const ForwardEval& e) { return e.per_case_mean; });
  py::class_<RealizabilityEval>(m, "RealizabilityEval")
      .def_property_readonly("joint_avg_mean",
                             [](const RealizabilityEval& e) { return e.joint_avg_mean; })
      .def_property_readonly("n_pass", [](const RealizabilityEval& e) { return e.n_pass; });
  py::class_<CoverageResult>(m, "CoverageResult")
      .def_property_readonly("covered", [](const CoverageResult& c) { return c.covered; })
      .def_property_readonly("truth_nn", [](const CoverageResult& c) { return c.truth_nn; })
      .def_property_readonly("threshold", [](const CoverageResult& c) { return c.threshold; });
  m.def("eval_forward", &eval_forward, py::arg("fgn"), py::arg("holdout"), py::arg("schema"));
  m.def("eval_backward_realizability", &eval_backward_realizability, py::arg("experts"),
        py::arg("fgn"), py::arg("oracle"), py::arg("holdout"),
        py::arg("pass_threshold_deg") = 10.0);
  m.def(
      "eval_coverage",
      [](const Bgn& bgn, const schema::Schema& s, const Eigen::VectorXd& flat_gait,
         const Eigen::VectorXd& gait_cond, const Eigen::VectorXd& skeleton,
         const Eigen::VectorXd& truth_muscle, int n, std::uint64_t seed) {
        return eval_coverage(bgn, s, pattern_from_flat(s, flat_gait), gait_cond, skeleton,
                             truth_muscle, n, seed);
      },
      py::arg("bgn"), py::arg("schema"), py::arg("gait"), py::arg("gait_cond"),
      py::arg("skeleton"), py::arg("truth_muscle"), py::arg("n") = 1000, py::arg("seed") = 5);
}
