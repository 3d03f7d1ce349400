#include "gaitnet/schema.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "gaitnet/errors.hpp"
#include "gaitnet/io.hpp"

namespace gaitnet::schema {

using nlohmann::json;

namespace {

const char* group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::skeleton: return "skeleton";
    case ParamGroup::muscle: return "muscle";
    case ParamGroup::gait: return "gait";
  }
  return "?";
}

ParamGroup group_from(const std::string& s) {
  if (s == "skeleton") return ParamGroup::skeleton;
  if (s == "muscle") return ParamGroup::muscle;
  if (s == "gait") return ParamGroup::gait;
  throw data_error("schema: unknown parameter group '" + s + "'");
}

json harmonic_to_json(const Harmonic& h) {
  return json{{"c0", h.c0},   {"cos1", h.cos1}, {"sin1", h.sin1}, {"cos2", h.cos2},
              {"sin2", h.sin2}, {"cos3", h.cos3}, {"sin3", h.sin3}};
}

Harmonic harmonic_from_json(const json& j) {
  Harmonic h;
  h.c0 = j.at("c0").get<double>();
  h.cos1 = j.at("cos1").get<double>();
  h.sin1 = j.at("sin1").get<double>();
  h.cos2 = j.at("cos2").get<double>();
  h.sin2 = j.at("sin2").get<double>();
  h.cos3 = j.at("cos3").get<double>();
  h.sin3 = j.at("sin3").get<double>();
  return h;
}

}  // namespace

int Schema::n_skeleton() const {
  int n = 0;
  for (const auto& p : params)
    if (p.group == ParamGroup::skeleton) ++n;
  return n;
}

int Schema::n_muscle() const {
  int n = 0;
  for (const auto& p : params)
    if (p.group == ParamGroup::muscle) ++n;
  return n;
}

int Schema::n_gait() const {
  int n = 0;
  for (const auto& p : params)
    if (p.group == ParamGroup::gait) ++n;
  return n;
}

int Schema::find_param(const std::string& name) const {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].name == name) return static_cast<int>(i);
  return -1;
}

int Schema::find_joint(const std::string& name) const {
  for (std::size_t i = 0; i < joints.size(); ++i)
    if (joints[i] == name) return static_cast<int>(i);
  return -1;
}

int Schema::find_channel(const std::string& name) const {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i].name == name) return static_cast<int>(i);
  return -1;
}

Eigen::VectorXd Schema::param_min() const {
  Eigen::VectorXd v(n_params());
  for (int i = 0; i < n_params(); ++i) v[i] = params[i].min;
  return v;
}

Eigen::VectorXd Schema::param_max() const {
  Eigen::VectorXd v(n_params());
  for (int i = 0; i < n_params(); ++i) v[i] = params[i].max;
  return v;
}

Eigen::VectorXd Schema::param_ref() const {
  Eigen::VectorXd v(n_params());
  for (int i = 0; i < n_params(); ++i) v[i] = params[i].ref;
  return v;
}

Eigen::VectorXd Schema::anatomy_min() const { return param_min().head(anatomy_dim()); }
Eigen::VectorXd Schema::anatomy_max() const { return param_max().head(anatomy_dim()); }
Eigen::VectorXd Schema::anatomy_ref() const { return param_ref().head(anatomy_dim()); }
Eigen::VectorXd Schema::muscle_min() const {
  return param_min().segment(muscle_begin(), n_muscle());
}
Eigen::VectorXd Schema::muscle_max() const {
  return param_max().segment(muscle_begin(), n_muscle());
}
Eigen::VectorXd Schema::gait_min() const { return param_min().tail(n_gait()); }
Eigen::VectorXd Schema::gait_max() const { return param_max().tail(n_gait()); }

void Schema::validate() const {
  if (joints.empty()) throw config_error("schema: no joints");
  if (params.empty()) throw config_error("schema: no parameters");

  // blocks must be contiguous in skeleton, muscle, gait order
  int stage = 0;
  for (const auto& p : params) {
    const int g = static_cast<int>(p.group);
    if (g < stage) throw config_error("schema: parameter blocks out of order at '" + p.name + "'");
    stage = g;
    if (!(p.min <= p.max))
      throw config_error("schema: parameter '" + p.name + "' needs min <= max");
    if (p.ref < p.min || p.ref > p.max)
      throw config_error("schema: parameter '" + p.name + "' reference outside range");
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t k = i + 1; k < params.size(); ++k)
      if (params[i].name == params[k].name)
        throw config_error("schema: duplicate parameter '" + params[i].name + "'");

  if (n_gait() != 2 || params[gait_begin()].name != "stride" ||
      params[gait_begin() + 1].name != "cadence")
    throw config_error("schema: gait block must be [stride, cadence]");

  for (const auto& c : channels) {
    if (c.joint < 0 || c.joint >= n_joints())
      throw config_error("schema: channel '" + c.name + "' joint index out of range");
    if (c.axis < 0 || c.axis > 2)
      throw config_error("schema: channel '" + c.name + "' axis out of range");
  }
  for (const auto& inf : influence) {
    if (inf.param < 0 || inf.param >= n_params())
      throw config_error("schema: influence references unknown parameter");
    if (inf.channel < 0 || inf.channel >= static_cast<int>(channels.size()))
      throw config_error("schema: influence references unknown channel");
  }
  for (std::size_t i = 0; i < influence.size(); ++i)
    for (std::size_t k = i + 1; k < influence.size(); ++k)
      if (influence[i].param == influence[k].param &&
          influence[i].channel == influence[k].channel)
        throw config_error("schema: duplicate influence entry");

  // a certified direction requires bit-identical influence columns
  auto column = [&](int param) {
    std::vector<std::pair<int, double>> col;
    for (const auto& inf : influence)
      if (inf.param == param) col.emplace_back(inf.channel, inf.coeff);
    return col;
  };
  for (const auto& r : redundancy) {
    if (r.param_plus < 0 || r.param_plus >= n_params() || r.param_minus < 0 ||
        r.param_minus >= n_params())
      throw config_error("schema: redundancy '" + r.name + "' references unknown parameter");
    if (column(r.param_plus) != column(r.param_minus))
      throw config_error("schema: redundancy '" + r.name +
                         "' parameters do not share an influence column");
  }
  for (int idx : inert_params) {
    if (idx < 0 || idx >= n_params() || params[idx].group != ParamGroup::muscle)
      throw config_error("schema: inert list must name muscle parameters");
    if (!column(idx).empty())
      throw config_error("schema: inert parameter '" + params[idx].name +
                         "' has influence entries");
  }
}

Schema desk_default() {
  Schema s;
  s.name = "desk";
  s.version = 1;
  s.joints = {"pelvis", "trunk", "hip_l", "hip_r", "knee_l", "knee_r", "ankle_l", "ankle_r",
              "head"};

  auto P = [&](const std::string& n, ParamGroup g, double lo, double hi, double ref) {
    s.params.push_back({n, g, lo, hi, ref});
  };
  P("scale_head", ParamGroup::skeleton, 0.8, 1.2, 1.0);
  P("scale_trunk", ParamGroup::skeleton, 0.8, 1.2, 1.0);
  P("scale_leg_l", ParamGroup::skeleton, 0.8, 1.2, 1.0);
  P("scale_leg_r", ParamGroup::skeleton, 0.8, 1.2, 1.0);
  P("torsion_femur_l", ParamGroup::skeleton, -0.5, 0.5, 0.0);
  P("torsion_femur_r", ParamGroup::skeleton, -0.5, 0.5, 0.0);

  const char* groups[] = {"hip_abductor",        "hip_adductor", "hip_flexor",
                          "hip_extensor",        "knee_extensor", "knee_flexor",
                          "ankle_plantarflexor", "ankle_dorsiflexor"};
  for (const char* g : groups)
    for (const char* side : {"l", "r"})
      for (const char* kind : {"weakness", "contracture"})
        P(std::string(g) + "_" + side + "_" + kind, ParamGroup::muscle, 0.5, 1.5, 1.0);

  P("stride", ParamGroup::gait, 0.7, 1.3, 1.0);
  P("cadence", ParamGroup::gait, 0.7, 1.3, 1.0);

  auto C = [&](const std::string& n, const std::string& joint, int axis, Harmonic base,
               Harmonic shape, double stride_gain, double asym_w, double asym_ph) {
    Channel c;
    c.name = n;
    c.joint = s.find_joint(joint);
    c.axis = axis;
    c.base = base;
    c.shape = shape;
    c.stride_gain = stride_gain;
    c.asym_weight = asym_w;
    c.asym_phase = asym_ph;
    s.channels.push_back(c);
  };
  const Harmonic zero{};
  const Harmonic one{1.0};
  // bump(psi - a) = 0.5*(1 - cos(psi - a)), expanded into first harmonics
  auto bump = [](double a) {
    Harmonic h;
    h.c0 = 0.5;
    h.cos1 = -0.5 * std::cos(a);
    h.sin1 = -0.5 * std::sin(a);
    return h;
  };

  C("pelvis_tilt", "pelvis", 0, Harmonic{0.10, 0, 0, 0.02}, zero, 0.0, 0.0, 0.0);
  C("pelvis_roll_l", "pelvis", 2, Harmonic{0, 0, 0.025}, bump(EIGEN_PI), 0.0, 0.3, 0.9);
  C("pelvis_roll_r", "pelvis", 2, Harmonic{0, 0, 0.025}, bump(0.0), 0.0, 0.3, 4.1);
  C("trunk_lean", "trunk", 0, Harmonic{-0.05, 0, 0, 0.02}, one, 0.0, 0.0, 0.0);
  C("hip_flex_l", "hip_l", 0, Harmonic{0.10, 0.35, 0.05, 0.03}, bump(0.0), 0.3, 1.0, 0.5);
  C("hip_flex_r", "hip_r", 0, Harmonic{0.10, -0.35, -0.05, 0.03}, bump(EIGEN_PI), 0.3, 1.0, 2.1);
  C("hip_rot_l", "hip_l", 1, zero, one, 0.0, 0.0, 0.0);
  C("hip_rot_r", "hip_r", 1, zero, one, 0.0, 0.0, 0.0);
  C("knee_flex_l", "knee_l", 0, Harmonic{0.35, -0.25, -0.15, -0.05}, bump(4.4), 0.3, 1.0, 1.3);
  C("knee_flex_r", "knee_r", 0, Harmonic{0.35, 0.25, 0.15, -0.05}, bump(4.4 - EIGEN_PI), 0.3, 1.0,
    3.4);
  C("ankle_flex_l", "ankle_l", 0, Harmonic{0.02, 0.08, -0.10, -0.04, -0.12}, bump(3.6), 0.3, 1.0,
    2.7);
  C("ankle_flex_r", "ankle_r", 0, Harmonic{0.02, -0.08, 0.10, -0.04, -0.12}, bump(3.6 - EIGEN_PI),
    0.3, 1.0, 5.0);
  C("head_nod", "head", 0, Harmonic{0, 0, 0, 0.02}, one, 0.0, 0.0, 0.0);

  auto I = [&](const std::string& param, const std::string& channel, double coeff) {
    const int p = s.find_param(param);
    const int c = s.find_channel(channel);
    if (p < 0 || c < 0) throw config_error("desk_default: bad influence " + param + "/" + channel);
    s.influence.push_back({p, c, coeff});
  };
  // pelvic obliquity; the two 0.40 columns are the certified trendelenburg pair
  I("hip_abductor_l_weakness", "pelvis_roll_l", 0.40);
  I("hip_adductor_r_contracture", "pelvis_roll_l", 0.40);
  I("hip_abductor_l_contracture", "pelvis_roll_l", -0.22);
  I("hip_abductor_r_weakness", "pelvis_roll_r", -0.40);
  I("hip_adductor_l_contracture", "pelvis_roll_r", -0.40);
  I("hip_abductor_r_contracture", "pelvis_roll_r", 0.22);
  // trunk and head respond to extensors and segment scales
  I("hip_extensor_l_weakness", "trunk_lean", 0.12);
  I("hip_extensor_r_weakness", "trunk_lean", 0.12);
  I("scale_trunk", "trunk_lean", 0.10);
  I("scale_head", "head_nod", 0.08);
  // hips
  I("hip_flexor_l_weakness", "hip_flex_l", -0.30);
  I("hip_flexor_l_contracture", "hip_flex_l", 0.24);
  I("hip_extensor_l_weakness", "hip_flex_l", 0.15);
  I("hip_extensor_l_contracture", "hip_flex_l", -0.15);
  I("hip_flexor_r_weakness", "hip_flex_r", -0.30);
  I("hip_flexor_r_contracture", "hip_flex_r", 0.24);
  I("hip_extensor_r_weakness", "hip_flex_r", 0.15);
  I("hip_extensor_r_contracture", "hip_flex_r", -0.15);
  // femoral torsion enters as a direct rotation offset (reference 0)
  I("torsion_femur_l", "hip_rot_l", -1.0);
  I("torsion_femur_r", "hip_rot_r", -1.0);
  // knees; the two 0.35 columns are the certified crouch pair
  I("knee_extensor_l_weakness", "knee_flex_l", 0.35);
  I("knee_flexor_l_contracture", "knee_flex_l", 0.35);
  I("knee_extensor_l_contracture", "knee_flex_l", -0.30);
  I("knee_flexor_l_weakness", "knee_flex_l", -0.20);
  I("knee_extensor_r_weakness", "knee_flex_r", 0.35);
  I("knee_flexor_r_contracture", "knee_flex_r", 0.35);
  I("knee_extensor_r_contracture", "knee_flex_r", -0.30);
  I("knee_flexor_r_weakness", "knee_flex_r", -0.20);
  // ankles; dorsiflexion positive, the two -0.32 columns are the certified
  // equinus / foot-drop pair
  I("ankle_plantarflexor_l_weakness", "ankle_flex_l", 0.30);
  I("ankle_plantarflexor_l_contracture", "ankle_flex_l", -0.32);
  I("ankle_dorsiflexor_l_weakness", "ankle_flex_l", -0.32);
  I("ankle_dorsiflexor_l_contracture", "ankle_flex_l", 0.18);
  I("ankle_plantarflexor_r_weakness", "ankle_flex_r", 0.30);
  I("ankle_plantarflexor_r_contracture", "ankle_flex_r", -0.32);
  I("ankle_dorsiflexor_r_weakness", "ankle_flex_r", -0.32);
  I("ankle_dorsiflexor_r_contracture", "ankle_flex_r", 0.18);

  auto R = [&](const std::string& name, const std::string& plus, const std::string& minus) {
    s.redundancy.push_back({name, s.find_param(plus), s.find_param(minus)});
  };
  R("trendelenburg_hip_l", "hip_abductor_l_weakness", "hip_adductor_r_contracture");
  R("crouch_knee_l", "knee_extensor_l_weakness", "knee_flexor_l_contracture");
  R("dropfoot_ankle_l", "ankle_dorsiflexor_l_weakness", "ankle_plantarflexor_l_contracture");

  s.inert_params = {s.find_param("hip_adductor_l_weakness"),
                    s.find_param("hip_adductor_r_weakness")};

  s.validate();
  return s;
}

std::string to_json(const Schema& s) {
  json j;
  j["format"] = "gaitnet-schema";
  j["version"] = s.version;
  j["name"] = s.name;
  j["joints"] = s.joints;
  j["params"] = json::array();
  for (const auto& p : s.params)
    j["params"].push_back(json{{"name", p.name},
                               {"group", group_name(p.group)},
                               {"min", p.min},
                               {"max", p.max},
                               {"ref", p.ref}});
  j["channels"] = json::array();
  for (const auto& c : s.channels)
    j["channels"].push_back(json{{"name", c.name},
                                 {"joint", s.joints[c.joint]},
                                 {"axis", c.axis},
                                 {"base", harmonic_to_json(c.base)},
                                 {"shape", harmonic_to_json(c.shape)},
                                 {"stride_gain", c.stride_gain},
                                 {"asym_weight", c.asym_weight},
                                 {"asym_phase", c.asym_phase}});
  j["influence"] = json::array();
  for (const auto& inf : s.influence)
    j["influence"].push_back(json{{"param", s.params[inf.param].name},
                                  {"channel", s.channels[inf.channel].name},
                                  {"coeff", inf.coeff}});
  j["redundancy"] = json::array();
  for (const auto& r : s.redundancy)
    j["redundancy"].push_back(json{{"name", r.name},
                                   {"plus", s.params[r.param_plus].name},
                                   {"minus", s.params[r.param_minus].name}});
  j["inert"] = json::array();
  for (int idx : s.inert_params) j["inert"].push_back(s.params[idx].name);
  j["root"] = json{{"h_base", s.h_base},     {"h_amp", s.h_amp},   {"h_phase", s.h_phase},
                   {"h_knee_dip", s.h_knee_dip}, {"v_base", s.v_base}, {"v_amp", s.v_amp},
                   {"v_lat", s.v_lat},       {"asym_eps", s.asym_eps}};
  return j.dump(2);
}

Schema from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw data_error(std::string("schema: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "gaitnet-schema")
      throw data_error("schema: wrong format tag");
    Schema s;
    s.version = j.at("version").get<std::uint32_t>();
    s.name = j.at("name").get<std::string>();
    s.joints = j.at("joints").get<std::vector<std::string>>();
    for (const auto& pj : j.at("params"))
      s.params.push_back({pj.at("name").get<std::string>(),
                          group_from(pj.at("group").get<std::string>()),
                          pj.at("min").get<double>(), pj.at("max").get<double>(),
                          pj.at("ref").get<double>()});
    for (const auto& cj : j.at("channels")) {
      Channel c;
      c.name = cj.at("name").get<std::string>();
      c.joint = s.find_joint(cj.at("joint").get<std::string>());
      if (c.joint < 0) throw data_error("schema: channel joint not in joint list");
      c.axis = cj.at("axis").get<int>();
      c.base = harmonic_from_json(cj.at("base"));
      c.shape = harmonic_from_json(cj.at("shape"));
      c.stride_gain = cj.at("stride_gain").get<double>();
      c.asym_weight = cj.at("asym_weight").get<double>();
      c.asym_phase = cj.at("asym_phase").get<double>();
      s.channels.push_back(c);
    }
    for (const auto& ij : j.at("influence")) {
      Influence inf;
      inf.param = s.find_param(ij.at("param").get<std::string>());
      inf.channel = s.find_channel(ij.at("channel").get<std::string>());
      if (inf.param < 0 || inf.channel < 0)
        throw data_error("schema: influence names unknown param/channel");
      inf.coeff = ij.at("coeff").get<double>();
      s.influence.push_back(inf);
    }
    for (const auto& rj : j.at("redundancy")) {
      Redundancy r;
      r.name = rj.at("name").get<std::string>();
      r.param_plus = s.find_param(rj.at("plus").get<std::string>());
      r.param_minus = s.find_param(rj.at("minus").get<std::string>());
      s.redundancy.push_back(r);
    }
    for (const auto& nj : j.at("inert")) {
      const int idx = s.find_param(nj.get<std::string>());
      if (idx < 0) throw data_error("schema: inert names unknown parameter");
      s.inert_params.push_back(idx);
    }
    const auto& rj = j.at("root");
    s.h_base = rj.at("h_base").get<double>();
    s.h_amp = rj.at("h_amp").get<double>();
    s.h_phase = rj.at("h_phase").get<double>();
    s.h_knee_dip = rj.at("h_knee_dip").get<double>();
    s.v_base = rj.at("v_base").get<double>();
    s.v_amp = rj.at("v_amp").get<double>();
    s.v_lat = rj.at("v_lat").get<double>();
    s.asym_eps = rj.at("asym_eps").get<double>();
    try {
      s.validate();
    } catch (const config_error& e) {
      throw data_error(e.what());
    }
    return s;
  } catch (const json::exception& e) {
    throw data_error(std::string("schema: missing or mistyped field: ") + e.what());
  }
}

void save(const Schema& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open for writing: " + path);
  out << to_json(s) << "\n";
  if (!out) throw data_error("write failed: " + path);
}

Schema load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::uint64_t hash(const Schema& s) {
  const std::string text = to_json(s);
  return fnv1a(text.data(), text.size());
}

}  // namespace gaitnet::schema
