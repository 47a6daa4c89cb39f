#include "comanip/scenario.hpp"

#include <fstream>
#include <stdexcept>

namespace comanip {

using nlohmann::json;

const char* to_string(ScenarioEvent::Kind k) {
  switch (k) {
    case ScenarioEvent::Kind::mass_drop: return "mass_drop";
    case ScenarioEvent::Kind::friction_zone: return "friction_zone";
    case ScenarioEvent::Kind::agent_join: return "agent_join";
    case ScenarioEvent::Kind::agent_leave: return "agent_leave";
  }
  return "?";
}

const char* to_string(ControllerKind k) { return k == ControllerKind::adaptive ? "adaptive" : "pd"; }
const char* to_string(AllocatorKind k) { return k == AllocatorKind::qp ? "qp" : "heuristic"; }

ControllerKind parse_controller(const std::string& s) {
  if (s == "adaptive") return ControllerKind::adaptive;
  if (s == "pd") return ControllerKind::pd;
  throw std::invalid_argument("unknown controller '" + s + "' (expected adaptive|pd)");
}

AllocatorKind parse_allocator(const std::string& s) {
  if (s == "qp") return AllocatorKind::qp;
  if (s == "heuristic") return AllocatorKind::heuristic;
  throw std::invalid_argument("unknown allocator '" + s + "' (expected qp|heuristic)");
}

namespace {

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j, const char* key) {
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != N) {
    throw std::invalid_argument(std::string("'") + key + "' must be an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = a.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

template <int N>
void read_vec(const json& j, const char* key, Eigen::Matrix<double, N, 1>& out) {
  if (j.contains(key)) out = vec<N>(j, key);
}

template <int N>
void read_diag(const json& j, const char* key, Eigen::Matrix<double, N, N>& out) {
  if (j.contains(key)) out = vec<N>(j, key).asDiagonal();
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename Derived>
json arr(const Eigen::MatrixBase<Derived>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ScenarioEvent::Kind parse_event_kind(const std::string& s) {
  if (s == "mass_drop") return ScenarioEvent::Kind::mass_drop;
  if (s == "friction_zone") return ScenarioEvent::Kind::friction_zone;
  if (s == "agent_join") return ScenarioEvent::Kind::agent_join;
  if (s == "agent_leave") return ScenarioEvent::Kind::agent_leave;
  throw std::invalid_argument("unknown event kind '" + s + "'");
}

TrajectorySpec::Kind parse_traj_kind(const std::string& s) {
  if (s == "line") return TrajectorySpec::Kind::line;
  if (s == "arc") return TrajectorySpec::Kind::arc;
  if (s == "spline") return TrajectorySpec::Kind::spline;
  throw std::invalid_argument("unknown trajectory kind '" + s + "'");
}

const char* to_string(TrajectorySpec::Kind k) {
  switch (k) {
    case TrajectorySpec::Kind::line: return "line";
    case TrajectorySpec::Kind::arc: return "arc";
    case TrajectorySpec::Kind::spline: return "spline";
  }
  return "?";
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!object.valid()) throw std::invalid_argument("object parameters are invalid");
  if (!(rates.physics_hz > 0 && rates.l1_l2_hz > 0 && rates.l3_hz > 0)) {
    throw std::invalid_argument("rates must be positive");
  }
  if (rates.l1_l2_hz > rates.physics_hz || rates.l3_hz > rates.physics_hz) {
    throw std::invalid_argument("controller rates cannot exceed the physics rate");
  }
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  if (agents.empty()) throw std::invalid_argument("at least one agent is required");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!agents[i].params.valid()) throw std::invalid_argument("agent " + std::to_string(i) + ": invalid params");
    if (!agents[i].contact.valid()) throw std::invalid_argument("agent " + std::to_string(i) + ": invalid contact");
  }
  for (const ScenarioEvent& e : events) {
    if (e.time < 0.0 || e.time > duration) throw std::invalid_argument("event time outside [0, duration]");
    if (e.kind == ScenarioEvent::Kind::mass_drop && !(e.mass > 0.0)) {
      throw std::invalid_argument("mass_drop needs a positive mass");
    }
    if ((e.kind == ScenarioEvent::Kind::agent_join || e.kind == ScenarioEvent::Kind::agent_leave) &&
        (e.index < 0 || e.index >= static_cast<int>(agents.size()))) {
      throw std::invalid_argument("event agent index out of range");
    }
  }
  gains.adaptive.validate();
  allocation.validate();
  mpc.validate();
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig cfg;
  read(j, "name", cfg.name);

  if (j.contains("object")) {
    const json& o = j.at("object");
    read(o, "m_b", cfg.object.m_b);
    read(o, "I_Gzz", cfg.object.I_Gzz);
    read_vec(o, "r_p", cfg.object.r_p);
    read_vec(o, "half_extents", cfg.object.half_extents);
    read(o, "mu", cfg.object.mu);
    read(o, "rho_eff", cfg.object.rho_eff);
    read(o, "g", cfg.object.g);
  }
  if (j.contains("initial_state")) {
    const json& s = j.at("initial_state");
    cfg.has_initial_state = true;
    read_vec(s, "x_p", cfg.initial_state.x_p);
    read(s, "theta", cfg.initial_state.theta);
    read_vec(s, "v_p", cfg.initial_state.v_p);
    read(s, "omega", cfg.initial_state.omega);
  }
  for (const json& a : j.value("agents", json::array())) {
    AgentConfig ac;
    if (a.contains("params")) {
      const json& p = a.at("params");
      read(p, "m", ac.params.m);
      read(p, "I", ac.params.I);
      read(p, "mu_a", ac.params.mu_a);
      read(p, "g", ac.params.g);
      read(p, "M_cap", ac.params.M_cap);
    }
    const json& c = a.at("contact");
    ac.contact.r_0 = vec<2>(c, "r_0");
    ac.contact.n_hat = vec<2>(c, "n_hat").normalized();
    ac.contact.t_hat = c.contains("t_hat") ? Vec2(vec<2>(c, "t_hat").normalized())
                                           : Vec2(ac.contact.n_hat.y(), -ac.contact.n_hat.x());
    read(c, "d_min", ac.contact.d_min);
    read(c, "d_max", ac.contact.d_max);
    read(c, "standoff", ac.contact.standoff);
    read(a, "active", ac.active);
    read(a, "approach_gap", ac.approach_gap);
    cfg.agents.push_back(ac);
  }
  if (j.contains("trajectory")) {
    const json& t = j.at("trajectory");
    TrajectorySpec& ts = cfg.trajectory;
    ts.kind = parse_traj_kind(t.value("kind", std::string("line")));
    read_vec(t, "start", ts.start);
    read_vec(t, "end", ts.end);
    read_vec(t, "center", ts.center);
    read(t, "radius", ts.radius);
    read(t, "start_angle", ts.start_angle);
    read(t, "sweep", ts.sweep);
    for (const json& w : t.value("waypoints", json::array())) {
      ts.waypoints.emplace_back(w.at(0).get<double>(), w.at(1).get<double>());
    }
    read(t, "t_start", ts.profile.t_start);
    read(t, "t_end", ts.profile.t_end);
    read(t, "accel_fraction", ts.profile.accel_fraction);
    const std::string mode = t.value("yaw_mode", std::string("fixed"));
    if (mode != "fixed" && mode != "tangent") throw std::invalid_argument("yaw_mode must be fixed|tangent");
    ts.yaw_mode = mode == "fixed" ? TrajectorySpec::YawMode::fixed : TrajectorySpec::YawMode::tangent;
    read(t, "yaw_start", ts.yaw_start);
    read(t, "yaw_end", ts.yaw_end);
    read(t, "yaw_offset", ts.yaw_offset);
    if (t.contains("yaw_profile")) {
      const json& y = t.at("yaw_profile");
      ts.separate_yaw_profile = true;
      read(y, "t_start", ts.yaw_profile.t_start);
      read(y, "t_end", ts.yaw_profile.t_end);
      read(y, "accel_fraction", ts.yaw_profile.accel_fraction);
    }
  }
  if (j.contains("rates")) {
    const json& r = j.at("rates");
    read(r, "physics_hz", cfg.rates.physics_hz);
    read(r, "l1_l2_hz", cfg.rates.l1_l2_hz);
    read(r, "l3_hz", cfg.rates.l3_hz);
  }
  for (const json& e : j.value("events", json::array())) {
    ScenarioEvent ev;
    ev.time = e.at("time").get<double>();
    ev.kind = parse_event_kind(e.at("kind").get<std::string>());
    read(e, "mass", ev.mass);
    if (e.contains("offset")) {
      ev.offset = vec<2>(e, "offset");
    } else if (ev.kind == ScenarioEvent::Kind::mass_drop) {
      ev.random_offset = true;
    }
    read(e, "x_from", ev.x_from);
    read(e, "mu", ev.mu);
    if (e.contains("index")) ev.index = e.at("index").get<int>() - 1;  // 1-based in files, like the CSV markers
    cfg.events.push_back(ev);
  }
  if (j.contains("controller")) cfg.controller = parse_controller(j.at("controller").get<std::string>());
  if (j.contains("allocator")) cfg.allocator = parse_allocator(j.at("allocator").get<std::string>());
  if (j.contains("gains")) {
    const json& g = j.at("gains");
    read(g, "lambda", cfg.gains.adaptive.lambda);
    read_diag(g, "K_D", cfg.gains.adaptive.K_D);
    read_diag(g, "Gamma_theta", cfg.gains.adaptive.Gamma_theta);
    read_diag(g, "Gamma_psi", cfg.gains.adaptive.Gamma_psi);
    read_diag(g, "K_P_pd", cfg.gains.K_P_pd);
    read_diag(g, "K_D_pd", cfg.gains.K_D_pd);
    read(g, "F_max", cfg.gains.limits.F_max);
    read(g, "M_max", cfg.gains.limits.M_max);
    read_vec(g, "theta_hat_0", cfg.gains.initial_estimate.theta_hat);
    read_vec(g, "psi_hat_0", cfg.gains.initial_estimate.psi_hat);
    read(g, "k_p_d", cfg.gains.k_p_d);
    read(g, "adapt_while_limited", cfg.gains.adapt_while_limited);
  }
  if (j.contains("allocation")) {
    const json& a = j.at("allocation");
    read(a, "gamma1", cfg.allocation.gamma1);
    read(a, "gamma2", cfg.allocation.gamma2);
    read(a, "gamma3", cfg.allocation.gamma3);
    read(a, "F_eps", cfg.allocation.F_eps);
    read(a, "relax_weight", cfg.allocation.relax_weight);
  }
  if (j.contains("mpc")) {
    const json& m = j.at("mpc");
    read(m, "horizon", cfg.mpc.horizon);
    read(m, "dt_mpc", cfg.mpc.dt_mpc);
    read_vec(m, "Q", cfg.mpc.Q);
    read_vec(m, "P_w", cfg.mpc.P_w);
  }
  if (j.contains("friction")) {
    read(j.at("friction"), "v_eps", cfg.friction.v_eps);
    read(j.at("friction"), "omega_eps", cfg.friction.omega_eps);
  }
  read(j, "contact_tol", cfg.contact_tol);
  read(j, "duration", cfg.duration);
  read(j, "seed", cfg.seed);
  read(j, "metrics_window", cfg.metrics_window);
  cfg.validate();
  return cfg;
}

json scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["object"] = {{"m_b", cfg.object.m_b},   {"I_Gzz", cfg.object.I_Gzz},
                 {"r_p", arr(cfg.object.r_p)}, {"half_extents", arr(cfg.object.half_extents)},
                 {"mu", cfg.object.mu},     {"rho_eff", cfg.object.rho_eff},
                 {"g", cfg.object.g}};
  if (cfg.has_initial_state) {
    j["initial_state"] = {{"x_p", arr(cfg.initial_state.x_p)},
                          {"theta", cfg.initial_state.theta},
                          {"v_p", arr(cfg.initial_state.v_p)},
                          {"omega", cfg.initial_state.omega}};
  }
  json agents = json::array();
  for (const AgentConfig& a : cfg.agents) {
    agents.push_back({{"params",
                       {{"m", a.params.m},
                        {"I", a.params.I},
                        {"mu_a", a.params.mu_a},
                        {"g", a.params.g},
                        {"M_cap", a.params.M_cap}}},
                      {"contact",
                       {{"r_0", arr(a.contact.r_0)},
                        {"n_hat", arr(a.contact.n_hat)},
                        {"t_hat", arr(a.contact.t_hat)},
                        {"d_min", a.contact.d_min},
                        {"d_max", a.contact.d_max},
                        {"standoff", a.contact.standoff}}},
                      {"active", a.active},
                      {"approach_gap", a.approach_gap}});
  }
  j["agents"] = agents;
  const TrajectorySpec& t = cfg.trajectory;
  json traj = {{"kind", to_string(t.kind)},
               {"t_start", t.profile.t_start},
               {"t_end", t.profile.t_end},
               {"accel_fraction", t.profile.accel_fraction},
               {"yaw_mode", t.yaw_mode == TrajectorySpec::YawMode::fixed ? "fixed" : "tangent"},
               {"yaw_start", t.yaw_start},
               {"yaw_end", t.yaw_end},
               {"yaw_offset", t.yaw_offset}};
  if (t.separate_yaw_profile) {
    traj["yaw_profile"] = {{"t_start", t.yaw_profile.t_start},
                           {"t_end", t.yaw_profile.t_end},
                           {"accel_fraction", t.yaw_profile.accel_fraction}};
  }
  if (t.kind == TrajectorySpec::Kind::line) {
    traj["start"] = arr(t.start);
    traj["end"] = arr(t.end);
  } else if (t.kind == TrajectorySpec::Kind::arc) {
    traj["center"] = arr(t.center);
    traj["radius"] = t.radius;
    traj["start_angle"] = t.start_angle;
    traj["sweep"] = t.sweep;
  } else {
    json w = json::array();
    for (const Vec2& p : t.waypoints) w.push_back({p.x(), p.y()});
    traj["waypoints"] = w;
  }
  j["trajectory"] = traj;
  j["rates"] = {{"physics_hz", cfg.rates.physics_hz}, {"l1_l2_hz", cfg.rates.l1_l2_hz}, {"l3_hz", cfg.rates.l3_hz}};
  json events = json::array();
  for (const ScenarioEvent& e : cfg.events) {
    json je = {{"time", e.time}, {"kind", to_string(e.kind)}};
    switch (e.kind) {
      case ScenarioEvent::Kind::mass_drop:
        je["mass"] = e.mass;
        if (!e.random_offset) je["offset"] = arr(e.offset);
        break;
      case ScenarioEvent::Kind::friction_zone:
        je["x_from"] = e.x_from;
        je["mu"] = e.mu;
        break;
      default:
        je["index"] = e.index + 1;
    }
    events.push_back(je);
  }
  j["events"] = events;
  j["controller"] = to_string(cfg.controller);
  j["allocator"] = to_string(cfg.allocator);
  const ControllerGains& g = cfg.gains;
  j["gains"] = {{"lambda", g.adaptive.lambda},
                {"K_D", arr(Vec3(g.adaptive.K_D.diagonal()))},
                {"Gamma_theta", arr(Vec4(g.adaptive.Gamma_theta.diagonal()))},
                {"Gamma_psi", arr(Vec3(g.adaptive.Gamma_psi.diagonal()))},
                {"K_P_pd", arr(Vec3(g.K_P_pd.diagonal()))},
                {"K_D_pd", arr(Vec3(g.K_D_pd.diagonal()))},
                {"F_max", g.limits.F_max},
                {"M_max", g.limits.M_max},
                {"adapt_while_limited", g.adapt_while_limited},
                {"theta_hat_0", arr(g.initial_estimate.theta_hat)},
                {"psi_hat_0", arr(g.initial_estimate.psi_hat)},
                {"k_p_d", g.k_p_d}};
  j["allocation"] = {{"gamma1", cfg.allocation.gamma1},
                     {"gamma2", cfg.allocation.gamma2},
                     {"gamma3", cfg.allocation.gamma3},
                     {"F_eps", cfg.allocation.F_eps},
                     {"relax_weight", cfg.allocation.relax_weight}};
  j["mpc"] = {{"horizon", cfg.mpc.horizon},
              {"dt_mpc", cfg.mpc.dt_mpc},
              {"Q", arr(cfg.mpc.Q)},
              {"P_w", arr(cfg.mpc.P_w)}};
  j["friction"] = {{"v_eps", cfg.friction.v_eps}, {"omega_eps", cfg.friction.omega_eps}};
  j["contact_tol"] = cfg.contact_tol;
  j["duration"] = cfg.duration;
  j["seed"] = cfg.seed;
  j["metrics_window"] = cfg.metrics_window;
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
  json j;
  try {
    in >> j;
    return scenario_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace comanip
