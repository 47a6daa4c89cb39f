#include "comanip/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

namespace comanip {

using Eigen::Index;

ObjectParams apply_mass_drop(const ObjectParams& params, double drop_mass, const Vec2& offset) {
  if (!(drop_mass > 0.0)) throw std::invalid_argument("apply_mass_drop: drop mass must be positive");
  ObjectParams out = params;
  const double m = params.m_b, m_new = m + drop_mass;
  out.m_b = m_new;
  out.r_p = (m * params.r_p + drop_mass * offset) / m_new;
  out.I_Gzz = params.I_Gzz + m * (params.r_p - out.r_p).squaredNorm() + drop_mass * (offset - out.r_p).squaredNorm();
  return out;
}

ObjectState transfer_state(const ObjectState& state, const ObjectParams& before, const ObjectParams& after) {
  const Vec2 x_g = com_position(before, state);
  const Vec2 v_g = com_velocity(before, state);
  const Vec2 x_g_new = com_position(after, state);
  const Vec2 v_g_new = before.m_b * v_g / after.m_b;
  // The dropped mass arrives at rest, so it adds no angular momentum.
  const double l = before.I_Gzz * state.omega + before.m_b * cross2(Vec2(x_g - x_g_new), v_g);
  ObjectState out = state;
  out.omega = l / after.I_Gzz;
  out.v_p = v_g_new + out.omega * perp(Vec2(state.x_p - x_g_new));
  return out;
}

double zone_mu(const std::vector<ScenarioEvent>& zones, double x, double fallback) {
  double best_from = -std::numeric_limits<double>::infinity();
  double mu = fallback;
  bool found = false;
  for (const ScenarioEvent& z : zones) {
    if (z.x_from <= x && (!found || z.x_from >= best_from)) {
      best_from = z.x_from;
      mu = z.mu;
      found = true;
    }
  }
  return mu;
}

namespace {

void mark(std::string& events, const std::string& m) {
  if (!events.empty()) events += '|';
  events += m;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Loop {
  const ScenarioConfig& cfg;
  RunLog log;

  DesiredTrajectory traj;
  ObjectParams truth;
  ObjectState state;
  std::vector<AgentState> agents;
  std::vector<AgentMpc> mpcs;
  std::vector<bool> commanded;
  std::vector<bool> was_in_contact;
  std::vector<ScenarioEvent> events;  // sorted, offsets resolved
  std::vector<ScenarioEvent> zones;   // switched on so far
  std::size_t next_event = 0;

  EstimateState est;
  ControlOutput ctrl;
  Vec3 s = Vec3::Zero();
  DesiredSample des;
  Allocation alloc;
  std::vector<double> held_force;
  std::vector<bool> limited;  // transmitted force cut to the agent's traction
  std::vector<MpcResult> held_u;
  std::string pending_events;

  explicit Loop(const ScenarioConfig& c) : cfg(c), traj(c.trajectory), truth(c.object) {
    log.config = cfg;
    std::mt19937_64 rng(cfg.seed);
    events = cfg.events;
    for (ScenarioEvent& e : events) {
      if (e.kind == ScenarioEvent::Kind::mass_drop && e.random_offset) {
        e.offset = Vec2(uniform(rng, -truth.half_extents.x(), truth.half_extents.x()),
                        uniform(rng, -truth.half_extents.y(), truth.half_extents.y()));
        e.random_offset = false;
      }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.time < b.time; });

    if (cfg.has_initial_state) {
      state = cfg.initial_state;
    } else {
      const DesiredSample d0 = traj.sample(0.0);
      state.x_p = d0.q.head<2>();
      state.theta = d0.q.z();
    }
    const std::size_t n = cfg.agents.size();
    for (const AgentConfig& a : cfg.agents) {
      commanded.push_back(a.active);
      agents.push_back(desired_agent_state(state, a.contact, 0.0, standoff_of(a, a.active)));
      mpcs.emplace_back(a.params, cfg.mpc);
    }
    was_in_contact.assign(n, false);
    alloc = Allocation::zeros(n);
    held_force.assign(n, 0.0);
    limited.assign(n, false);
    held_u.assign(n, MpcResult{});
    est = cfg.gains.initial_estimate;
  }

  static double standoff_of(const AgentConfig& a, bool cmd) {
    return a.contact.standoff + (cmd ? 0.0 : a.approach_gap);
  }

  std::vector<ContactSpec> contact_specs() const {
    std::vector<ContactSpec> c;
    for (const AgentConfig& a : cfg.agents) c.push_back(a.contact);
    return c;
  }

  double object_mu() const { return zone_mu(zones, com_position(truth, state).x(), cfg.object.mu); }
  double agent_mu(std::size_t i) const { return zone_mu(zones, agents[i].p.x(), cfg.agents[i].params.mu_a); }

  // Largest normal push agent i can react against its feet, given the per-axis traction bound.
  double traction_limit(std::size_t i) const {
    const AgentParams& ap = cfg.agents[i].params;
    const Vec2 n = rotation2(state.theta) * cfg.agents[i].contact.n_hat;
    return agent_mu(i) * ap.m * ap.g / std::max(std::abs(n.x()), std::abs(n.y()));
  }

  void apply_events(double t) {
    while (next_event < events.size() && events[next_event].time <= t + 1e-12) {
      const ScenarioEvent& e = events[next_event++];
      switch (e.kind) {
        case ScenarioEvent::Kind::mass_drop: {
          const ObjectParams after = apply_mass_drop(truth, e.mass, e.offset);
          state = transfer_state(state, truth, after);
          truth = after;
          mark(pending_events, "mass_drop:" + fmt("%g", e.mass));
          break;
        }
        case ScenarioEvent::Kind::friction_zone:
          zones.push_back(e);
          mark(pending_events, "friction_zone:" + fmt("%g", e.mu));
          break;
        case ScenarioEvent::Kind::agent_join:
          commanded[static_cast<std::size_t>(e.index)] = true;
          mark(pending_events, "agent_join:" + std::to_string(e.index + 1));
          break;
        case ScenarioEvent::Kind::agent_leave:
          commanded[static_cast<std::size_t>(e.index)] = false;
          mark(pending_events, "agent_leave:" + std::to_string(e.index + 1));
          break;
      }
    }
  }

  void level12(double t, double dt_l1) {
    des = traj.sample(t);
    if (cfg.controller == ControllerKind::adaptive) {
      const AdaptiveGains& g = cfg.gains.adaptive;
      s = composite_error(state, des, g.lambda);
      const ReferenceMotion ref = reference_motion(state, des, g.lambda);
      const Mat34 y = regressor_theta(state.theta, state.omega, ref.qd_r, ref.qdd_r);
      const Mat3 y_psi = regressor_psi(state);
      ctrl = control_wrench(est, y, y_psi, s, g.K_D, cfg.gains.limits);
      const bool any_limited = std::find(limited.begin(), limited.end(), true) != limited.end();
      if (cfg.gains.adapt_while_limited || !(ctrl.saturated || any_limited)) {
        est = adapt_step(est, y, y_psi, s, g, dt_l1);
      }
    } else {
      s = composite_error(state, des, cfg.gains.adaptive.lambda);
      ctrl = pd_wrench(state, des, cfg.gains.K_P_pd, cfg.gains.K_D_pd, cfg.gains.limits);
    }

    std::vector<ContactSpec> specs = contact_specs();
    const std::vector<double> zero(specs.size(), 0.0);
    const ContactResult geom = contact_resolve(state, specs, agents, zero, cfg.contact_tol);
    int active = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      specs[i].active = commanded[i] && geom.in_contact[i];
      if (commanded[i] && was_in_contact[i] && !geom.in_contact[i]) {
        mark(pending_events, "contact_loss:" + std::to_string(i + 1));
      }
      was_in_contact[i] = geom.in_contact[i];
      active += specs[i].active ? 1 : 0;
    }

    if (active == 0) {
      Allocation idle = Allocation::zeros(specs.size());
      idle.d = alloc.d;
      if (cfg.allocator == AllocatorKind::heuristic) {
        idle.d.setConstant(cfg.gains.k_p_d * wrap_angle(des.q.z() - state.theta));
      }
      alloc = idle;
    } else if (cfg.allocator == AllocatorKind::qp) {
      alloc = allocate(ctrl.tau.f, ctrl.tau.m, state.theta, specs, alloc, cfg.allocation);
    } else {
      alloc = heuristic_allocate(ctrl.tau.f, ctrl.tau.m, state.theta, des.q.z(), specs, alloc, cfg.gains.k_p_d,
                                 cfg.allocation);
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const double f = alloc.F_r(static_cast<Index>(i));
      const double cap = traction_limit(i);
      limited[i] = specs[i].active && f > cap;
      held_force[i] = std::min(f, cap);
    }
    record(t, active);
  }

  void record(double t, int active) {
    LogRecord r;
    r.t = t;
    r.state = state;
    r.desired = des;
    r.s = s;
    r.tau = ctrl.tau;
    r.tau_saturated = ctrl.saturated;
    r.estimate = est;
    r.active_count = active;
    r.relaxed = alloc.relaxed;
    r.allocation_status = alloc.status;
    r.residual = alloc.residual_wrench;
    r.mu_object = object_mu();
    r.truth = truth;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      AgentRecord a;
      a.F_r = alloc.F_r(static_cast<Index>(i));
      a.d = alloc.d(static_cast<Index>(i));
      a.commanded = commanded[i];
      a.in_contact = was_in_contact[i];
      a.u = held_u[i].u;
      a.saturated = held_u[i].saturated || limited[i];
      a.mpc_failed = held_u[i].failed;
      a.state = agents[i];
      r.agents.push_back(a);
    }
    r.event = std::move(pending_events);
    pending_events.clear();
    log.records.push_back(std::move(r));
  }

  void level3() {
    ++log.l3_updates;
    const Mat2 rot = rotation2(state.theta);
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const AgentConfig& a = cfg.agents[i];
      const AgentState ref =
          desired_agent_state(state, a.contact, alloc.d(static_cast<Index>(i)), standoff_of(a, commanded[i]));
      const std::vector<Vec6> refs = reference_horizon(ref, agents[i].yaw, cfg.mpc);
      const Vec2 f_cmd = rot * (held_force[i] * a.contact.n_hat);
      held_u[i] = mpcs[i].step(agents[i], f_cmd, refs, agent_mu(i));
    }
  }

  void physics(double dt) {
    const std::vector<ContactSpec> specs = contact_specs();
    const ContactResult cr = contact_resolve(state, specs, agents, held_force, cfg.contact_tol);
    ObjectParams p = truth;
    p.mu = object_mu();
    const ObjectState next = step(state, p, cr.on_object, dt, cfg.friction);
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const AgentParams& ap = cfg.agents[i].params;
      const double cap = agent_mu(i) * ap.m * ap.g;
      const Vec3& u = held_u[i].u;
      const Vec2 uf(std::clamp(u.x(), -cap, cap), std::clamp(u.y(), -cap, cap));
      const double um = std::clamp(u.z(), -ap.M_cap, ap.M_cap);
      AgentState& x = agents[i];
      x.v += dt * (uf + cr.on_agent[i]) / ap.m;
      x.yaw_rate += dt * um / ap.I;
      x.p += dt * x.v;
      x.yaw = wrap_angle(x.yaw + dt * x.yaw_rate);
    }
    state = next;
  }

  void run() {
    const double dt = 1.0 / cfg.rates.physics_hz;
    const long n_steps = std::lround(cfg.duration * cfg.rates.physics_hz);
    // A level fires on the first physics tick at or after each of its periods.
    auto period_index = [&](long k, double hz) {
      return static_cast<long>(std::floor(static_cast<double>(k) * hz / cfg.rates.physics_hz + 1e-9));
    };
    auto fires = [&](long k, double hz) { return k == 0 || period_index(k, hz) != period_index(k - 1, hz); };
    double last_l12 = 0.0;
    for (long k = 0; k <= n_steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      try {
        apply_events(t);
        if (fires(k, cfg.rates.l1_l2_hz)) {
          level12(t, k == 0 ? 1.0 / cfg.rates.l1_l2_hz : t - last_l12);
          last_l12 = t;
        }
        if (k == n_steps) break;
        if (fires(k, cfg.rates.l3_hz)) level3();
        physics(dt);
        bool finite = state.finite();
        for (const AgentState& a : agents) finite = finite && a.vector().allFinite();
        if (!finite) throw std::runtime_error("non-finite state");
      } catch (const std::exception& e) {
        log.aborted = true;
        log.abort_reason = fmt("t=%.6f: ", t) + e.what();
        mark(pending_events, "abort");
        record(t, 0);
        return;
      }
    }
  }
};

}  // namespace

RunLog run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Loop loop(cfg);
  loop.run();
  return std::move(loop.log);
}

}  // namespace comanip
