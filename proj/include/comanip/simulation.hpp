#pragma once

// Multi-rate closed loop: L1 (object wrench) and L2 (allocation) at
// l1_l2_hz, L3 (per-agent MPC) at l3_hz, physics at physics_hz. Commands are
// zero-order held between updates.

#include <string>
#include <vector>

#include "comanip/scenario.hpp"

namespace comanip {

struct AgentRecord {
  double F_r = 0.0;
  double d = 0.0;
  bool commanded = false;
  bool in_contact = false;
  Vec3 u = Vec3::Zero();
  bool saturated = false;
  bool mpc_failed = false;
  AgentState state;
};

/// One L1 tick.
struct LogRecord {
  double t = 0.0;
  ObjectState state;
  DesiredSample desired;
  Vec3 s = Vec3::Zero();
  Wrench tau;
  bool tau_saturated = false;
  EstimateState estimate;
  std::vector<AgentRecord> agents;
  std::string event;  // '|'-separated markers, empty if none
  int active_count = 0;
  bool relaxed = false;
  QpStatus allocation_status = QpStatus::optimal;
  Vec3 residual = Vec3::Zero();
  double mu_object = 0.0;
  ObjectParams truth;  // ground truth at this tick, for diagnostics only
};

struct RunLog {
  ScenarioConfig config;
  std::vector<LogRecord> records;
  bool aborted = false;
  std::string abort_reason;
  long l3_updates = 0;
};

/// Composite body after rigidly attaching a point mass at body offset
/// `offset` (same convention as r_p).
ObjectParams apply_mass_drop(const ObjectParams& params, double drop_mass, const Vec2& offset);

/// Object state just after an inelastic drop of a mass at rest: linear
/// momentum and angular momentum about the new COM are preserved.
ObjectState transfer_state(const ObjectState& state, const ObjectParams& before, const ObjectParams& after);

/// Terrain friction at world x given the zones switched on so far; `fallback`
/// applies where no zone covers x.
double zone_mu(const std::vector<ScenarioEvent>& zones, double x, double fallback);

RunLog run_scenario(const ScenarioConfig& cfg);

}  // namespace comanip
