#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "comanip/adaptive_control.hpp"
#include "comanip/agent_mpc.hpp"
#include "comanip/force_allocation.hpp"
#include "comanip/planar_dynamics.hpp"
#include "comanip/trajectory.hpp"

namespace comanip {

struct AgentConfig {
  AgentParams params;
  ContactSpec contact;
  bool active = true;         // commanded from t = 0
  double approach_gap = 0.5;  // extra standoff while not commanded
};

struct ScenarioEvent {
  enum class Kind { mass_drop, friction_zone, agent_join, agent_leave };
  double time = 0.0;
  Kind kind = Kind::mass_drop;
  double mass = 0.0;
  Vec2 offset = Vec2::Zero();  // same sign convention as ObjectParams::r_p
  bool random_offset = false;
  double x_from = 0.0;
  double mu = 0.0;
  int index = 0;
};

const char* to_string(ScenarioEvent::Kind k);

struct Rates {
  double physics_hz = 1000.0;
  double l1_l2_hz = 100.0;
  double l3_hz = 150.0;
};

enum class ControllerKind { adaptive, pd };
enum class AllocatorKind { qp, heuristic };

struct ControllerGains {
  AdaptiveGains adaptive;
  Mat3 K_P_pd = Vec3(40.0, 40.0, 15.0).asDiagonal();
  Mat3 K_D_pd = Vec3(40.0, 40.0, 15.0).asDiagonal();
  WrenchLimits limits;
  EstimateState initial_estimate;
  double k_p_d = 1.0;  // heuristic slide gain
  bool adapt_while_limited = false;  // keep adapting while the wrench is clipped or an agent is traction-limited
};

struct ScenarioConfig {
  std::string name = "scenario";
  ObjectParams object;
  bool has_initial_state = false;
  ObjectState initial_state;
  std::vector<AgentConfig> agents;
  TrajectorySpec trajectory;
  Rates rates;
  std::vector<ScenarioEvent> events;
  ControllerKind controller = ControllerKind::adaptive;
  AllocatorKind allocator = AllocatorKind::qp;
  ControllerGains gains;
  AllocatorConfig allocation;
  MpcConfig mpc;
  FrictionModel friction;
  double contact_tol = 0.03;
  double duration = 10.0;
  std::uint64_t seed = 0;
  double metrics_window = 3.0;  // seconds averaged for steady-state error

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::filesystem::path& path);

ControllerKind parse_controller(const std::string& s);
AllocatorKind parse_allocator(const std::string& s);
const char* to_string(ControllerKind k);
const char* to_string(AllocatorKind k);

}  // namespace comanip
