#pragma once

#include <vector>

#include <json.hpp>

#include "comanip/simulation.hpp"

namespace comanip {

struct Metrics {
  double rms_position_error = 0.0;
  double max_position_error = 0.0;
  double final_position_error = 0.0;
  double steady_position_error = 0.0;  // mean over the last metrics_window seconds
  double rms_yaw_error = 0.0;
  double max_yaw_error = 0.0;
  double final_yaw_error = 0.0;
  int contact_losses = 0;
  double saturation_duty = 0.0;        // share of L1 ticks with a clamped object wrench
  double agent_saturation_duty = 0.0;  // share of (tick, commanded agent) pairs at an MPC bound
  double theta_hat_max_norm = 0.0;
  double psi_hat_max_norm = 0.0;
  double max_balance_residual = 0.0;  // over non-relaxed ticks with active agents
  double relaxed_fraction = 0.0;
  double max_d_step = 0.0;  // largest tick-to-tick slide change of an active agent
  bool d_within_bounds = true;
  std::size_t records = 0;
  bool aborted = false;
};

double position_error(const LogRecord& r);
double yaw_error(const LogRecord& r);

/// Position-error time series aligned with the log records.
std::vector<double> position_error_series(const RunLog& log);

/// Mean position error over records with t in [t0, t1].
double mean_position_error(const RunLog& log, double t0, double t1);

Metrics compute_metrics(const RunLog& log);
nlohmann::json metrics_to_json(const Metrics& m);

}  // namespace comanip
