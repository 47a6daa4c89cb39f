#include "comanip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace comanip {

double position_error(const LogRecord& r) { return (r.state.x_p - r.desired.q.head<2>()).norm(); }

double yaw_error(const LogRecord& r) { return std::abs(wrap_angle(r.state.theta - r.desired.q.z())); }

std::vector<double> position_error_series(const RunLog& log) {
  std::vector<double> e;
  e.reserve(log.records.size());
  for (const LogRecord& r : log.records) e.push_back(position_error(r));
  return e;
}

double mean_position_error(const RunLog& log, double t0, double t1) {
  double sum = 0.0;
  int n = 0;
  for (const LogRecord& r : log.records) {
    if (r.t >= t0 - 1e-9 && r.t <= t1 + 1e-9) {
      sum += position_error(r);
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

Metrics compute_metrics(const RunLog& log) {
  if (log.records.empty()) throw std::invalid_argument("compute_metrics: empty log");
  Metrics m;
  m.records = log.records.size();
  m.aborted = log.aborted;
  const double n = static_cast<double>(log.records.size());
  double sq_pos = 0.0, sq_yaw = 0.0, sat = 0.0, agent_sat = 0.0, agent_ticks = 0.0, relaxed = 0.0;
  const LogRecord* prev = nullptr;
  for (const LogRecord& r : log.records) {
    const double ep = position_error(r), ey = yaw_error(r);
    sq_pos += ep * ep;
    sq_yaw += ey * ey;
    m.max_position_error = std::max(m.max_position_error, ep);
    m.max_yaw_error = std::max(m.max_yaw_error, ey);
    sat += r.tau_saturated ? 1.0 : 0.0;
    relaxed += r.relaxed ? 1.0 : 0.0;
    m.theta_hat_max_norm = std::max(m.theta_hat_max_norm, r.estimate.theta_hat.norm());
    m.psi_hat_max_norm = std::max(m.psi_hat_max_norm, r.estimate.psi_hat.norm());
    if (r.active_count > 0 && !r.relaxed) {
      m.max_balance_residual = std::max(m.max_balance_residual, r.residual.cwiseAbs().maxCoeff());
    }
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
      const AgentRecord& a = r.agents[i];
      const ContactSpec& c = log.config.agents[i].contact;
      if (a.commanded) {
        agent_ticks += 1.0;
        agent_sat += a.saturated ? 1.0 : 0.0;
      }
      if (a.d < c.d_min - 1e-12 || a.d > c.d_max + 1e-12) m.d_within_bounds = false;
      if (prev && a.in_contact && prev->agents[i].in_contact) {
        m.max_d_step = std::max(m.max_d_step, std::abs(a.d - prev->agents[i].d));
      }
    }
    std::size_t pos = 0;
    while ((pos = r.event.find("contact_loss", pos)) != std::string::npos) {
      ++m.contact_losses;
      ++pos;
    }
    prev = &r;
  }
  m.rms_position_error = std::sqrt(sq_pos / n);
  m.rms_yaw_error = std::sqrt(sq_yaw / n);
  m.saturation_duty = sat / n;
  m.agent_saturation_duty = agent_ticks > 0.0 ? agent_sat / agent_ticks : 0.0;
  m.relaxed_fraction = relaxed / n;
  m.final_position_error = position_error(log.records.back());
  m.final_yaw_error = yaw_error(log.records.back());
  const double t_end = log.records.back().t;
  m.steady_position_error = mean_position_error(log, t_end - log.config.metrics_window, t_end);
  return m;
}

nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"rms_position_error", m.rms_position_error},
          {"max_position_error", m.max_position_error},
          {"final_position_error", m.final_position_error},
          {"steady_position_error", m.steady_position_error},
          {"rms_yaw_error", m.rms_yaw_error},
          {"max_yaw_error", m.max_yaw_error},
          {"final_yaw_error", m.final_yaw_error},
          {"contact_losses", m.contact_losses},
          {"saturation_duty", m.saturation_duty},
          {"agent_saturation_duty", m.agent_saturation_duty},
          {"theta_hat_max_norm", m.theta_hat_max_norm},
          {"psi_hat_max_norm", m.psi_hat_max_norm},
          {"max_balance_residual", m.max_balance_residual},
          {"relaxed_fraction", m.relaxed_fraction},
          {"max_d_step", m.max_d_step},
          {"d_within_bounds", m.d_within_bounds},
          {"records", m.records},
          {"aborted", m.aborted}};
}

}  // namespace comanip
