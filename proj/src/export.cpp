#include "comanip/export.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef COMANIP_BUILD_ID
#define COMANIP_BUILD_ID "unknown"
#endif

namespace comanip {

const char* build_id() { return COMANIP_BUILD_ID; }

namespace {

void num(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  out += ',';
  out += buf;
}

}  // namespace

std::string csv_header(std::size_t num_agents) {
  std::string h = "t,xp_x,xp_y,theta,xd_x,xd_y,theta_d,s1,s2,s3,tau_fx,tau_fy,tau_m";
  for (int i = 1; i <= 4; ++i) h += ",theta_hat_" + std::to_string(i);
  for (int i = 1; i <= 3; ++i) h += ",psi_hat_" + std::to_string(i);
  for (std::size_t i = 1; i <= num_agents; ++i) {
    const std::string k = std::to_string(i);
    h += ",Fr_" + k + ",d_" + k + ",contact_" + k + ",ufx_" + k + ",ufy_" + k + ",um_" + k + ",sat_" + k;
  }
  h += ",event";
  return h;
}

void write_csv(std::ostream& os, const RunLog& log) {
  const std::size_t n = log.config.agents.size();
  os << csv_header(n) << '\n';
  std::string row;
  for (const LogRecord& r : log.records) {
    row.clear();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", r.t);
    row += buf;
    num(row, r.state.x_p.x());
    num(row, r.state.x_p.y());
    num(row, r.state.theta);
    num(row, r.desired.q.x());
    num(row, r.desired.q.y());
    num(row, r.desired.q.z());
    for (int i = 0; i < 3; ++i) num(row, r.s(i));
    num(row, r.tau.f.x());
    num(row, r.tau.f.y());
    num(row, r.tau.m);
    for (int i = 0; i < 4; ++i) num(row, r.estimate.theta_hat(i));
    for (int i = 0; i < 3; ++i) num(row, r.estimate.psi_hat(i));
    for (const AgentRecord& a : r.agents) {
      num(row, a.F_r);
      num(row, a.d);
      row += a.in_contact ? ",1" : ",0";
      num(row, a.u.x());
      num(row, a.u.y());
      num(row, a.u.z());
      row += a.saturated ? ",1" : ",0";
    }
    row += ',';
    row += r.event;
    os << row << '\n';
  }
}

nlohmann::json summary_json(const RunLog& log, const Metrics& metrics) {
  return {{"scenario", log.config.name},
          {"controller", to_string(log.config.controller)},
          {"allocator", to_string(log.config.allocator)},
          {"metrics", metrics_to_json(metrics)},
          {"aborted", log.aborted},
          {"abort_reason", log.abort_reason},
          {"l3_updates", log.l3_updates},
          {"config", scenario_to_json(log.config)},
          {"build_id", build_id()}};
}

namespace {

struct Series {
  std::vector<double> x, y;
  std::string color;
  std::string label;
};

// Minimal line plot with axis extents and a legend.
std::string svg_plot(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, bool equal_aspect) {
  const double w = 640, h = 480, ml = 70, mr = 20, mt = 40, mb = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Series& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  const double pw = w - ml - mr, ph = h - mt - mb;
  double sx = pw / (x1 - x0), sy = ph / (y1 - y0);
  if (equal_aspect) sx = sy = std::min(sx, sy);

  std::ostringstream o;
  char buf[128];
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  std::snprintf(buf, sizeof buf, "%.3g", x0);
  o << "<text x=\"" << ml << "\" y=\"" << h - mb + 18 << "\" font-size=\"12\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.3g", x0 + pw / sx);
  o << "<text x=\"" << ml + pw << "\" y=\"" << h - mb + 18 << "\" text-anchor=\"end\" font-size=\"12\">" << buf
    << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.3g", y0);
  o << "<text x=\"" << ml - 6 << "\" y=\"" << mt + ph << "\" text-anchor=\"end\" font-size=\"12\">" << buf
    << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.3g", y0 + ph / sy);
  o << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 12 << "\" text-anchor=\"end\" font-size=\"12\">" << buf
    << "</text>\n";
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" transform=\"rotate(-90 16 " << mt + ph / 2
    << ")\" text-anchor=\"middle\" font-size=\"13\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", ml + (s.x[i] - x0) * sx, mt + ph - (s.y[i] - y0) * sy);
      o << buf;
    }
    o << "\"/>\n";
    const double ly = mt + 16 + 16 * static_cast<double>(k);
    o << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + pw - 125 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << ml + pw - 120 << "\" y=\"" << ly << "\" font-size=\"12\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace

std::string trajectory_svg(const RunLog& log) {
  Series actual{{}, {}, "#1f77b4", "object p"}, desired{{}, {}, "#d62728", "desired"};
  for (const LogRecord& r : log.records) {
    actual.x.push_back(r.state.x_p.x());
    actual.y.push_back(r.state.x_p.y());
    desired.x.push_back(r.desired.q.x());
    desired.y.push_back(r.desired.q.y());
  }
  return svg_plot({desired, actual}, log.config.name + ": overhead view", "x [m]", "y [m]", true);
}

std::string error_svg(const RunLog& log) {
  Series pos{{}, {}, "#1f77b4", "position [m]"}, yaw{{}, {}, "#2ca02c", "yaw [rad]"};
  for (const LogRecord& r : log.records) {
    pos.x.push_back(r.t);
    pos.y.push_back(position_error(r));
    yaw.x.push_back(r.t);
    yaw.y.push_back(yaw_error(r));
  }
  return svg_plot({pos, yaw}, log.config.name + ": tracking error", "t [s]", "error", false);
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void export_run(const RunLog& log, const Metrics& metrics, const ExportPaths& paths) {
  if (!paths.csv.empty()) {
    std::ostringstream o;
    write_csv(o, log);
    write_text(paths.csv, o.str());
  }
  if (!paths.summary.empty()) write_text(paths.summary, summary_json(log, metrics).dump(2) + "\n");
  if (!paths.trajectory_svg.empty()) write_text(paths.trajectory_svg, trajectory_svg(log));
  if (!paths.error_svg.empty()) write_text(paths.error_svg, error_svg(log));
}

}  // namespace comanip
