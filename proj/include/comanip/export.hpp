#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "comanip/metrics.hpp"
#include "comanip/simulation.hpp"

namespace comanip {

/// git-describe style identifier baked in at build time.
const char* build_id();

std::string csv_header(std::size_t num_agents);
void write_csv(std::ostream& os, const RunLog& log);

nlohmann::json summary_json(const RunLog& log, const Metrics& metrics);

/// Overhead view of actual and desired paths.
std::string trajectory_svg(const RunLog& log);
/// Position and yaw error against time.
std::string error_svg(const RunLog& log);

struct ExportPaths {
  std::filesystem::path csv;
  std::filesystem::path summary;
  std::filesystem::path trajectory_svg;  // empty to skip
  std::filesystem::path error_svg;       // empty to skip
};

/// Writes every non-empty path; throws std::runtime_error naming the path on I/O failure.
void export_run(const RunLog& log, const Metrics& metrics, const ExportPaths& paths);

}  // namespace comanip
