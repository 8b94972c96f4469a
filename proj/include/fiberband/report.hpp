#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fiberband/config.hpp"
#include "json.hpp"

namespace fiberband {

// Result of one CLI command: scalar findings in meta, a numeric table for
// the per-band or per-level output, free-text notes for verdicts.
struct RunReport {
  std::string command;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> notes;
  int exit_code = 0;
};

// 64-bit FNV-1a of the byte string, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

nlohmann::json config_to_json(const RunConfig& cfg);

// Serialized report with a content hash over everything except the volatile
// keys (timestamp, wall_clock_sec, the hash itself).
nlohmann::json report_to_json(const RunReport& rep);
std::string report_to_csv(const RunReport& rep);
std::string report_to_plotdata(const RunReport& rep);

// Writes basename.{json,csv,dat} into out.dir per requested format; returns
// the written paths.
std::vector<std::string> write_outputs(const RunReport& rep,
                                       const OutputConfig& out);

}  // namespace fiberband
