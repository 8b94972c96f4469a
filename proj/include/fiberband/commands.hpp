#pragma once

#include <string>

#include "fiberband/config.hpp"
#include "fiberband/parallel.hpp"
#include "fiberband/report.hpp"

namespace fiberband {

RunReport cmd_slice(const RunConfig& cfg, const ExecPolicy& exec);
RunReport cmd_bands(const RunConfig& cfg, const ExecPolicy& exec);
RunReport cmd_flatband(const RunConfig& cfg, const ExecPolicy& exec);
RunReport cmd_harmonic(const RunConfig& cfg, const ExecPolicy& exec);
RunReport cmd_asymptotics(const RunConfig& cfg, const ExecPolicy& exec);
RunReport cmd_scattering(const RunConfig& cfg, const ExecPolicy& exec);
RunReport cmd_agmon(const RunConfig& cfg, const ExecPolicy& exec);

// Dispatch by name; stamps wall_clock_sec and the config echo into meta.
// Throws ConfigError for an unknown command name.
RunReport run_command(const std::string& name, const RunConfig& cfg,
                      const ExecPolicy& exec);

}  // namespace fiberband
