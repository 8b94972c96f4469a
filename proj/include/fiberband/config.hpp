#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fiberband/field_profile.hpp"
#include "fiberband/grid.hpp"

namespace fiberband {

struct ProfileConfig {
  std::string kind = "gaussian";  // constant | gaussian | power_law | step | tabulated
  double b0 = 1.0;                // constant field strength
  double c1 = 1.0;                // power-law scale
  double alpha = 1.0;             // power-law exponent
  bool regularized = true;        // smooth the power law through the origin
  double b_left = 0.0;            // step: asymptotic slope on the left
  double b_right = 1.0;           // step: asymptotic slope on the right
  double width = 1.0;             // step transition width
  double a0 = 0.0;                // gauge offset
  std::string file;               // tabulated: two-column x b data
};

struct SliceConfig {
  double xi = 0.0;
  double h = 0.01;
  long long k_max = -1;
  std::optional<double> e_max;
};

struct SweepConfig {
  double xi_min = -2.0, xi_max = 2.0;
  std::size_t count = 33;
  double h = 0.01;
  std::size_t k_max = 4;
};

struct FlatbandConfig {
  double lambda = 1.0;
  double h = 0.01;
  std::size_t band = 1;
  std::size_t samples = 9;
  double window_lo = -8.0, window_hi = 8.0;
};

struct HarmonicConfig {
  double theta = 0.5;
  std::vector<double> hs{0.1, 0.03, 0.01, 0.003};
  std::size_t n_max = 3;
  double eta = 0.0;  // <= 0: derived from the essential threshold
  bool counting = false;
  double counting_eta = 0.02;
  double counting_h = 0.001;
  bool agmon = false;
  std::size_t agmon_band = 1;
  double agmon_h = 0.01;
};

struct AsymptoticsConfig {
  std::vector<double> xis;  // empty: log-spaced from xi_min to xi_max
  double xi_min = 100.0, xi_max = 10000.0;
  std::size_t count = 3;
  std::size_t n_max = 3;
  bool rescaled = true;
};

struct ScatteringConfig {
  double xi = 0.5;
  std::vector<double> lambdas{0.3};
};

struct AgmonConfig {
  double xi = 0.0;
  double h = 0.01;
  std::size_t band = 1;
  std::optional<double> gamma;  // unset: rate picked from the gap
};

struct OutputConfig {
  std::string dir = ".";
  std::string basename = "run";
  std::vector<std::string> formats{"json"};
  bool strict = false;  // inconclusive verdicts become exit code 4
};

struct RunConfig {
  ProfileConfig profile;
  GridPolicy grid;
  Tolerances tol;
  SliceConfig slice;
  SweepConfig sweep;
  FlatbandConfig flatband;
  HarmonicConfig harmonic;
  AsymptoticsConfig asymptotics;
  ScatteringConfig scattering;
  AgmonConfig agmon;
  OutputConfig output;
};

// Parses the key = value configuration dialect: [section] headers, numbers,
// booleans, quoted strings, single-line arrays, # comments. Unknown sections
// or keys are errors, not warnings.
RunConfig parse_config_text(const std::string& text,
                            const std::string& origin = "<string>");
RunConfig parse_config_file(const std::string& path);

ProfilePtr build_profile(const ProfileConfig& pc);

}  // namespace fiberband
