#include "fiberband/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fiberband/errors.hpp"

namespace fiberband {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Drops a # comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    else if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

struct Entry {
  std::string path;  // section.key, for diagnostics
  std::string raw;   // value text
};

double as_number(const Entry& e) {
  const std::string v = trim(e.raw);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(e.path, "expected a number, got '" + v + "'");
  return x;
}

long long as_integer(const Entry& e) {
  const double x = as_number(e);
  const long long i = static_cast<long long>(x);
  if (double(i) != x) throw ConfigError(e.path, "expected an integer");
  return i;
}

std::size_t as_size(const Entry& e) {
  const long long i = as_integer(e);
  if (i < 0) throw ConfigError(e.path, "expected a nonnegative integer");
  return static_cast<std::size_t>(i);
}

unsigned long long as_seed(const Entry& e) {
  const std::string v = trim(e.raw);
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 0);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(e.path, "expected an unsigned integer");
  return x;
}

bool as_bool(const Entry& e) {
  const std::string v = trim(e.raw);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(e.path, "expected true or false, got '" + v + "'");
}

std::string as_string(const Entry& e) {
  const std::string v = trim(e.raw);
  if (v.size() < 2 || v.front() != '"' || v.back() != '"')
    throw ConfigError(e.path, "expected a quoted string");
  return v.substr(1, v.size() - 2);
}

std::vector<std::string> split_array(const Entry& e) {
  const std::string v = trim(e.raw);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ConfigError(e.path, "expected a [ ... ] array on one line");
  std::vector<std::string> parts;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const char c = v[i];
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) parts.push_back(trim(cur));
  return parts;
}

std::vector<double> as_number_array(const Entry& e) {
  std::vector<double> out;
  for (const std::string& p : split_array(e))
    out.push_back(as_number(Entry{e.path, p}));
  return out;
}

std::vector<std::string> as_string_array(const Entry& e) {
  std::vector<std::string> out;
  for (const std::string& p : split_array(e))
    out.push_back(as_string(Entry{e.path, p}));
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno),
                          "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      static const char* known[] = {"profile",  "grid",        "tolerances",
                                    "slice",    "sweep",       "flatband",
                                    "harmonic", "asymptotics", "scattering",
                                    "agmon",    "output"};
      if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
            return section == k;
          }) == std::end(known))
        throw ConfigError(section, "unknown section");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno),
                        "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (section.empty())
      throw ConfigError(key, "key outside any [section]");
    const Entry e{section + "." + key, s.substr(eq + 1)};

    if (section == "profile") {
      auto& p = cfg.profile;
      if (key == "kind") {
        p.kind = as_string(e);
        static const char* kinds[] = {"constant", "gaussian", "power_law",
                                      "step", "tabulated"};
        if (std::find_if(std::begin(kinds), std::end(kinds),
                         [&](const char* k) { return p.kind == k; }) ==
            std::end(kinds))
          throw ConfigError(e.path, "unknown profile kind '" + p.kind + "'");
      } else if (key == "b0") p.b0 = as_number(e);
      else if (key == "c1") p.c1 = as_number(e);
      else if (key == "alpha") p.alpha = as_number(e);
      else if (key == "regularized") p.regularized = as_bool(e);
      else if (key == "b_left") p.b_left = as_number(e);
      else if (key == "b_right") p.b_right = as_number(e);
      else if (key == "width") p.width = as_number(e);
      else if (key == "a0") p.a0 = as_number(e);
      else if (key == "file") p.file = as_string(e);
      else throw ConfigError(e.path, "unknown key");
    } else if (section == "grid") {
      auto& g = cfg.grid;
      if (key == "points_per_length") g.points_per_length = as_number(e);
      else if (key == "epsilon_trunc") g.epsilon_trunc = as_number(e);
      else if (key == "margin_scale") g.margin_scale = as_number(e);
      else if (key == "min_points") g.min_points = as_size(e);
      else if (key == "max_points") g.max_points = as_size(e);
      else if (key == "refine") g.refine = as_bool(e);
      else if (key == "e_cap") g.e_cap = as_number(e);
      else if (key == "stencil") {
        const std::string v = as_string(e);
        if (v == "order2") g.stencil = Stencil::order2;
        else if (v == "order4") g.stencil = Stencil::order4;
        else throw ConfigError(e.path, "stencil must be order2 or order4");
      } else throw ConfigError(e.path, "unknown key");
    } else if (section == "tolerances") {
      auto& t = cfg.tol;
      if (key == "quadrature") t.quadrature = as_number(e);
      else if (key == "eigen_abs") t.eigen_abs = as_number(e);
      else if (key == "eigen_rel") t.eigen_rel = as_number(e);
      else if (key == "residual") t.residual = as_number(e);
      else if (key == "root") t.root = as_number(e);
      else if (key == "seed") t.seed = as_seed(e);
      else throw ConfigError(e.path, "unknown key");
    } else if (section == "slice") {
      auto& c = cfg.slice;
      if (key == "xi") c.xi = as_number(e);
      else if (key == "h") c.h = as_number(e);
      else if (key == "k_max") c.k_max = as_integer(e);
      else if (key == "e_max") c.e_max = as_number(e);
      else throw ConfigError(e.path, "unknown key");
    } else if (section == "sweep") {
      auto& c = cfg.sweep;
      if (key == "xi_min") c.xi_min = as_number(e);
      else if (key == "xi_max") c.xi_max = as_number(e);
      else if (key == "count") c.count = as_size(e);
      else if (key == "h") c.h = as_number(e);
      else if (key == "k_max") c.k_max = as_size(e);
      else throw ConfigError(e.path, "unknown key");
    } else if (section == "flatband") {
      auto& c = cfg.flatband;
      if (key == "lambda") c.lambda = as_number(e);
      else if (key == "h") c.h = as_number(e);
      else if (key == "band") c.band = as_size(e);
      else if (key == "samples") c.samples = as_size(e);
      else if (key == "window") {
        const std::vector<double> w = as_number_array(e);
        if (w.size() != 2 || !(w[0] < w[1]))
          throw ConfigError(e.path, "window must be [lo, hi] with lo < hi");
        c.window_lo = w[0];
        c.window_hi = w[1];
      } else throw ConfigError(e.path, "unknown key");
    } else if (section == "harmonic") {
      auto& c = cfg.harmonic;
      if (key == "theta") c.theta = as_number(e);
      else if (key == "hs") c.hs = as_number_array(e);
      else if (key == "n_max") c.n_max = as_size(e);
      else if (key == "eta") c.eta = as_number(e);
      else if (key == "counting") c.counting = as_bool(e);
      else if (key == "counting_eta") c.counting_eta = as_number(e);
      else if (key == "counting_h") c.counting_h = as_number(e);
      else if (key == "agmon") c.agmon = as_bool(e);
      else if (key == "agmon_band") c.agmon_band = as_size(e);
      else if (key == "agmon_h") c.agmon_h = as_number(e);
      else throw ConfigError(e.path, "unknown key");
    } else if (section == "asymptotics") {
      auto& c = cfg.asymptotics;
      if (key == "xis") c.xis = as_number_array(e);
      else if (key == "xi_min") c.xi_min = as_number(e);
      else if (key == "xi_max") c.xi_max = as_number(e);
      else if (key == "count") c.count = as_size(e);
      else if (key == "n_max") c.n_max = as_size(e);
      else if (key == "rescaled") c.rescaled = as_bool(e);
      else throw ConfigError(e.path, "unknown key");
    } else if (section == "scattering") {
      auto& c = cfg.scattering;
      if (key == "xi") c.xi = as_number(e);
      else if (key == "lambdas") c.lambdas = as_number_array(e);
      else if (key == "lambda") c.lambdas = {as_number(e)};
      else throw ConfigError(e.path, "unknown key");
    } else if (section == "agmon") {
      auto& c = cfg.agmon;
      if (key == "xi") c.xi = as_number(e);
      else if (key == "h") c.h = as_number(e);
      else if (key == "band") c.band = as_size(e);
      else if (key == "gamma") c.gamma = as_number(e);
      else throw ConfigError(e.path, "unknown key");
    } else if (section == "output") {
      auto& c = cfg.output;
      if (key == "dir") c.dir = as_string(e);
      else if (key == "basename") c.basename = as_string(e);
      else if (key == "strict") c.strict = as_bool(e);
      else if (key == "formats") {
        c.formats = as_string_array(e);
        for (const std::string& f : c.formats)
          if (f != "csv" && f != "json" && f != "plotdata")
            throw ConfigError(e.path, "unknown format '" + f + "'");
      } else throw ConfigError(e.path, "unknown key");
    }
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

ProfilePtr build_profile(const ProfileConfig& pc) {
  if (pc.kind == "constant") return make_constant_field(pc.b0, pc.a0);
  if (pc.kind == "gaussian") {
    ProfilePtr p = make_gaussian_field(pc.a0);
    return p;
  }
  if (pc.kind == "power_law")
    return make_power_law_field(pc.c1, pc.alpha, pc.a0, pc.regularized);
  if (pc.kind == "step")
    return make_step_field(pc.b_left, pc.b_right, pc.width, pc.a0);
  if (pc.kind == "tabulated") {
    if (pc.file.empty())
      throw ConfigError("profile.file", "tabulated profile needs a data file");
    std::ifstream in(pc.file);
    if (!in) throw ConfigError("profile.file", "cannot open '" + pc.file + "'");
    std::vector<double> xs, bs;
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      double x, b;
      if (ls >> x >> b) {
        xs.push_back(x);
        bs.push_back(b);
      }
    }
    if (xs.size() < 2)
      throw ConfigError("profile.file", "need at least two samples");
    return make_tabulated_field(std::move(xs), std::move(bs), pc.a0);
  }
  throw ConfigError("profile.kind", "unknown profile kind '" + pc.kind + "'");
}

}  // namespace fiberband
