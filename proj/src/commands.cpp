#include "fiberband/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "fiberband/errors.hpp"
#include "fiberband/scattering.hpp"
#include "fiberband/semiclassical.hpp"
#include "fiberband/spectral.hpp"

namespace fiberband {

namespace {

nlohmann::json xr_json(const ExtendedReal& x) {
  if (x.finite()) return x.value();
  return x.str();
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) return {lo};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * double(i) / double(n - 1);
  return out;
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo))
    throw ConfigError("asymptotics.xi_min", "need 0 < xi_min < xi_max");
  if (n < 2) return {lo};
  std::vector<double> out(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
  return out;
}

std::string interval_str(const SigmaComponent& c) {
  return "(" + c.lo.str() + ", " + c.hi.str() + ")";
}

}  // namespace

RunReport cmd_slice(const RunConfig& cfg, const ExecPolicy&) {
  RunReport rep;
  rep.command = "slice";
  const ProfilePtr p = build_profile(cfg.profile);
  const SliceConfig& sc = cfg.slice;
  const SliceResult r = compute_slice(*p, sc.xi, sc.h, cfg.grid, cfg.tol,
                                      sc.k_max, sc.e_max);
  rep.meta["xi"] = sc.xi;
  rep.meta["h"] = sc.h;
  rep.meta["threshold"] = xr_json(r.threshold);
  rep.meta["e_solve"] = r.e_solve;
  rep.meta["buffer"] = r.buffer;
  rep.meta["floor"] = r.floor;
  rep.meta["empty"] = r.status == SliceStatus::empty;
  if (r.status == SliceStatus::ok) rep.meta["grid_points"] = r.grid.n;
  rep.columns = {"n", "lambda", "lambda_coarse", "budget", "near_threshold"};
  for (std::size_t i = 0; i < r.count(); ++i)
    rep.rows.push_back({double(i + 1), r.lambda[i], r.lambda_coarse[i],
                        r.error_budget[i], r.near_threshold[i] ? 1.0 : 0.0});
  if (r.status == SliceStatus::empty)
    rep.notes.push_back("no spectrum below the usable cutoff at this fiber");
  return rep;
}

RunReport cmd_bands(const RunConfig& cfg, const ExecPolicy& exec) {
  RunReport rep;
  rep.command = "bands";
  const ProfilePtr p = build_profile(cfg.profile);
  const SweepConfig& sw = cfg.sweep;
  if (sw.count < 2) throw ConfigError("sweep.count", "need at least 2 fibers");
  const std::vector<double> xis = linspace(sw.xi_min, sw.xi_max, sw.count);
  const BandDiagram d = sweep_bands(*p, xis, sw.h, cfg.grid, cfg.tol,
                                    static_cast<long long>(sw.k_max), exec);
  rep.meta["h"] = sw.h;
  rep.meta["k_max"] = sw.k_max;
  rep.meta["fibers"] = sw.count;
  rep.columns = {"xi"};
  for (std::size_t k = 1; k <= sw.k_max; ++k)
    rep.columns.push_back("lambda" + std::to_string(k));
  for (std::size_t k = 1; k <= sw.k_max; ++k)
    rep.columns.push_back("budget" + std::to_string(k));
  std::size_t failed = 0, empty = 0;
  const double nan = std::nan("");
  for (const SliceRecord& sr : d.slices) {
    if (!sr.valid) {
      ++failed;
      rep.notes.push_back("xi=" + std::to_string(sr.xi) + ": " + sr.error);
      continue;
    }
    if (sr.result.status == SliceStatus::empty) ++empty;
    std::vector<double> row{sr.xi};
    for (std::size_t k = 0; k < sw.k_max; ++k)
      row.push_back(k < sr.result.count() ? sr.result.lambda[k] : nan);
    for (std::size_t k = 0; k < sw.k_max; ++k)
      row.push_back(k < sr.result.count() ? sr.result.error_budget[k] : nan);
    rep.rows.push_back(std::move(row));
  }
  rep.meta["failed_fibers"] = failed;
  rep.meta["empty_fibers"] = empty;
  return rep;
}

RunReport cmd_flatband(const RunConfig& cfg, const ExecPolicy& exec) {
  RunReport rep;
  rep.command = "flatband";
  const ProfilePtr p = build_profile(cfg.profile);
  const FlatbandConfig& fb = cfg.flatband;
  FlatnessOptions opt;
  opt.band = static_cast<long long>(fb.band);
  opt.samples = fb.samples;
  opt.window_lo = fb.window_lo;
  opt.window_hi = fb.window_hi;
  const FlatnessReport fr =
      flatness_test(*p, fb.h, fb.lambda, opt, cfg.grid, cfg.tol, exec);
  rep.meta["lambda"] = fr.lambda;
  rep.meta["band"] = fr.band;
  rep.meta["h"] = fb.h;
  rep.meta["excluded"] = to_string(fr.excluded);
  nlohmann::json comps = nlohmann::json::array();
  rep.columns = {"component", "oscillation", "median_offset", "budget",
                 "samples", "certified"};
  for (std::size_t i = 0; i < fr.components.size(); ++i) {
    const ComponentReport& c = fr.components[i];
    comps.push_back({{"interval", interval_str(c.component)},
                     {"verdict", to_string(c.verdict)},
                     {"detail", c.detail},
                     {"certified", c.certified}});
    rep.rows.push_back({double(i + 1), c.oscillation, c.median_offset,
                        c.budget, double(c.samples), c.certified ? 1.0 : 0.0});
    rep.notes.push_back("component " + interval_str(c.component) + ": " +
                        to_string(c.verdict) +
                        (c.detail.empty() ? "" : " (" + c.detail + ")"));
  }
  rep.meta["components"] = comps;
  rep.notes.push_back(std::string("flat band excluded: ") +
                      to_string(fr.excluded));
  if (cfg.output.strict && fr.excluded == Excluded::inconclusive)
    rep.exit_code = 4;
  return rep;
}

RunReport cmd_harmonic(const RunConfig& cfg, const ExecPolicy& exec) {
  RunReport rep;
  rep.command = "harmonic";
  const ProfilePtr p = build_profile(cfg.profile);
  const HarmonicConfig& hc = cfg.harmonic;
  if (hc.hs.empty()) throw ConfigError("harmonic.hs", "need at least one h");
  const HarmonicComparison cmp = compare_harmonic(
      *p, hc.theta, hc.hs, hc.n_max, hc.eta, cfg.grid, cfg.tol, exec);
  rep.meta["theta"] = cmp.theta;
  rep.meta["v_theta"] = cmp.v_theta;
  rep.meta["eta"] = cmp.eta;
  rep.columns = {"h", "n", "lambda", "harmonic", "rel_err", "budget"};
  for (const auto& e : cmp.entries)
    rep.rows.push_back(
        {e.h, double(e.n), e.lambda, e.harmonic, e.rel_err, e.budget});

  if (hc.counting) {
    const CountingCheck cc =
        counting_check(*p, hc.counting_h, hc.counting_eta, cfg.grid, cfg.tol);
    rep.meta["counting"] = {
        {"h", cc.h},           {"eta", cc.eta},
        {"v_plus", cc.v_plus}, {"theta_star", cc.theta_star},
        {"observed", cc.observed}, {"bound", cc.bound},
        {"regime_flagged", cc.regime_flagged}, {"pass", cc.pass}};
    char line[160];
    std::snprintf(line, sizeof line,
                  "counting: %lld levels below %.4g at theta*=%.4g, lower "
                  "bound %lld%s -> %s",
                  cc.observed, cc.eta, cc.theta_star, cc.bound,
                  cc.regime_flagged ? " (outside asymptotic regime)" : "",
                  cc.pass ? "pass" : "FAIL");
    rep.notes.push_back(line);
    if (cfg.output.strict && !cc.pass) rep.exit_code = 4;
  }
  if (hc.agmon) {
    const AgmonCheck ac = agmon_decay_check(*p, hc.theta, hc.agmon_h,
                                            hc.agmon_band, std::nullopt,
                                            cfg.grid, cfg.tol);
    rep.meta["agmon"] = {
        {"lambda", ac.lambda},   {"gamma", ac.gamma},
        {"kappa", ac.kappa},     {"ratio", ac.ratio},
        {"ratio_doubled", ac.ratio_doubled}, {"stable", ac.stable},
        {"pass", ac.pass}};
    char line[160];
    std::snprintf(line, sizeof line,
                  "localization: weighted mass ratio %.4g (doubled %.4g) at "
                  "rate %.4g -> %s",
                  ac.ratio, ac.ratio_doubled, ac.gamma,
                  ac.pass ? "pass" : "FAIL");
    rep.notes.push_back(line);
    if (cfg.output.strict && !ac.pass) rep.exit_code = 4;
  }
  return rep;
}

RunReport cmd_asymptotics(const RunConfig& cfg, const ExecPolicy& exec) {
  RunReport rep;
  rep.command = "asymptotics";
  const ProfilePtr p = build_profile(cfg.profile);
  const AsymptoticsConfig& ac = cfg.asymptotics;
  const std::vector<double> xis =
      ac.xis.empty() ? logspace(ac.xi_min, ac.xi_max, ac.count) : ac.xis;
  const AsymptoticFit fit =
      asymptotic_fit(*p, xis, ac.n_max, ac.rescaled, cfg.grid, cfg.tol, exec);
  rep.meta["rescaled"] = fit.rescaled;
  rep.meta["xis"] = fit.xis;
  rep.columns = {"n", "slope", "coeff", "intercept"};
  const bool have_target = cfg.profile.kind == "power_law";
  if (have_target) {
    rep.columns.push_back("slope_target");
    rep.columns.push_back("coeff_target");
  }
  for (const auto& bf : fit.bands) {
    std::vector<double> row{double(bf.n), bf.slope, bf.coeff, bf.intercept};
    if (have_target) {
      row.push_back(power_law_slope(cfg.profile.alpha));
      row.push_back(
          power_law_coeff(cfg.profile.c1, cfg.profile.alpha, bf.n));
    }
    rep.rows.push_back(std::move(row));
    rep.meta["lambda_n" + std::to_string(bf.n)] = bf.lambdas;
  }
  return rep;
}

RunReport cmd_scattering(const RunConfig& cfg, const ExecPolicy&) {
  RunReport rep;
  rep.command = "scattering";
  const ProfilePtr p = build_profile(cfg.profile);
  const ScatteringConfig& sc = cfg.scattering;
  if (sc.lambdas.empty())
    throw ConfigError("scattering.lambdas", "need at least one level");
  rep.meta["xi"] = sc.xi;
  rep.columns = {"lambda",    "omega",       "sigma_min_sq", "error_budget",
                 "det_drift", "gronwall_ok", "decaying_norm", "excluded"};
  bool all_excluded = true;
  for (const double lam : sc.lambdas) {
    const ExclusionReport er = embedded_exclusion(*p, sc.xi, lam);
    rep.rows.push_back({er.lambda, er.omega, er.sigma_min_sq, er.error_budget,
                        er.det_drift, er.gronwall_ok ? 1.0 : 0.0,
                        er.decaying_norm, er.excluded ? 1.0 : 0.0});
    char line[160];
    std::snprintf(line, sizeof line,
                  "lambda=%.6g: sigma_min^2=%.4g vs budget %.4g -> %s",
                  er.lambda, er.sigma_min_sq, er.error_budget,
                  er.excluded ? "excluded (no embedded eigenvalue)"
                              : "inconclusive");
    rep.notes.push_back(line);
    all_excluded = all_excluded && er.excluded;
  }
  rep.meta["all_excluded"] = all_excluded;
  if (cfg.output.strict && !all_excluded) rep.exit_code = 4;
  return rep;
}

RunReport cmd_agmon(const RunConfig& cfg, const ExecPolicy&) {
  RunReport rep;
  rep.command = "agmon";
  const ProfilePtr p = build_profile(cfg.profile);
  const AgmonConfig& ag = cfg.agmon;
  if (ag.band < 1) throw ConfigError("agmon.band", "band index is 1-based");
  const AgmonCheck ac = agmon_decay_check(*p, ag.xi, ag.h, ag.band, ag.gamma,
                                          cfg.grid, cfg.tol);

  // Flat-weight identity on the same slice: a solver self-test.
  GridPolicy pol = cfg.grid;
  pol.stencil = Stencil::order2;
  const SliceResult r = compute_slice(*p, ag.xi, ag.h, pol, cfg.tol,
                                      static_cast<long long>(ag.band));
  const FiberOperator op = slice_operator(*p, r, Stencil::order2);
  const EigenPair pair =
      eigenvector(op, r.lambda_coarse[ag.band - 1], cfg.tol);
  const double ident = agmon_identity_residual(
      op, pair, [](double) { return 0.0; }, [](double) { return 0.0; });

  rep.meta["xi"] = ag.xi;
  rep.meta["h"] = ag.h;
  rep.meta["band"] = ag.band;
  rep.meta["identity_residual"] = ident;
  rep.columns = {"lambda", "gamma", "kappa", "ratio", "ratio_doubled",
                 "stable", "pass"};
  rep.rows.push_back({ac.lambda, ac.gamma, ac.kappa, ac.ratio,
                      ac.ratio_doubled, ac.stable ? 1.0 : 0.0,
                      ac.pass ? 1.0 : 0.0});
  char line[200];
  std::snprintf(line, sizeof line,
                "lambda=%.6g gamma=%.4g: weighted mass ratio %.4g (doubled "
                "%.4g), identity residual %.3g -> %s",
                ac.lambda, ac.gamma, ac.ratio, ac.ratio_doubled, ident,
                ac.pass ? "pass" : "FAIL");
  rep.notes.push_back(line);
  if (cfg.output.strict && !ac.pass) rep.exit_code = 4;
  return rep;
}

RunReport run_command(const std::string& name, const RunConfig& cfg,
                      const ExecPolicy& exec) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  if (name == "slice") rep = cmd_slice(cfg, exec);
  else if (name == "bands") rep = cmd_bands(cfg, exec);
  else if (name == "flatband") rep = cmd_flatband(cfg, exec);
  else if (name == "harmonic") rep = cmd_harmonic(cfg, exec);
  else if (name == "asymptotics") rep = cmd_asymptotics(cfg, exec);
  else if (name == "scattering") rep = cmd_scattering(cfg, exec);
  else if (name == "agmon") rep = cmd_agmon(cfg, exec);
  else throw ConfigError(name, "unknown command");
  const auto t1 = std::chrono::steady_clock::now();
  rep.meta["config"] = config_to_json(cfg);
  rep.meta["wall_clock_sec"] =
      std::chrono::duration<double>(t1 - t0).count();
  return rep;
}

}  // namespace fiberband
