#include "gkdv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "gkdv/errors.hpp"
#include "gkdv/kernels.hpp"
#include "gkdv/random.hpp"
#include "gkdv/soliton.hpp"
#include "gkdv/spectral.hpp"

namespace gkdv::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- config

const char* shape_name(PerturbationShape s) {
  switch (s) {
    case PerturbationShape::none: return "none";
    case PerturbationShape::gaussian: return "gaussian";
    case PerturbationShape::s_direction: return "s_direction";
    case PerturbationShape::qx_direction: return "qx_direction";
    case PerturbationShape::random: return "random";
  }
  return "none";
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"soliton-propagation", "perturbed-soliton", "linear-liouville",
                                                 "virial-audit",        "multi-soliton",     "c-star-scan",
                                                 "spectral-report"};
  return names;
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; })) {
      throw ConfigError(where + it.key() + ": unknown field");
    }
  }
}

double num(const json& j, const std::string& where, const char* key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + key + ": not finite");
  return x;
}

double positive(const json& j, const std::string& where, const char* key, double def) {
  const double x = num(j, where, key, def);
  if (!(x > 0.0)) throw ConfigError(where + key + ": must be positive");
  return x;
}

double nonnegative(const json& j, const std::string& where, const char* key, double def) {
  const double x = num(j, where, key, def);
  if (!(x >= 0.0)) throw ConfigError(where + key + ": must be non-negative");
  return x;
}

int integer(const json& j, const std::string& where, const char* key, int def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + key + ": expected an integer");
  return v.get<int>();
}

std::vector<double> num_list(const json& j, const std::string& where, const char* key) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + key + ": expected an array of numbers");
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(where + key + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["scenario"] = c.scenario;
  j["nonlinearity"] = c.nl.to_json();
  j["c0"] = c.c0;
  j["grid"] = {{"L", c.grid.L}, {"N", c.grid.N}};
  j["dt"] = c.dt;
  j["T_final"] = c.T_final;
  j["cadence"] = c.cadence;
  j["frame_speed"] = c.frame_speed;
  j["soliton_x"] = c.soliton_x;
  json sol = json::array();
  for (const auto& s : c.solitons) sol.push_back({{"c", s.c}, {"x", s.x}});
  j["solitons"] = sol;
  j["perturbation"] = {{"shape", shape_name(c.perturbation.shape)},
                       {"amplitude", c.perturbation.amplitude},
                       {"center", c.perturbation.center},
                       {"width", c.perturbation.width},
                       {"kmax", c.perturbation.kmax}};
  j["seed"] = c.seed;
  j["anchors"] = {{"x0", c.anchors.x0}, {"t0", c.anchors.t0}};
  j["snapshot_cadence"] = c.snapshot_cadence;
  j["mode"] = c.mode == ModulationMode::theorem1 ? "theorem1" : "theorem2";
  j["region_left"] = c.region_left;
  j["window"] = c.window;
  j["t_ref"] = c.t_ref;
  j["t_virial"] = c.t_virial;
  j["spectral_N"] = c.spectral_N;
  j["reference_N"] = c.reference_N;
  j["B"] = c.B;
  j["samples"] = c.samples;
  return j;
}

json constants_to_json(const Constants& k) {
  return {{"lambda3", k.lambda3}, {"K_cal", k.K_cal},   {"K0", k.K0},
          {"sigma0", k.sigma0},   {"sigma1", k.sigma1}, {"provenance", k.provenance}};
}

json tolerances_to_json(const Tolerances& t) {
  return {{"l2_error", t.l2_error},
          {"drift_per_20", t.drift_per_20},
          {"local_h1_ratio", t.local_h1_ratio},
          {"c_drift", t.c_drift},
          {"ratio_bound", t.ratio_bound},
          {"window_ratio", t.window_ratio},
          {"monotonicity_slack", t.monotonicity_slack},
          {"c_star_rel", t.c_star_rel},
          {"orthogonality", t.orthogonality},
          {"multi_recovery", t.multi_recovery},
          {"virial_identity", t.virial_identity},
          {"virial_refinement", t.virial_refinement},
          {"eig_residual", t.eig_residual},
          {"cadence_noise", t.cadence_noise},
          {"quotient_slack", t.quotient_slack}};
}

// ---------------------------------------------------------------- helpers

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Runner {
  RunResult r;

  void check(const std::string& name, double value, const char* rel, double limit) {
    Assertion a{name, value, rel, limit, false};
    a.pass = std::string(rel) == "<=" ? value <= limit : value >= limit;  // NaN fails both ways
    r.assertions.push_back(a);
  }
};

long steps_for(double span, double dt, const char* what) {
  const double s = span / dt;
  const long n = std::lround(s);
  if (n < 1 || std::abs(s - static_cast<double>(n)) > 1e-9 * s) {
    throw ConfigError(std::string(what) + ": must be a positive integer multiple of dt");
  }
  return n;
}

double drift_limit(const Tolerances& t, double T) { return t.drift_per_20 * std::max(1.0, T / 20.0); }

double l2(const Grid& g, const Field& a) { return std::sqrt(g.h() * kernels::active::dot(a.data(), a.data(), a.size())); }

// Perturbation on the grid, anchored at `at` (frame coordinates).
Field perturbation_field(const ExperimentConfig& cfg, const SolitonProfile& prof, const Spectral& sp, double at) {
  const Grid& g = sp.grid();
  const Perturbation& p = cfg.perturbation;
  const double x0 = at + p.center;
  Field out = g.zeros();
  if (p.shape == PerturbationShape::none || p.amplitude == 0.0) return out;
  auto scale_to = [&](Field f) {
    double peak = 0.0;
    for (double v : f) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) {
      for (double& v : f) v *= p.amplitude * prof.s0() / peak;
    }
    return f;
  };
  switch (p.shape) {
    case PerturbationShape::gaussian:
      for (int i = 0; i < g.N; ++i) {
        const double y = g.wrap(g.x(i) - x0);
        out[static_cast<std::size_t>(i)] = p.amplitude * prof.s0() * std::exp(-y * y / (2.0 * p.width * p.width));
      }
      return out;
    case PerturbationShape::qx_direction:
      return scale_to(prof.sample(g, x0, ProfileOrder::Qx));
    case PerturbationShape::s_direction:
      return scale_to(sp.shift(dQdc(prof, g), x0));
    case PerturbationShape::random: {
      CounterRng rng(cfg.seed, 1);
      Field z = random_band_limited(g, rng, p.kmax);
      Field zs = sp.shift(z, x0);
      for (int i = 0; i < g.N; ++i) {
        const double y = g.wrap(g.x(i) - x0);
        out[static_cast<std::size_t>(i)] = zs[static_cast<std::size_t>(i)] * std::exp(-y * y / (2.0 * p.width * p.width));
      }
      return scale_to(out);
    }
    case PerturbationShape::none: break;
  }
  return out;
}

// psi(sqrt(c0) (x - center)) on the grid, x - center unwrapped.
Field psi_weight(const Grid& g, double c0, double center) {
  Field w(static_cast<std::size_t>(g.N));
  const double s = std::sqrt(c0);
  for (int i = 0; i < g.N; ++i) w[static_cast<std::size_t>(i)] = psi(s * (g.x(i) - center));
  return w;
}

// ---------------------------------------------------------------- soliton runs

RunResult run_soliton(const ExperimentConfig& cfg) {
  const bool perturbed = cfg.scenario == "perturbed-soliton" && cfg.perturbation.shape != PerturbationShape::none &&
                         cfg.perturbation.amplitude != 0.0;
  Runner R;
  const Grid& g = cfg.grid;
  const long per = steps_for(cfg.cadence, cfg.dt, "cadence");
  const long nrec = steps_for(cfg.T_final, cfg.cadence, "T_final");
  const double snap_cad = cfg.snapshot_cadence > 0.0 ? cfg.snapshot_cadence : cfg.cadence;
  const long snap_every = steps_for(snap_cad, cfg.cadence, "snapshot_cadence");
  const double t_snap_end = cfg.anchors.t0.empty() ? -1.0 : *std::max_element(cfg.anchors.t0.begin(), cfg.anchors.t0.end());

  const SolitonProfile prof = SolitonProfile::build(cfg.nl, cfg.c0);
  CacheOptions opt;
  opt.spectral_N = cfg.spectral_N;
  opt.B = cfg.B;
  ModulationCache cache(cfg.nl, g, opt);
  const Spectral& sp = cache.spectral();
  KdvStepper stepper(g, cfg.nl, cfg.dt, cfg.frame_speed);

  Field u = prof.sample(g, cfg.soliton_x);
  if (perturbed) {
    const Field p = perturbation_field(cfg, prof, sp, cfg.soliton_x);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += p[i];
  }

  const double B = cfg.B > 0.0 ? cfg.B : default_B(cfg.c0);
  const double lam3 = cfg.constants.lambda3;
  const double eps0 = lam3 > 0.0 ? epsilon0(cfg.nl, B, lam3, cfg.c0 - cfg.constants.sigma0, cfg.c0 + cfg.constants.sigma0) : 0.0;
  const double eps1 = 0.5 * lam3 * eps0;
  const double xw = cfg.anchors.x0.empty() ? 10.0 : cfg.anchors.x0.front();

  double c = cfg.c0, rho = cfg.soliton_x;
  std::vector<VirialSample> vs;
  std::vector<double> ts, cs, rhos, loc_eta, r_vQx, r_vchi, r_etav;
  double max_orth = 0.0;
  int floor_records = 0;
  Invariants inv0;
  double local0 = 0.0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.cadence;
    const Invariants inv = invariants(sp, u, cfg.nl);
    if (k == 0) inv0 = inv;
    ModulationState ms = decompose(cache, u, c, rho, cfg.mode);
    c = ms.c;
    rho = ms.rho;
    max_orth = std::max(max_orth, ms.newton_residual);
    floor_records += ms.roundoff_floor ? 1 : 0;
    dual_v(cache, ms);
    const DualEstimates de = check_dual_estimates(cache, ms);
    const WeightMu mu = mu_weight_at(cache, ms.c, ms.rho);
    const VirialSample s = virial_sample(cache, ms, mu, t, eps0, B);
    vs.push_back(s);

    DiagnosticsRecord rec;
    rec.t = t;
    rec.mass = inv.mass;
    rec.energy = inv.energy;
    rec.c = ms.c;
    rec.rho = ms.rho + cfg.frame_speed * t;
    rec.eta_h1 = h1_norm(sp, ms.eta);
    const Field w = psi_weight(g, cfg.c0, ms.rho + xw);
    rec.I = functional_I(sp, u, w);
    rec.J = functional_J(sp, u, w, cfg.nl, cfg.c0);
    rec.V = s.V;
    rec.local_h1 = local_h1_norm(sp, ms.eta, ms.rho + cfg.region_left);
    R.r.series.add(rec);
    if (k == 0) local0 = rec.local_h1;

    ts.push_back(t);
    cs.push_back(rec.c);
    rhos.push_back(rec.rho);
    {
      double acc = 0.0;
      for (int i = 0; i < g.N; ++i) {
        const auto q = static_cast<std::size_t>(i);
        acc += ms.eta[q] * ms.eta[q] * std::exp(-std::abs(g.x(i) - ms.rho));
      }
      loc_eta.push_back(std::sqrt(g.h() * acc));
    }
    r_vQx.push_back(de.v_Qx);
    r_vchi.push_back(de.v_chi);
    r_etav.push_back(de.eta_v);

    if (t <= t_snap_end + 1e-9 && k % snap_every == 0) R.r.series.add_snapshot(t, cfg.frame_speed * t, u);
    if (k == nrec) break;
    stepper.advance(u, static_cast<int>(per));
    rho += (c - cfg.frame_speed) * cfg.cadence;
  }

  const auto& recs = R.r.series.records();
  const double T = cfg.T_final;
  double mass_drift = 0.0, energy_drift = 0.0;
  for (const auto& rec : recs) {
    mass_drift = std::max(mass_drift, std::abs(rec.mass - inv0.mass) / std::abs(inv0.mass));
    energy_drift = std::max(energy_drift, std::abs(rec.energy - inv0.energy) / std::max(std::abs(inv0.energy), 1e-300));
  }
  json& S = R.r.summary;
  S["final_c"] = recs.back().c;
  S["final_rho"] = recs.back().rho;
  S["mass_drift"] = mass_drift;
  S["energy_drift"] = energy_drift;
  S["max_orthogonality_residual"] = max_orth;
  S["roundoff_floor_records"] = floor_records;
  S["B"] = B;
  S["epsilon0"] = eps0;
  S["epsilon1"] = eps1;
  S["perturbed"] = perturbed;

  // Parameter-rate bound |c'| + |rho' - c| <= K0 (int eta^2 e^{-|x - rho|})^{1/2}.
  double K0_fit = 0.0;
  for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
    const double dt2 = ts[i + 1] - ts[i - 1];
    const double rate = std::abs((cs[i + 1] - cs[i - 1]) / dt2) + std::abs((rhos[i + 1] - rhos[i - 1]) / dt2 - cs[i]);
    if (loc_eta[i] > 0.0) K0_fit = std::max(K0_fit, rate / loc_eta[i]);
  }
  S["K0_fit"] = K0_fit;

  const double lim = drift_limit(cfg.tol, T);
  R.check("mass_drift", mass_drift, "<=", lim);
  R.check("energy_drift", energy_drift, "<=", lim);

  if (!perturbed) {
    const Field exact = prof.sample(g, cfg.soliton_x + (cfg.c0 - cfg.frame_speed) * T);
    Field d(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) d[i] = u[i] - exact[i];
    const double err = l2(g, d) / l2(g, exact);
    S["l2_error"] = err;
    S["l2_error_fitted"] = l2(g, decompose(cache, u, c, rho, cfg.mode).eta) / l2(g, exact);
    R.check("l2_error", err, "<=", cfg.tol.l2_error);
  } else {
    const double ratio = recs.back().local_h1 / local0;
    S["local_h1_initial"] = local0;
    S["local_h1_final"] = recs.back().local_h1;
    S["local_h1_ratio"] = ratio;
    R.check("local_h1_ratio", ratio, "<=", cfg.tol.local_h1_ratio);
    const auto half = static_cast<std::size_t>(nrec / 2);
    const double cd = std::abs(recs.back().c - recs[half].c);
    S["c_drift_second_half"] = cd;
    R.check("c_drift_second_half", cd, "<=", cfg.tol.c_drift);
    R.check("orthogonality_residual", max_orth, "<=", cfg.tol.orthogonality);

    // Dual estimates. eta/v is bounded away from 0 by coercivity: max/min.
    // The two pairings can vanish, so their boundedness is read as: the
    // supremum over the run stays within ratio_bound of the supremum over the
    // first tenth of the run.
    const double etav_mm = *std::max_element(r_etav.begin(), r_etav.end()) / *std::min_element(r_etav.begin(), r_etav.end());
    auto growth = [&](const std::vector<double>& r) {
      const std::size_t n0 = std::max<std::size_t>(1, r.size() / 10);
      const double early = *std::max_element(r.begin(), r.begin() + static_cast<long>(n0));
      return *std::max_element(r.begin(), r.end()) / early;
    };
    S["dual_eta_v_max"] = *std::max_element(r_etav.begin(), r_etav.end());
    S["dual_vQx_max"] = *std::max_element(r_vQx.begin(), r_vQx.end());
    S["dual_vchi_max"] = *std::max_element(r_vchi.begin(), r_vchi.end());
    R.check("dual_eta_v_max_over_min", etav_mm, "<=", cfg.tol.ratio_bound);
    R.check("dual_vQx_growth", growth(r_vQx), "<=", cfg.tol.ratio_bound);
    R.check("dual_vchi_growth", growth(r_vchi), "<=", cfg.tol.ratio_bound);

    const VirialRateReport vr = virial_rate_check(vs, lam3, eps1);
    S["lambda3_fit"] = vr.lambda3_fit;
    S["virial_noise_ratio"] = vr.max_noise_ratio;
    S["V_defect_raw"] = vr.worst_V_defect_raw;
    R.check("virial_cadence_noise", vr.max_noise_ratio, "<=", cfg.tol.cadence_noise);
    if (lam3 > 0.0) {
      S["V_defect"] = vr.worst_V_defect;
      S["vir1_defect"] = vr.worst_vir1;
      S["vir2_defect"] = vr.worst_vir2;
      R.check("V_defect", vr.worst_V_defect, ">=", 0.0);
      R.check("vir1_defect", vr.worst_vir1, ">=", 0.0);
      R.check("vir2_defect", vr.worst_vir2, ">=", 0.0);
    }
    if (cfg.constants.K0 > 0.0) R.check("K0_fit", K0_fit, "<=", cfg.constants.K0);
  }

  if (!cfg.anchors.t0.empty()) {
    std::map<double, double> rho_at;
    for (const auto& rec : recs) rho_at[rec.t] = rec.rho;
    auto rho_lab = [&](double t) {
      auto it = rho_at.lower_bound(t - 1e-9);
      if (it == rho_at.end() || std::abs(it->first - t) > 1e-9 * std::max(1.0, t)) {
        throw PreconditionError("monotonicity audit: anchor t0 is not a record time");
      }
      return it->second;
    };
    const MonotonicityReport mr = monotonicity_audit(sp, R.r.series, cfg.nl, cfg.anchors, cfg.c0, rho_lab,
                                                     cfg.constants.K_cal);
    S["K_measured_I"] = mr.K_measured_I;
    S["K_measured_J"] = mr.K_measured_J;
    S["monotonicity_pairs"] = mr.pairs;
    if (cfg.constants.K_cal > 0.0) {
      S["monotonicity_excess_I"] = mr.excess_I;
      S["monotonicity_excess_J"] = mr.excess_J;
      R.check("monotonicity_excess_I", mr.excess_I, "<=", cfg.tol.monotonicity_slack);
      R.check("monotonicity_excess_J", mr.excess_J, "<=", cfg.tol.monotonicity_slack);
    }
  }
  return R.r;
}

// ---------------------------------------------------------------- linear Liouville

RunResult run_linear(const ExperimentConfig& cfg) {
  Runner R;
  const Grid& g = cfg.grid;
  const double h = g.h();
  const long per = steps_for(cfg.cadence, cfg.dt, "cadence");
  const long nrec = steps_for(cfg.T_final, cfg.cadence, "T_final");
  const long kref = steps_for(cfg.t_ref, cfg.cadence, "t_ref");
  if (kref > nrec) throw ConfigError("t_ref: must not exceed T_final");
  CacheOptions opt;
  opt.spectral_N = cfg.spectral_N;
  opt.B = cfg.B;
  ModulationCache cache(cfg.nl, g, opt);
  const Spectral& sp = cache.spectral();
  const long node = std::lround(cfg.c0 / opt.spacing);
  if (std::abs(static_cast<double>(node) * opt.spacing - cfg.c0) > 1e-12) {
    throw ConfigError("c0: must lie on the modulation lattice (multiple of 1e-3) for the linear flow");
  }
  const auto& nd = cache.node(node);
  const auto n = static_cast<std::size_t>(g.N);

  Field V(n);
  for (std::size_t i = 0; i < n; ++i) V[i] = cfg.nl.df(nd.Q[i]);
  const SolitonProfile& prof = *nd.prof;

  // eta0: the configured shape with chi~, Q' and Q projected out. The Q
  // component would excite the generalized kernel direction S_c, which grows
  // linearly along Q' instead of decaying.
  ExperimentConfig shaped = cfg;
  if (shaped.perturbation.shape == PerturbationShape::none) shaped.perturbation.shape = PerturbationShape::gaussian;
  if (shaped.perturbation.amplitude == 0.0) shaped.perturbation.amplitude = 1.0;
  Field eta = perturbation_field(shaped, prof, sp, 0.0);
  {
    Field q3 = nd.Q;
    const double a = inner(g, q3, nd.chit) / inner(g, nd.chit, nd.chit);
    for (std::size_t i = 0; i < n; ++i) q3[i] -= a * nd.chit[i];
    const double b = inner(g, q3, nd.Qx) / inner(g, nd.Qx, nd.Qx);
    for (std::size_t i = 0; i < n; ++i) q3[i] -= b * nd.Qx[i];
    for (const Field* w : std::initializer_list<const Field*>{&nd.chit, &nd.Qx, &q3}) {
      const double s = inner(g, eta, *w) / inner(g, *w, *w);
      for (std::size_t i = 0; i < n; ++i) eta[i] -= s * (*w)[i];
    }
  }
  const double en = norm(g, eta);
  const double orth = std::max({std::abs(inner(g, eta, nd.chit)) / (en * norm(g, nd.chit)),
                                std::abs(inner(g, eta, nd.Qx)) / (en * norm(g, nd.Qx)),
                                std::abs(inner(g, eta, nd.Q)) / (en * norm(g, nd.Q))});

  std::vector<double> mask(n);
  for (int i = 0; i < g.N; ++i) mask[static_cast<std::size_t>(i)] = std::abs(g.x(i)) < cfg.window ? 1.0 : 0.0;
  auto window_residual = [&](const Field& e, double& b) {
    double a = 0.0, qq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a += mask[i] * e[i] * nd.Qx[i];
      qq += mask[i] * nd.Qx[i] * nd.Qx[i];
    }
    b = a / qq;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = e[i] - b * nd.Qx[i];
      s += mask[i] * r * r;
    }
    return std::sqrt(h * s);
  };

  // Linear dual v = L eta + alpha Q and the virial rate (-1/2) d/dt int v^2 mu.
  const WeightMu mu = mu_weight(prof, g);
  const double chiQ = inner(g, nd.chi, nd.Q);
  std::vector<VirialSample> vs;
  const long kvir = std::min(nrec, static_cast<long>(std::floor(cfg.t_virial / cfg.cadence + 1e-9)));

  LinearizedStepper stepper(g, V, cfg.c0, cfg.dt);
  double win_ref = 0.0, b_last = 0.0;
  double energy0 = 0.0, energy_drift = 0.0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.cadence;
    const Field exx = sp.derivative(eta, 2);
    Field Le(n);
    for (std::size_t i = 0; i < n; ++i) Le[i] = -exx[i] + (cfg.c0 - V[i]) * eta[i];
    const double energy = 0.5 * inner(g, Le, eta);
    if (k == 0) energy0 = energy;
    energy_drift = std::max(energy_drift, std::abs(energy - energy0) / std::abs(energy0));
    DiagnosticsRecord rec;
    rec.t = t;
    rec.mass = inner(g, eta, eta);
    rec.energy = energy;
    rec.c = cfg.c0;
    rec.rho = 0.0;
    rec.eta_h1 = h1_norm(sp, eta);
    rec.local_h1 = window_residual(eta, b_last);
    R.r.series.add(rec);
    if (k == kref) win_ref = rec.local_h1;
    if (k <= kvir) {
      const double alpha = -inner(g, eta, nd.Lchi) / chiQ;
      Field v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = Le[i] + alpha * nd.Q[i];
      VirialSample s;
      s.t = t;
      s.W_mu = h * kernels::active::dot3(v.data(), v.data(), mu.mu.data(), n);
      s.X_mu = h * kernels::active::dot3(v.data(), v.data(), mu.mu_prime.data(), n);
      vs.push_back(s);
    }
    if (k == nrec) break;
    stepper.advance(eta, static_cast<int>(per));
  }

  json& S = R.r.summary;
  const double win_T = R.r.series.records().back().local_h1;
  S["initial_orthogonality"] = orth;
  S["window_residual_ref"] = win_ref;
  S["window_residual_final"] = win_T;
  S["window_ratio"] = win_T / win_ref;
  S["b_final"] = b_last;
  S["quadratic_energy_drift"] = energy_drift;
  R.check("initial_orthogonality", orth, "<=", cfg.tol.orthogonality);
  R.check("window_ratio", win_T / win_ref, "<=", cfg.tol.window_ratio);

  if (vs.size() >= 5) {
    const OperatorL op = assemble_L(prof, spectral_grid(cfg.c0, cfg.spectral_N));
    const Grid& sg = op.grid;
    const WeightMu smu = mu_weight(prof, sg);
    const EigenPair gs = ground_state(op);
    const TruncatedChi tc = truncate_chi(op, gs, smu.Q, cfg.B > 0.0 ? cfg.B : default_B(cfg.c0));
    const Lambda2 l2m = measure_lambda2(op, smu, tc.chi, cfg.nl.p(), 20.0 / std::sqrt(cfg.c0));
    std::vector<double> tt, W;
    for (const auto& s : vs) {
      tt.push_back(s.t);
      W.push_back(s.W_mu);
    }
    const auto rates = centered_rates(tt, W);
    double worst = std::numeric_limits<double>::infinity(), integral = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const double X = vs[i + 2].X_mu;
      worst = std::min(worst, -0.5 * rates[i].d1 - l2m.value * X + 0.5 * rates[i].noise);
    }
    for (std::size_t i = 0; i + 1 < vs.size(); ++i) integral += 0.5 * (vs[i].X_mu + vs[i + 1].X_mu) * (vs[i + 1].t - vs[i].t);
    const double bound = (vs.front().W_mu - vs.back().W_mu) / (2.0 * l2m.value);
    S["lambda2"] = l2m.value;
    S["linear_virial_defect"] = worst;
    S["linear_virial_horizon"] = vs.back().t;
    S["integrated_X"] = integral;
    S["integrated_X_bound"] = bound;
    R.check("linear_virial_defect", worst, ">=", 0.0);
    R.check("integrated_X_slack", bound - integral, ">=", 0.0);
  }
  return R.r;
}

// ---------------------------------------------------------------- multi-soliton

RunResult run_multi(const ExperimentConfig& cfg) {
  Runner R;
  if (cfg.solitons.size() < 2) throw ConfigError("solitons: multi-soliton needs at least two entries");
  const Grid& g = cfg.grid;
  const long per = steps_for(cfg.cadence, cfg.dt, "cadence");
  const long nrec = steps_for(cfg.T_final, cfg.cadence, "T_final");
  CacheOptions opt;
  opt.spectral_N = cfg.spectral_N;
  opt.B = cfg.B;
  ModulationCache cache(cfg.nl, g, opt);
  const Spectral& sp = cache.spectral();
  KdvStepper stepper(g, cfg.nl, cfg.dt, cfg.frame_speed);
  const std::size_t m = cfg.solitons.size();

  Field u = g.zeros();
  std::vector<std::pair<double, double>> guess;
  for (const auto& s : cfg.solitons) {
    const Field q = SolitonProfile::build(cfg.nl, s.c).sample(g, s.x);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += q[i];
    // Offset start so the t = 0 recovery exercises the solver.
    guess.emplace_back(s.c * 1.0005, s.x + 0.05);
  }
  std::ostringstream extra;
  extra << "t,j,c,rho\n";
  std::vector<double> c0(m);
  double recovery = 0.0, max_res = 0.0, prev_gap = -1.0;
  bool increasing = true;
  double min_gap_step = std::numeric_limits<double>::infinity();
  Invariants inv0;
  double mass_drift = 0.0, energy_drift = 0.0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.cadence;
    const MultiModulationState ms = multi_decompose(cache, u, guess, cfg.mode);
    const Invariants inv = invariants(sp, u, cfg.nl);
    if (k == 0) {
      inv0 = inv;
      for (std::size_t j = 0; j < m; ++j) {
        c0[j] = ms.c[j];
        recovery = std::max({recovery, std::abs(ms.c[j] - cfg.solitons[j].c), std::abs(ms.rho[j] - cfg.solitons[j].x)});
      }
    }
    mass_drift = std::max(mass_drift, std::abs(inv.mass - inv0.mass) / inv0.mass);
    energy_drift = std::max(energy_drift, std::abs(inv.energy - inv0.energy) / std::abs(inv0.energy));
    for (std::size_t j = 0; j < m; ++j) {
      guess[j] = {ms.c[j], ms.rho[j] + (ms.c[j] - cfg.frame_speed) * cfg.cadence};
      max_res = std::max(max_res, ms.residual[j]);
      extra << fmt(t) << ',' << j << ',' << fmt(ms.c[j]) << ',' << fmt(ms.rho[j] + cfg.frame_speed * t) << '\n';
    }
    // Smallest gap between neighbours (ordered by position).
    std::vector<double> pos(ms.rho);
    std::sort(pos.begin(), pos.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < m; ++j) gap = std::min(gap, pos[j + 1] - pos[j]);
    if (prev_gap >= 0.0) {
      min_gap_step = std::min(min_gap_step, gap - prev_gap);
      if (!(gap > prev_gap)) increasing = false;
    }
    prev_gap = gap;

    DiagnosticsRecord rec;
    rec.t = t;
    rec.mass = inv.mass;
    rec.energy = inv.energy;
    rec.c = ms.c[0];
    rec.rho = ms.rho[0] + cfg.frame_speed * t;
    rec.eta_h1 = h1_norm(sp, ms.eta);
    R.r.series.add(rec);
    if (k == nrec) {
      json& S = R.r.summary;
      double worst = 0.0;
      json per_sol = json::array();
      for (std::size_t j = 0; j < m; ++j) {
        worst = std::max(worst, std::abs(ms.c[j] - c0[j]));
        per_sol.push_back({{"c0", c0[j]}, {"c_final", ms.c[j]}, {"rho_final", ms.rho[j] + cfg.frame_speed * t}});
      }
      S["solitons"] = per_sol;
      S["max_c_change"] = worst;
      S["initial_recovery_error"] = recovery;
      S["final_gap"] = gap;
      S["min_gap_increment"] = min_gap_step;
      S["max_orthogonality_residual"] = max_res;
      S["mass_drift"] = mass_drift;
      S["energy_drift"] = energy_drift;
      R.check("initial_recovery_error", recovery, "<=", cfg.tol.multi_recovery);
      R.check("max_c_change", worst, "<=", cfg.tol.c_drift);
      R.check("separation_increasing", increasing ? 1.0 : 0.0, ">=", 1.0);
      R.check("mass_drift", mass_drift, "<=", drift_limit(cfg.tol, cfg.T_final));
      R.check("energy_drift", energy_drift, "<=", drift_limit(cfg.tol, cfg.T_final));
      break;
    }
    stepper.advance(u, static_cast<int>(per));
  }
  R.r.extra_name = "solitons.csv";
  R.r.extra_csv = extra.str();
  return R.r;
}

// ---------------------------------------------------------------- c* scan

RunResult run_cstar(const ExperimentConfig& cfg) {
  Runner R;
  const CStarResult cs = c_star(cfg.nl);
  json& S = R.r.summary;
  S["c_star"] = cs.infinite ? json("inf") : json(cs.value);
  S["bracket"] = {cs.bracket_lo, cs.bracket_hi};
  if (cfg.nl.kind() == NonlinearityKind::power_difference && cfg.nl.a() == 1.0) {
    const CStarClosedForm cf = c_star_closed_form(cfg.nl.p(), cfg.nl.q(), cfg.nl.a_sub());
    const double rel = std::abs(cs.value - cf.c_star) / cf.c_star;
    S["closed_form"] = cf.c_star;
    S["closed_form_s0"] = cf.s0;
    S["relative_error"] = rel;
    R.check("c_star_vs_closed_form", rel, "<=", cfg.tol.c_star_rel);
  }
  return R.r;
}

// ---------------------------------------------------------------- spectral report

RunResult run_spectral(const ExperimentConfig& cfg) {
  Runner R;
  json& S = R.r.summary;
  const double B = cfg.B > 0.0 ? cfg.B : default_B(cfg.c0);
  S["c"] = cfg.c0;
  S["B"] = B;
  json residuals = json::array();
  auto analyse = [&](double c, const std::string& tag) {
    const SolitonProfile prof = SolitonProfile::build(cfg.nl, c);
    const OperatorL op = assemble_L(prof, spectral_grid(c, cfg.spectral_N));
    const Grid& sg = op.grid;
    const std::vector<EigenPair> eig = lowest_eigenpairs(op, 3);
    const Field Q = prof.sample(sg);
    const Field Qx = prof.sample(sg, 0.0, ProfileOrder::Qx);
    const TruncatedChi tc = truncate_chi(op, eig[0], Q, B);
    const Coercivity pos2 = constrained_coercivity(op, {Qx, op.apply(tc.chi)});
    const Coercivity pos1 = constrained_coercivity(op, {Qx, eig[0].vector});
    double worst_res = 0.0;
    for (const auto& e : eig) worst_res = std::max(worst_res, e.residual);
    R.check(tag + "eig_residual", worst_res, "<=", cfg.tol.eig_residual);
    R.check(tag + "chi_trunc_chi_Q", tc.chi_Q, ">=", 0.0);
    R.check(tag + "chi_trunc_quotient_low", tc.quotient - 0.5 * tc.lambda0, ">=", 0.0);
    // Equality is attained up to round-off when phi(x/B) = 1 on the support of chi~.
    R.check(tag + "chi_trunc_quotient_excess", (tc.quotient - tc.lambda0) / tc.lambda0, "<=", cfg.tol.quotient_slack);
    R.check(tag + "lambda1_theorem2", pos2.lambda1, ">=", 0.0);
    R.check(tag + "lambda1_theorem1", pos1.lambda1, ">=", 0.0);
    json e;
    e["c"] = c;
    e["eigenvalues"] = {eig[0].lambda, eig[1].lambda, eig[2].lambda};
    e["residuals"] = {eig[0].residual, eig[1].residual, eig[2].residual};
    e["lambda0"] = -eig[0].lambda;
    e["quotient"] = tc.quotient;
    e["chi_Q"] = tc.chi_Q;
    e["lambda1_theorem2"] = pos2.lambda1;
    e["lambda1_theorem1"] = pos1.lambda1;
    return std::tuple{e, op, prof, tc};
  };
  auto [e0, op, prof, tc] = analyse(cfg.c0, "");
  S["lambda0"] = e0["lambda0"];
  S["lambda1"] = e0["lambda1_theorem2"];
  S["lambda1_theorem1"] = e0["lambda1_theorem1"];
  S["residuals"] = e0["residuals"];
  S["eigenvalues"] = e0["eigenvalues"];
  S["chi_trunc_quotient"] = e0["quotient"];
  const WeightMu mu = mu_weight(prof, op.grid);
  const Lambda2 l2m = measure_lambda2(op, mu, tc.chi, cfg.nl.p(), 20.0 / std::sqrt(cfg.c0));
  S["lambda2_measured"] = l2m.value;
  S["lambda2_envelope"] = l2m.envelope;
  S["lambda2_form"] = l2m.form;
  R.check("lambda2_measured", l2m.value, ">=", 0.0);
  // The fixed B has to serve the whole interval [c0 - sigma1, c0 + sigma1].
  const double s1 = cfg.constants.sigma1;
  if (s1 > 0.0) {
    json ends = json::array();
    for (double c : {cfg.c0 - s1, cfg.c0 + s1}) {
      if (!(c > 0.0) || !soliton_exists(cfg.nl, c)) throw ConfigError("constants.sigma1: interval leaves the soliton range");
      ends.push_back(std::get<0>(analyse(c, c < cfg.c0 ? "sigma1_low_" : "sigma1_high_")));
    }
    S["sigma1"] = s1;
    S["sigma1_endpoints"] = ends;
  }
  return R.r;
}

// ---------------------------------------------------------------- virial audit

RunResult run_virial(const ExperimentConfig& cfg) {
  Runner R;
  json& S = R.r.summary;
  const SolitonProfile prof = SolitonProfile::build(cfg.nl, cfg.c0);
  const double B = cfg.B > 0.0 ? cfg.B : default_B(cfg.c0);
  struct Level {
    double max_rel = 0.0;
    std::vector<double> rel;
    double lambda2 = 0.0;
    double worst_bound = std::numeric_limits<double>::infinity();
  };
  auto level = [&](int N) {
    Level L;
    const OperatorL op = assemble_L(prof, spectral_grid(cfg.c0, N));
    const Grid& sg = op.grid;
    const WeightMu mu = mu_weight(prof, sg);
    const EigenPair gs = ground_state(op);
    const TruncatedChi tc = truncate_chi(op, gs, mu.Q, B);
    for (int j = 0; j < cfg.samples; ++j) {
      CounterRng rng(cfg.seed, 100 + static_cast<std::uint64_t>(j));
      Field w = random_band_limited(sg, rng);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] *= mu.Q[i];
      const VirialSides vsd = virial_identity_check(op, w, mu);
      const double rel = std::abs(vsd.lhs - vsd.rhs) / (std::abs(vsd.lhs) + std::abs(vsd.rhs));
      L.rel.push_back(rel);
      L.max_rel = std::max(L.max_rel, rel);
    }
    const Lambda2 l2m = measure_lambda2(op, mu, tc.chi, cfg.nl.p(), 20.0 / std::sqrt(cfg.c0));
    L.lambda2 = l2m.value;
    for (int j = 0; j < 5 * cfg.samples; ++j) {
      CounterRng rng(cfg.seed, 1000 + static_cast<std::uint64_t>(j));
      Field w = random_band_limited(sg, rng);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] *= mu.Q[i];
      const VirialBound vb = virial_lower_bound(op, mu, tc.chi, w, l2m.value);
      L.worst_bound = std::min(L.worst_bound, (vb.form - vb.bound) / std::max(std::abs(vb.form), 1e-300));
    }
    return L;
  };
  const Level fine = level(cfg.reference_N);
  const Level coarse = level(cfg.reference_N / 2);
  const double refine = coarse.max_rel / fine.max_rel;
  S["reference_N"] = cfg.reference_N;
  S["identity_defect_reference"] = fine.max_rel;
  S["identity_defect_half"] = coarse.max_rel;
  S["identity_refinement"] = refine;
  S["lambda2_reference"] = fine.lambda2;
  S["lambda2_half"] = coarse.lambda2;
  S["lower_bound_slack_reference"] = fine.worst_bound;
  S["lower_bound_slack_half"] = coarse.worst_bound;
  R.check("identity_defect", fine.max_rel, "<=", cfg.tol.virial_identity);
  R.check("identity_refinement", refine, ">=", cfg.tol.virial_refinement);
  R.check("lambda2", fine.lambda2, ">=", 0.0);
  R.check("lower_bound_slack_reference", fine.worst_bound, ">=", 0.0);
  R.check("lower_bound_slack_half", coarse.worst_bound, ">=", 0.0);
  return R.r;
}

}  // namespace

// ---------------------------------------------------------------- public API

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  check_keys(j, "config.",
             {"schema_version", "scenario", "nonlinearity", "c0", "grid", "dt", "T_final", "cadence", "frame_speed",
              "soliton_x", "solitons", "perturbation", "seed", "anchors", "snapshot_cadence", "mode", "region_left",
              "window", "t_ref", "t_virial", "spectral_N", "reference_N", "B", "samples", "constants", "tolerances",
              "name", "comment"});
  ExperimentConfig c;
  const std::string w = "config.";
  c.schema_version = integer(j, w, "schema_version", -1);
  if (c.schema_version != kSchemaVersion) {
    throw ConfigError("config.schema_version: expected " + std::to_string(kSchemaVersion));
  }
  if (!j.contains("scenario") || !j.at("scenario").is_string()) throw ConfigError("config.scenario: expected a string");
  c.scenario = j.at("scenario").get<std::string>();
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), c.scenario) == names.end()) {
    throw ConfigError("config.scenario: unknown scenario '" + c.scenario + "'");
  }
  if (j.contains("nonlinearity")) {
    try {
      c.nl = Nonlinearity::from_json(j.at("nonlinearity"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config.") + e.what());
    }
  }
  c.c0 = positive(j, w, "c0", c.c0);
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    if (!g.is_object()) throw ConfigError("config.grid: expected an object");
    check_keys(g, "config.grid.", {"L", "N"});
    const double L = positive(g, "config.grid.", "L", c.grid.L);
    const int N = integer(g, "config.grid.", "N", c.grid.N);
    if (N < 16 || !is_power_of_two(N)) throw ConfigError("config.grid.N: must be a power of two >= 16");
    c.grid = Grid(L, N);
  }
  c.dt = positive(j, w, "dt", c.dt);
  c.T_final = positive(j, w, "T_final", c.T_final);
  c.cadence = positive(j, w, "cadence", c.cadence);
  c.frame_speed = num(j, w, "frame_speed", c.frame_speed);
  c.soliton_x = num(j, w, "soliton_x", c.soliton_x);
  if (j.contains("solitons")) {
    const json& s = j.at("solitons");
    if (!s.is_array()) throw ConfigError("config.solitons: expected an array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string where = "config.solitons[" + std::to_string(i) + "].";
      if (!s[i].is_object()) throw ConfigError(where + ": expected an object");
      check_keys(s[i], where, {"c", "x"});
      c.solitons.push_back({positive(s[i], where, "c", 1.0), num(s[i], where, "x", 0.0)});
    }
  }
  if (j.contains("perturbation")) {
    const json& p = j.at("perturbation");
    const std::string where = "config.perturbation.";
    if (!p.is_object()) throw ConfigError("config.perturbation: expected an object");
    check_keys(p, where, {"shape", "amplitude", "center", "width", "kmax"});
    const std::string shape = p.value("shape", std::string("none"));
    if (shape == "none") c.perturbation.shape = PerturbationShape::none;
    else if (shape == "gaussian") c.perturbation.shape = PerturbationShape::gaussian;
    else if (shape == "s_direction") c.perturbation.shape = PerturbationShape::s_direction;
    else if (shape == "qx_direction") c.perturbation.shape = PerturbationShape::qx_direction;
    else if (shape == "random") c.perturbation.shape = PerturbationShape::random;
    else throw ConfigError(where + "shape: unknown shape '" + shape + "'");
    c.perturbation.amplitude = num(p, where, "amplitude", 0.0);
    c.perturbation.center = num(p, where, "center", 0.0);
    c.perturbation.width = positive(p, where, "width", c.perturbation.width);
    c.perturbation.kmax = positive(p, where, "kmax", c.perturbation.kmax);
  }
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("config.seed: expected an unsigned integer");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("anchors")) {
    const json& a = j.at("anchors");
    if (!a.is_object()) throw ConfigError("config.anchors: expected an object");
    check_keys(a, "config.anchors.", {"x0", "t0"});
    c.anchors.x0 = num_list(a, "config.anchors.", "x0");
    c.anchors.t0 = num_list(a, "config.anchors.", "t0");
    if (c.anchors.x0.empty() != c.anchors.t0.empty()) throw ConfigError("config.anchors: x0 and t0 go together");
    for (double t0 : c.anchors.t0) {
      if (!(t0 > 0.0) || t0 > c.T_final) throw ConfigError("config.anchors.t0: must lie in (0, T_final]");
    }
  }
  c.snapshot_cadence = nonnegative(j, w, "snapshot_cadence", 0.0);
  if (j.contains("mode")) {
    const std::string m = j.at("mode").is_string() ? j.at("mode").get<std::string>() : "";
    if (m == "theorem1") c.mode = ModulationMode::theorem1;
    else if (m == "theorem2") c.mode = ModulationMode::theorem2;
    else throw ConfigError("config.mode: expected \"theorem1\" or \"theorem2\"");
  }
  c.region_left = num(j, w, "region_left", c.region_left);
  c.window = positive(j, w, "window", c.window);
  c.t_ref = positive(j, w, "t_ref", c.t_ref);
  c.t_virial = nonnegative(j, w, "t_virial", c.t_virial);
  c.spectral_N = integer(j, w, "spectral_N", c.spectral_N);
  c.reference_N = integer(j, w, "reference_N", c.reference_N);
  if (!is_power_of_two(c.spectral_N) || c.spectral_N < 64) throw ConfigError("config.spectral_N: power of two >= 64");
  if (!is_power_of_two(c.reference_N) || c.reference_N < 128) throw ConfigError("config.reference_N: power of two >= 128");
  c.B = nonnegative(j, w, "B", 0.0);
  c.samples = integer(j, w, "samples", c.samples);
  if (c.samples < 1) throw ConfigError("config.samples: must be positive");
  if (j.contains("constants")) {
    const json& k = j.at("constants");
    const std::string where = "config.constants.";
    if (!k.is_object()) throw ConfigError("config.constants: expected an object");
    check_keys(k, where, {"lambda3", "K_cal", "K0", "sigma0", "sigma1", "provenance"});
    c.constants.lambda3 = nonnegative(k, where, "lambda3", 0.0);
    c.constants.K_cal = nonnegative(k, where, "K_cal", 0.0);
    c.constants.K0 = nonnegative(k, where, "K0", 0.0);
    c.constants.sigma0 = nonnegative(k, where, "sigma0", c.constants.sigma0);
    c.constants.sigma1 = nonnegative(k, where, "sigma1", c.constants.sigma1);
    if (k.contains("provenance")) {
      if (!k.at("provenance").is_string()) throw ConfigError(where + "provenance: expected a string");
      c.constants.provenance = k.at("provenance").get<std::string>();
    }
  }
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    const std::string where = "config.tolerances.";
    if (!t.is_object()) throw ConfigError("config.tolerances: expected an object");
    check_keys(t, where,
               {"l2_error", "drift_per_20", "local_h1_ratio", "c_drift", "ratio_bound", "window_ratio",
                "monotonicity_slack", "c_star_rel", "orthogonality", "multi_recovery", "virial_identity",
                "virial_refinement", "eig_residual", "cadence_noise", "quotient_slack"});
    Tolerances& o = c.tol;
    o.l2_error = positive(t, where, "l2_error", o.l2_error);
    o.drift_per_20 = positive(t, where, "drift_per_20", o.drift_per_20);
    o.local_h1_ratio = positive(t, where, "local_h1_ratio", o.local_h1_ratio);
    o.c_drift = positive(t, where, "c_drift", o.c_drift);
    o.ratio_bound = positive(t, where, "ratio_bound", o.ratio_bound);
    o.window_ratio = positive(t, where, "window_ratio", o.window_ratio);
    o.monotonicity_slack = nonnegative(t, where, "monotonicity_slack", o.monotonicity_slack);
    o.c_star_rel = positive(t, where, "c_star_rel", o.c_star_rel);
    o.orthogonality = positive(t, where, "orthogonality", o.orthogonality);
    o.multi_recovery = positive(t, where, "multi_recovery", o.multi_recovery);
    o.virial_identity = positive(t, where, "virial_identity", o.virial_identity);
    o.virial_refinement = positive(t, where, "virial_refinement", o.virial_refinement);
    o.eig_residual = positive(t, where, "eig_residual", o.eig_residual);
    o.cadence_noise = positive(t, where, "cadence_noise", o.cadence_noise);
    o.quotient_slack = nonnegative(t, where, "quotient_slack", o.quotient_slack);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config " + path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ConfigError("config " + path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

bool RunResult::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

RunResult run_scenario(const ExperimentConfig& cfg) {
  RunResult r;
  if (cfg.scenario == "soliton-propagation" || cfg.scenario == "perturbed-soliton") r = run_soliton(cfg);
  else if (cfg.scenario == "linear-liouville") r = run_linear(cfg);
  else if (cfg.scenario == "multi-soliton") r = run_multi(cfg);
  else if (cfg.scenario == "c-star-scan") r = run_cstar(cfg);
  else if (cfg.scenario == "spectral-report") r = run_spectral(cfg);
  else if (cfg.scenario == "virial-audit") r = run_virial(cfg);
  else throw ConfigError("config.scenario: unknown scenario '" + cfg.scenario + "'");
  r.scenario = cfg.scenario;
  json& S = r.summary;
  S["schema_version"] = kSchemaVersion;
  S["scenario"] = cfg.scenario;
  S["config"] = config_to_json(cfg);
  S["constants"] = constants_to_json(cfg.constants);
  S["tolerances"] = tolerances_to_json(cfg.tol);
  S["records"] = r.series.records().size();
  json as = json::array();
  for (const auto& a : r.assertions) {
    as.push_back({{"name", a.name}, {"value", a.value}, {"relation", a.relation}, {"limit", a.limit}, {"pass", a.pass}});
  }
  S["assertions"] = as;
  S["verdict"] = r.passed() ? "PASS" : "FAIL";
  return r;
}

void write_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "diagnostics.csv");
    r.series.write_csv(os);
  }
  {
    std::ofstream os(dir / "summary.json");
    os << r.summary.dump(2) << '\n';
  }
  if (!r.extra_name.empty()) {
    std::ofstream os(dir / r.extra_name);
    os << r.extra_csv;
  }
}

void emit_report(const RunResult& r, std::ostream& os) {
  os << "scenario: " << r.scenario << '\n';
  const auto& recs = r.series.records();
  if (recs.empty()) {
    os << "no records\n";
  } else {
    os << "records: " << recs.size() << " (t = " << recs.front().t << " .. " << recs.back().t << ")\n";
  }
  os << "tracked:\n";
  static const std::vector<std::string> skip = {"config", "constants", "tolerances", "assertions", "verdict",
                                                "scenario", "schema_version", "records"};
  for (auto it = r.summary.begin(); it != r.summary.end(); ++it) {
    if (std::find(skip.begin(), skip.end(), it.key()) != skip.end()) continue;
    os << "  " << it.key() << " = " << it.value().dump() << '\n';
  }
  if (r.summary.contains("constants")) {
    os << "constants:\n";
    for (auto it = r.summary["constants"].begin(); it != r.summary["constants"].end(); ++it) {
      os << "  " << it.key() << " = " << it.value().dump() << '\n';
    }
  }
  for (const auto& a : r.assertions) {
    os << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << fmt(a.value) << ' ' << a.relation << ' ' << fmt(a.limit);
    if (!a.pass) os << "  (violated)";
    os << '\n';
  }
  os << "verdict: " << (r.passed() ? "PASS" : "FAIL") << '\n';
}

int main_entry(int argc, char** argv) {
  CLI::App app{"gkdvlab: gKdV soliton laboratory"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string out_dir = "out";
  auto* run = app.add_subcommand("run", "Run scenario configs (several run in parallel)");
  run->add_option("--config", configs, "Config JSON (repeatable)")->required();
  run->add_option("--out", out_dir, "Output directory");

  int p = 2, q = 3;
  double a = 1.0;
  auto* scan = app.add_subcommand("scan-cstar", "c* for f = u^p - a u^q");
  scan->add_option("--p", p)->required();
  scan->add_option("--q", q)->required();
  scan->add_option("--a", a)->required();

  double c = 1.0;
  std::string spec_config;
  auto* spec = app.add_subcommand("spectral", "Spectral report at speed c");
  spec->add_option("--c", c)->required();
  spec->add_option("--config", spec_config, "Config JSON providing the nonlinearity")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto report_one = [](const RunResult& r) {
    emit_report(r, std::cout);
    return r.passed() ? 0 : 1;
  };

  try {
    if (*scan) {
      ExperimentConfig cfg;
      cfg.scenario = "c-star-scan";
      cfg.nl = Nonlinearity::power_difference(p, q, 1.0, a);
      return report_one(run_scenario(cfg));
    }
    if (*spec) {
      ExperimentConfig cfg = load_config(spec_config);
      cfg.scenario = "spectral-report";
      cfg.c0 = c;
      if (!(c > 0.0)) throw ConfigError("--c: must be positive");
      const RunResult r = run_scenario(cfg);
      std::cout << r.summary.dump(2) << '\n';
      return report_one(r);
    }
    std::vector<ExperimentConfig> cfgs;
    for (const auto& path : configs) cfgs.push_back(load_config(path));
    std::vector<std::future<RunResult>> jobs;
    for (const auto& cfg : cfgs) jobs.push_back(std::async(std::launch::async, [&cfg] { return run_scenario(cfg); }));
    int status = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const RunResult r = jobs[i].get();
      const std::filesystem::path dir =
          cfgs.size() == 1 ? std::filesystem::path(out_dir)
                           : std::filesystem::path(out_dir) / std::filesystem::path(configs[i]).stem();
      write_artifacts(r, dir);
      status = std::max(status, report_one(r));
    }
    return status;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace gkdv::cli
