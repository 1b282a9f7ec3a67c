// One PASS/FAIL line per acceptance criterion. Usage: acceptance [--criterion N]...
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "gkdv/cli.hpp"
#include "gkdv/evolve.hpp"
#include "gkdv/nonlinearity.hpp"
#include "gkdv/soliton.hpp"
#include "gkdv/spectral.hpp"

using namespace gkdv;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double sech_profile(int p, double c, double x) {
  const double amp = std::pow(c * (p + 1) / 2.0, 1.0 / (p - 1));
  return amp * std::pow(1.0 / std::cosh(0.5 * (p - 1) * std::sqrt(c) * x), 2.0 / (p - 1));
}

cli::Constants frozen_constants() {
  std::ifstream in(std::string(GKDV_FIXTURES) + "/calibration.json");
  const json j = json::parse(in);
  const json& k = j.at("constants");
  cli::Constants c;
  c.lambda3 = k.at("lambda3");
  c.K_cal = k.at("K_cal");
  c.K0 = k.at("K0");
  c.sigma0 = k.at("sigma0");
  c.sigma1 = k.at("sigma1");
  c.provenance = k.at("provenance");
  return c;
}

cli::ExperimentConfig reference(const std::string& name) {
  cli::ExperimentConfig c = cli::load_config(std::string(GKDV_CONFIGS) + "/" + name);
  c.constants = frozen_constants();
  return c;
}

double summary(const cli::RunResult& r, const char* key) { return r.summary.at(key).get<double>(); }

// ---------------------------------------------------------------- 1
Verdict criterion1() {
  Verdict v;
  const int cases[4][3] = {{2, 3, 1}, {2, 3, 2}, {3, 5, 1}, {2, 4, 1}};
  double worst = 0.0, slowest = 0.0;
  for (const auto& cs : cases) {
    // Oracle: s* solves s f(s) = 2 F(s), then c* = 2 F(s*) / s*^2.
    const int p = cs[0], q = cs[1];
    const double a = cs[2];
    const double s = std::pow((p - 1.0) * (q + 1.0) / ((p + 1.0) * (q - 1.0) * a), 1.0 / (q - p));
    const double oracle = 2.0 * (std::pow(s, p - 1) / (p + 1.0) - a * std::pow(s, q - 1) / (q + 1.0));
    const auto t0 = std::chrono::steady_clock::now();
    const CStarResult r = c_star(Nonlinearity::power_difference(p, q, 1.0, a));
    slowest = std::max(slowest, seconds_since(t0));
    const double closed = c_star_closed_form(p, q, a).c_star;
    worst = std::max({worst, std::abs(r.value - oracle) / oracle, std::abs(closed - oracle) / oracle});
  }
  v.detail << "max rel error " << worst << ", slowest " << slowest << " s";
  v.require(worst <= 1e-8, "rel error <= 1e-8");
  v.require(slowest < 1.0, "runtime < 1 s each");
  return v;
}

// ---------------------------------------------------------------- 2
Verdict criterion2() {
  Verdict v;
  double sup = 0.0, ode = 0.0;
  for (int p : {2, 3, 4, 5}) {
    const auto nl = Nonlinearity::pure_power(p);
    for (double c : {0.5, 1.0, 2.0}) {
      const auto prof = SolitonProfile::build(nl, c);
      for (int i = 0; i <= 16000; ++i) {
        const double x = -40.0 + 0.005 * i;
        sup = std::max(sup, std::abs(prof.Q(x) - sech_profile(p, c, x)));
      }
      // ODE residual with a spectral second derivative on a fine box.
      const Grid g(2.0 * std::ceil(30.0 / std::sqrt(c)), 4096);
      const Spectral sp(g);
      const Field q = prof.sample(g);
      const Field qxx = sp.derivative(q, 2);
      for (std::size_t i = 0; i < q.size(); ++i) ode = std::max(ode, std::abs(qxx[i] + nl.f(q[i]) - c * q[i]));
    }
  }
  // Closed-form sech integrals for u^2, c = 1: int Q^2 = 6, E = 3/5 - 12/5 = -9/5.
  const auto prof = SolitonProfile::build(Nonlinearity::pure_power(2), 1.0);
  const Grid g(200.0, 8192);
  double m = 0.0, kin = 0.0, pot = 0.0;
  for (int i = 0; i < g.N; ++i) {
    const double q = prof.Q(g.x(i)), qx = prof.Qx(g.x(i));
    m += q * q;
    kin += qx * qx;
    pot += q * q * q / 3.0;
  }
  m *= g.h();
  const double E = g.h() * (0.5 * kin - pot);
  v.detail << "sup " << sup << ", ode " << ode << ", mass-6 " << m - 6.0 << ", E+9/5 " << E + 1.8;
  v.require(sup <= 1e-8, "sup distance <= 1e-8");
  v.require(ode <= 1e-8, "ODE residual <= 1e-8");
  v.require(std::abs(m - 6.0) <= 1e-8, "mass = 6");
  v.require(std::abs(E + 1.8) <= 1e-8, "energy = -9/5");
  return v;
}

// ---------------------------------------------------------------- 3
double overlap(const Grid& g, const Field& a, const Field& b) {
  return std::abs(inner(g, a, b)) / (norm(g, a) * norm(g, b));
}

Verdict criterion3() {
  Verdict v;
  const auto prof = SolitonProfile::build(Nonlinearity::pure_power(2), 1.0);
  const OperatorL op = assemble_L(prof, spectral_grid(1.0, 2048));
  const auto eig = lowest_eigenpairs(op, 3);
  const double ev[3] = {-1.25, 0.0, 0.75};
  double err = 0.0, res = 0.0;
  for (int k = 0; k < 3; ++k) {
    err = std::max(err, std::abs(eig[static_cast<std::size_t>(k)].lambda - ev[k]));
    res = std::max(res, eig[static_cast<std::size_t>(k)].residual);
  }
  const double ov = overlap(op.grid, eig[1].vector, prof.sample(op.grid, 0.0, ProfileOrder::Qx));
  double lt_worst = 0.0, lt_ov = 1.0;
  for (int p : {2, 3, 5}) {
    const Grid g = spectral_grid(1.0, 2048);
    const OperatorL lt = assemble_Ltilde(1.0, p, g);
    const EigenPair gs = ground_state(lt);
    Field ref(static_cast<std::size_t>(g.N));
    for (int i = 0; i < g.N; ++i) ref[static_cast<std::size_t>(i)] = std::pow(1.0 / std::cosh(g.x(i)), 0.5 * (p + 1));
    lt_worst = std::max(lt_worst, std::abs(gs.lambda));
    lt_ov = std::min(lt_ov, overlap(g, gs.vector, ref));
  }
  v.detail << "eig err " << err << ", residual " << res << ", kernel overlap " << ov << ", Ltilde |lambda| "
           << lt_worst << ", overlap " << lt_ov;
  v.require(err <= 1e-6, "eigenvalues to 1e-6");
  v.require(res <= 1e-8, "residuals <= 1e-8");
  v.require(ov >= 0.99999, "kernel overlap >= 0.99999");
  v.require(lt_worst <= 1e-6, "Ltilde |lambda| <= 1e-6");
  v.require(lt_ov >= 0.9999, "Ltilde overlap >= 0.9999");
  return v;
}

// ---------------------------------------------------------------- 4
Verdict criterion4() {
  Verdict v;
  double worst = 0.0;
  for (int p : {2, 3, 4, 5}) {
    const auto nl = Nonlinearity::pure_power(p);
    const double c = 1.0, d = 1e-3;
    const Grid g = spectral_grid(c, 2048);
    const Field S = dQdc(SolitonProfile::build(nl, c), g);
    // Central difference of the closed-form profiles.
    Field fd(S.size()), diff(S.size());
    for (int i = 0; i < g.N; ++i) {
      const auto k = static_cast<std::size_t>(i);
      fd[k] = (sech_profile(p, c + d, g.x(i)) - sech_profile(p, c - d, g.x(i))) / (2.0 * d);
      diff[k] = fd[k] - S[k];
    }
    worst = std::max(worst, norm(g, diff) / norm(g, fd));
  }
  const auto prof5 = SolitonProfile::build(Nonlinearity::pure_power(5), 1.0);
  const Grid g = spectral_grid(1.0, 2048);
  const double dmass = 2.0 * inner(g, prof5.sample(g), dQdc(prof5, g));
  v.detail << "max rel diff " << worst << ", p=5 d/dc int Q^2 = " << dmass;
  v.require(worst <= 5e-4, "S_c vs central difference <= 5e-4");
  v.require(std::abs(dmass) <= 1e-6, "critical mass derivative <= 1e-6");
  return v;
}

// ---------------------------------------------------------------- 5
Verdict criterion5() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  cli::ExperimentConfig c = reference("virial_audit.json");
  const cli::RunResult r = cli::run_scenario(c);
  const double secs = seconds_since(t0);
  v.detail << "defect " << summary(r, "identity_defect_reference") << " at N=" << c.reference_N << ", refinement "
           << summary(r, "identity_refinement") << ", lower-bound slack " << summary(r, "lower_bound_slack_reference")
           << ", " << secs << " s";
  v.require(summary(r, "identity_defect_reference") <= 1e-7, "defect <= 1e-7");
  v.require(summary(r, "identity_refinement") >= 12.0, "refinement >= 12");
  v.require(c.samples == 20, "20 test functions");
  v.require(r.passed(), "scenario assertions");
  v.require(secs < 30.0, "runtime < 30 s");
  return v;
}

// ---------------------------------------------------------------- 6
Verdict criterion6() {
  Verdict v;
  struct Case {
    Nonlinearity nl;
    double c;
  };
  const std::vector<Case> matrix = {{Nonlinearity::pure_power(2), 0.5},
                                    {Nonlinearity::pure_power(2), 1.0},
                                    {Nonlinearity::pure_power(2), 2.0},
                                    {Nonlinearity::pure_power(3), 1.0},
                                    {Nonlinearity::pure_power(5), 1.0},
                                    {Nonlinearity::power_difference(2, 3, 1.0, 1.0), 0.1},
                                    {Nonlinearity::power_difference(2, 3, 1.0, 1.0), 0.2},
                                    {Nonlinearity::power_difference(3, 5, 1.0, 1.0), 0.1}};
  double min1 = 1e300, min2 = 1e300, qlow = 1e300, qhigh = -1e300;
  for (const auto& m : matrix) {
    const auto prof = SolitonProfile::build(m.nl, m.c);
    const OperatorL op = assemble_L(prof, spectral_grid(m.c, 1024));
    const Field Q = prof.sample(op.grid), Qx = prof.sample(op.grid, 0.0, ProfileOrder::Qx);
    const EigenPair gs = ground_state(op);
    const TruncatedChi tc = truncate_chi(op, gs, Q, default_B(m.c));
    min1 = std::min(min1, constrained_coercivity(op, {Qx, gs.vector}).lambda1);
    min2 = std::min(min2, constrained_coercivity(op, {Qx, op.apply(tc.chi)}).lambda1);
    qlow = std::min(qlow, tc.quotient / tc.lambda0);
    qhigh = std::max(qhigh, tc.quotient / tc.lambda0);
  }
  v.detail << matrix.size() << " cases, min lambda1 " << min1 << " / " << min2 << ", quotient/lambda0 in [" << qlow
           << ", " << qhigh << "]";
  v.require(min1 > 0.0, "lambda1 > 0 (chi~ constraint)");
  v.require(min2 > 0.0, "lambda1 > 0 (L chi constraint)");
  v.require(qlow >= 0.5, "quotient >= lambda0/2");
  v.require(qhigh <= 1.0 + 1e-12, "quotient <= lambda0");
  return v;
}

// ---------------------------------------------------------------- 7
Verdict criterion7() {
  Verdict v;
  // Independent oracle: step the closed-form profile and compare with its translate.
  const auto nl = Nonlinearity::pure_power(2);
  const Grid g(200.0, 4096);
  const double x0 = -30.0, T = 20.0;
  Field u(static_cast<std::size_t>(g.N)), exact(u.size());
  for (int i = 0; i < g.N; ++i) {
    u[static_cast<std::size_t>(i)] = sech_profile(2, 1.0, g.wrap(g.x(i) - x0));
    exact[static_cast<std::size_t>(i)] = sech_profile(2, 1.0, g.wrap(g.x(i) - x0 - T));
  }
  const auto t0 = std::chrono::steady_clock::now();
  KdvStepper st(g, nl, 1e-3);
  st.advance(u, 20000);
  const double secs = seconds_since(t0);
  Field d(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) d[i] = u[i] - exact[i];
  const double oracle_err = norm(g, d) / norm(g, exact);

  const cli::RunResult r = cli::run_scenario(reference("soliton_propagation.json"));
  v.detail << "oracle error " << oracle_err << " (" << secs << " s), fitted " << summary(r, "l2_error_fitted")
           << ", mass drift " << summary(r, "mass_drift") << ", energy drift " << summary(r, "energy_drift");
  v.require(oracle_err <= 1e-5, "oracle L2 error <= 1e-5");
  v.require(summary(r, "l2_error_fitted") <= 1e-5, "frame-fitted error <= 1e-5");
  v.require(summary(r, "mass_drift") <= 1e-9 && summary(r, "energy_drift") <= 1e-9, "drift <= 1e-9");
  v.require(secs < 120.0, "runtime < 2 min");
  return v;
}

// ---------------------------------------------------------------- 8
Verdict criterion8() {
  Verdict v;
  const double pi = std::acos(-1.0);
  double worst_sym = 0.0, delta1 = 1e300;
  int bad3 = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = -80.0 + 160.0 * i / 9999.0;
    worst_sym = std::max(worst_sym, std::abs(psi(x) + psi(-x) - 1.0));
    if (!(psi_d3(x) <= psi_d1(x) / 16.0 * (1.0 + 1e-12))) ++bad3;  // equality in the left tail
    worst_sym = std::max(worst_sym, std::abs(psi_d1(x) - 1.0 / (4.0 * pi * std::cosh(x / 4.0))));
    if (x < 0.0) delta1 = std::min({delta1, psi(x) * std::exp(-x / 4.0), psi_d1(x) * std::exp(-x / 4.0)});
  }
  v.require(std::abs(psi_d1(0.0) - 1.0 / (4.0 * pi)) < 1e-15, "psi'(0) = 1/(4 pi)");
  v.require(worst_sym < 1e-13, "psi symmetry and psi' closed form");
  v.require(bad3 == 0, "psi''' <= psi'/16");
  v.require(delta1 > 0.0, "delta1 > 0");

  cli::ExperimentConfig exact = reference("soliton_propagation.json");
  cli::ExperimentConfig pert = exact;
  pert.scenario = "perturbed-soliton";
  pert.perturbation.shape = cli::PerturbationShape::gaussian;
  pert.perturbation.amplitude = 0.01;
  double excess = 0.0;
  for (const auto* c : {&exact, &pert}) {
    const cli::RunResult r = cli::run_scenario(*c);
    excess = std::max({excess, summary(r, "monotonicity_excess_I"), summary(r, "monotonicity_excess_J")});
    v.require(r.summary.at("monotonicity_pairs").get<int>() > 0, "audit pairs present");
  }
  v.detail << "psi checks at 10^4 points, delta1 " << delta1 << ", monotonicity excess " << excess << " (K_cal "
           << exact.constants.K_cal << ", x0 {5,10,20})";
  v.require(excess <= 1e-8, "monotonicity excess <= 1e-8");
  return v;
}

// ---------------------------------------------------------------- 9, 10
std::optional<cli::RunResult> long_run;
double long_run_secs = 0.0;

const cli::RunResult& perturbed_run() {
  if (!long_run) {
    const auto t0 = std::chrono::steady_clock::now();
    long_run = cli::run_scenario(reference("perturbed_soliton.json"));
    long_run_secs = seconds_since(t0);
  }
  return *long_run;
}

Verdict criterion9() {
  Verdict v;
  const cli::RunResult& r = perturbed_run();
  v.detail << "local H1 " << summary(r, "local_h1_initial") << " -> " << summary(r, "local_h1_final") << " (ratio "
           << summary(r, "local_h1_ratio") << "), |c(100)-c(50)| " << summary(r, "c_drift_second_half") << ", "
           << long_run_secs << " s";
  v.require(summary(r, "local_h1_ratio") <= 0.2, "local H1 ratio <= 0.2");
  v.require(summary(r, "c_drift_second_half") <= 1e-3, "c drift <= 1e-3");
  v.require(long_run_secs < 600.0, "runtime < 10 min");
  return v;
}

Verdict criterion10() {
  Verdict v;
  const cli::RunResult& r = perturbed_run();
  double eta_v = 0.0, vqx = 0.0, vchi = 0.0;
  for (const auto& a : r.assertions) {
    if (a.name == "dual_eta_v_max_over_min") eta_v = a.value;
    if (a.name == "dual_vQx_growth") vqx = a.value;
    if (a.name == "dual_vchi_growth") vchi = a.value;
  }
  v.detail << "V defect " << summary(r, "V_defect") << ", noise ratio " << summary(r, "virial_noise_ratio")
           << ", eta/v max/min " << eta_v << ", pairing growth " << vqx << " / " << vchi << ", lambda3 "
           << r.summary.at("constants").at("lambda3").get<double>();
  v.require(summary(r, "V_defect") >= 0.0, "V defect >= 0 beyond noise");
  v.require(summary(r, "virial_noise_ratio") <= 0.1, "Richardson agreement");
  v.require(summary(r, "vir1_defect") >= 0.0 && summary(r, "vir2_defect") >= 0.0, "both virial inequalities");
  v.require(eta_v <= 10.0 && vqx <= 10.0 && vchi <= 10.0, "ratios bounded by 10");
  return v;
}

// ---------------------------------------------------------------- 11
Verdict criterion11() {
  Verdict v;
  const cli::RunResult r = cli::run_scenario(reference("linear_liouville.json"));
  v.detail << "window residual " << summary(r, "window_residual_ref") << " (t=20) -> "
           << summary(r, "window_residual_final") << " (t=200), ratio " << summary(r, "window_ratio")
           << ", initial orthogonality " << summary(r, "initial_orthogonality");
  v.require(summary(r, "window_ratio") <= 0.5, "ratio <= 1/2");
  v.require(summary(r, "initial_orthogonality") <= 1e-11, "eta0 orthogonal to chi~, Q'");
  return v;
}

// ---------------------------------------------------------------- 12
Verdict criterion12() {
  Verdict v;
  const cli::RunResult r = cli::run_scenario(reference("multi_soliton.json"));
  bool increasing = false;
  for (const auto& a : r.assertions) {
    if (a.name == "separation_increasing") increasing = a.pass;
  }
  v.detail << "max |c_j(T)-c_j(0)| " << summary(r, "max_c_change") << ", gap 60 -> " << summary(r, "final_gap")
           << ", min gap increment " << summary(r, "min_gap_increment");
  v.require(summary(r, "max_c_change") <= 1e-3, "|c_j(T)-c_j(0)| <= 1e-3");
  v.require(increasing, "separation strictly increasing");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Verdict()>> all = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},   {5, criterion5},   {6, criterion6},
      {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}, {11, criterion11}, {12, criterion12}};
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      pick.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]...\n");
      return 2;
    }
  }
  if (pick.empty()) {
    for (const auto& [k, f] : all) pick.insert(k);
  }
  int failed = 0;
  for (int k : pick) {
    auto it = all.find(k);
    if (it == all.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", k);
      return 2;
    }
    Verdict v;
    try {
      v = it->second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " exception: " << e.what();
    }
    std::printf("criterion %2d: %s  %s\n", k, v.pass ? "PASS" : "FAIL", v.detail.str().c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
