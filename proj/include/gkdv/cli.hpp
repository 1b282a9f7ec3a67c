#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gkdv/evolve.hpp"
#include "gkdv/modulation.hpp"
#include "gkdv/nonlinearity.hpp"

namespace gkdv::cli {

inline constexpr int kSchemaVersion = 1;

enum class PerturbationShape { none, gaussian, s_direction, qx_direction, random };

/// Added to the initial soliton. `amplitude` is relative to the peak s0; the
/// shape is centered at soliton position + `center`.
struct Perturbation {
  PerturbationShape shape = PerturbationShape::none;
  double amplitude = 0.0;
  double center = 0.0;
  double width = 3.0;  // gaussian standard deviation, envelope of `random`
  double kmax = 3.0;   // band limit of `random`
};

struct SolitonSpec {
  double c = 1.0;
  double x = 0.0;  // initial position, frame coordinates
};

/// Frozen calibration constants. Every value is echoed into the summary.
struct Constants {
  double lambda3 = 0.0;  // virial constant of the nonlinear dual problem
  double K_cal = 0.0;    // monotonicity audit
  double K0 = 0.0;       // parameter-rate bound
  double sigma0 = 0.05;  // c-interval half-width for epsilon0
  double sigma1 = 0.05;  // c-interval half-width for the fixed-B spectral checks
  std::string provenance;
};

/// Assertion limits; echoed into the summary next to the measured values.
struct Tolerances {
  double l2_error = 1e-5;           // relative, soliton propagation
  double drift_per_20 = 1e-9;       // relative mass/energy drift per 20 time units
  double local_h1_ratio = 0.2;      // local H1 at T over its t = 0 value
  double c_drift = 1e-3;            // |c(T) - c(T/2)|, |c_j(T) - c_j(0)|
  double ratio_bound = 10.0;        // dual-estimate ratios, max/min over the run
  double window_ratio = 0.5;        // linear Liouville window residual at T over t_ref
  double monotonicity_slack = 1e-8;
  double c_star_rel = 1e-8;
  double orthogonality = 1e-11;     // relative, with the round-off floor of decompose
  double multi_recovery = 1e-8;     // (c_j, rho_j) at t = 0
  double virial_identity = 1e-7;
  double virial_refinement = 12.0;
  double eig_residual = 1e-8;
  double cadence_noise = 0.1;       // Richardson disagreement of the virial rates
  double quotient_slack = 1e-12;    // relative excess of the truncated-chi Rayleigh quotient over lambda0
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string scenario;
  Nonlinearity nl = Nonlinearity::pure_power(2);
  double c0 = 1.0;
  Grid grid{200.0, 4096};
  double dt = 1e-3;
  double T_final = 20.0;
  double cadence = 0.5;
  double frame_speed = 0.0;
  double soliton_x = 0.0;
  std::vector<SolitonSpec> solitons;  // multi-soliton
  Perturbation perturbation;
  std::uint64_t seed = 0;
  MonotonicityAnchors anchors;
  double snapshot_cadence = 0.0;  // 0: cadence
  ModulationMode mode = ModulationMode::theorem1;
  double region_left = -20.0;  // local H1 region, relative to rho
  double window = 20.0;        // linear Liouville window half-width
  double t_ref = 20.0;         // linear Liouville reference time
  double t_virial = 15.0;      // linear virial audit horizon (before periodic re-entry)
  int spectral_N = 2048;
  int reference_N = 8192;      // virial identity reference resolution
  double B = 0.0;              // 0 selects default_B(c0)
  int samples = 20;            // random test functions in the virial audit
  Constants constants;
  Tolerances tol;
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
/// Parse errors carry the line number.
ExperimentConfig load_config(const std::filesystem::path& path);

struct Assertion {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=" or ">="
  double limit = 0.0;
  bool pass = false;
};

struct RunResult {
  std::string scenario;
  DiagnosticsSeries series;
  nlohmann::json summary;
  std::vector<Assertion> assertions;
  /// Optional second table (per-soliton traces), written as `extra_name`.
  std::string extra_name;
  std::string extra_csv;
  bool passed() const;
};

/// Runs one scenario. Module errors propagate unchanged.
RunResult run_scenario(const ExperimentConfig& cfg);

/// diagnostics.csv, summary.json (and the extra table) under `dir`.
void write_artifacts(const RunResult& r, const std::filesystem::path& dir);

/// Human-readable table of tracked constants and assertion lines.
void emit_report(const RunResult& r, std::ostream& os);

/// argv-level entry point of gkdvlab; returns the process exit status
/// (0 pass, 1 assertion failure, 2 configuration or runtime error).
int main_entry(int argc, char** argv);

}  // namespace gkdv::cli
