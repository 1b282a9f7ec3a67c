#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include "gkdv/fourier.hpp"
#include "gkdv/grid.hpp"
#include "gkdv/nonlinearity.hpp"

namespace gkdv {

/// ETDRK4 (Cox-Matthews, contour-integral coefficients) for v_t = i w(k) v + N(v)
/// on the half-spectrum of a real field.
class Etdrk4 {
 public:
  using Nonlinear = std::function<void(const cplx* vhat, cplx* out)>;

  Etdrk4(const Grid& grid, double dt, const std::function<double(double)>& omega);

  const Spectral& spectral() const { return spectral_; }
  double dt() const { return dt_; }

  /// Advances `vhat` by `steps`. `last_good` receives the state before the
  /// step that produced a non-finite value, if any; returns false then.
  bool advance(Spectrum& vhat, int steps, const Nonlinear& N, Spectrum* last_good = nullptr);

 private:
  Spectral spectral_;
  double dt_;
  std::vector<cplx> E_, E2_, Q_, f1_, f2_, f3_;
  Spectrum nv_, na_, nb_, nc_, a_, b_, c_;
};

/// u_t + (u_xx + f(u))_x = 0 in a frame moving at `frame_speed`
/// (the lab coordinate is x + frame_speed t).
class KdvStepper {
 public:
  KdvStepper(const Grid& grid, Nonlinearity nl, double dt, double frame_speed = 0.0);

  /// Throws NumericalError on a non-finite value; `u` then holds the last
  /// finite state.
  void step(Field& u);
  void advance(Field& u, int steps);

  const Grid& grid() const { return grid_; }
  const Spectral& spectral() const { return etd_.spectral(); }
  double dt() const { return etd_.dt(); }
  double frame_speed() const { return frame_speed_; }
  /// -i k mask F[f(u)] for the current state; exposed for tests.
  void flux(const cplx* vhat, cplx* out);

 private:
  Grid grid_;
  Nonlinearity nl_;
  double frame_speed_;
  Etdrk4 etd_;
  Field u_, fu_;
  Spectrum fhat_;
};

/// eta_t = d/dx (-eta_xx + c0 eta - V eta), V = f'(Q_c0) sampled on the grid.
class LinearizedStepper {
 public:
  LinearizedStepper(const Grid& grid, Field potential, double c0, double dt);

  void step(Field& eta);
  void advance(Field& eta, int steps);
  const Spectral& spectral() const { return etd_.spectral(); }

 private:
  Grid grid_;
  Field potential_;
  Etdrk4 etd_;
  Field w_, vw_;
  Spectrum fhat_;
};

struct Invariants {
  double mass = 0.0;    // int u^2
  double energy = 0.0;  // (1/2) int u_x^2 - int F(u)
};

Invariants invariants(const Spectral& sp, const Field& u, const Nonlinearity& nl);

/// (2/pi) arctan(e^{x/4}) and its first three derivatives.
double psi(double x);
double psi_d1(double x);
double psi_d2(double x);
double psi_d3(double x);

/// psi(sqrt(c0) (x - rho_t0 + (c0/2)(t0 - t) - x0)).
double psi0(double x, double t, double t0, double rho_t0, double x0, double c0);

/// int u^2 weight.
double functional_I(const Spectral& sp, const Field& u, const Field& weight);
/// int (u_x^2 - 2F(u) + c0 u^2) weight.
double functional_J(const Spectral& sp, const Field& u, const Field& weight, const Nonlinearity& nl, double c0);

/// (int_{x > region_left} u_x^2 + u^2)^{1/2}; the region edge is a linear ramp
/// across one cell.
double local_h1_norm(const Spectral& sp, const Field& u, double region_left);
/// Global H^1 norm.
double h1_norm(const Spectral& sp, const Field& u);

struct DiagnosticsRecord {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double c = std::numeric_limits<double>::quiet_NaN();
  double rho = std::numeric_limits<double>::quiet_NaN();
  double eta_h1 = std::numeric_limits<double>::quiet_NaN();
  double I = std::numeric_limits<double>::quiet_NaN();
  double J = std::numeric_limits<double>::quiet_NaN();
  double V = std::numeric_limits<double>::quiet_NaN();
  double local_h1 = std::numeric_limits<double>::quiet_NaN();
};

/// Time-ordered records, plus optional field snapshots for post-pass audits.
/// Snapshot positions are frame coordinates; lab = x + frame_offset.
class DiagnosticsSeries {
 public:
  struct Snapshot {
    double t;
    double frame_offset;
    Field u;
  };

  static constexpr const char* kHeader = "t,mass,energy,c,rho,eta_h1,I,J,V,local_h1";

  /// Throws PreconditionError unless t is strictly larger than the last record.
  void add(const DiagnosticsRecord& r);
  void add_snapshot(double t, double frame_offset, Field u);

  const std::vector<DiagnosticsRecord>& records() const { return records_; }
  const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  bool empty() const { return records_.empty(); }

  /// Fixed header, one line per record, %.17g.
  void write_csv(std::ostream& os) const;

 private:
  std::vector<DiagnosticsRecord> records_;
  std::vector<Snapshot> snapshots_;
};

struct MonotonicityAnchors {
  std::vector<double> x0;
  std::vector<double> t0;
};

struct MonotonicityReport {
  /// max over pairs t <= t0 of (I(t0) - I(t)) e^{sqrt(c0) x0/4}; the quantity
  /// K_cal has to dominate.
  double K_measured_I = 0.0;
  double K_measured_J = 0.0;
  /// max(0, I(t0) - I(t) - K_cal e^{-sqrt(c0) x0/4}) over pairs, same for J.
  double excess_I = 0.0;
  double excess_J = 0.0;
  int pairs = 0;
};

/// Monotonicity audit on stored snapshots. `rho_lab(t)` returns the
/// soliton position in lab coordinates. Throws PreconditionError if an anchor
/// t0 has no snapshot.
MonotonicityReport monotonicity_audit(const Spectral& sp, const DiagnosticsSeries& series, const Nonlinearity& nl,
                                      const MonotonicityAnchors& anchors, double c0,
                                      const std::function<double(double)>& rho_lab, double K_cal);

}  // namespace gkdv
