#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "gkdv/grid.hpp"
#include "gkdv/nonlinearity.hpp"

namespace gkdv {

enum class ProfileOrder { Q, Qx };

struct ProfileOptions {
  int core_panels = 1024;   // tau-uniform panels between s0 and s0/2
  int tail_panels = 7168;   // log-uniform panels between s0/2 and the match value
  double match_fraction = 1e-6;
};

/// Q_c built from the first integral x(Q) = int_Q^s0 ds / sqrt(c s^2 - 2F(s)).
/// Immutable after construction.
class SolitonProfile {
 public:
  static SolitonProfile build(const Nonlinearity& nl, double c, const ProfileOptions& opt = {});

  double c() const { return c_; }
  double s0() const { return s0_; }
  const Nonlinearity& nl() const { return nl_; }

  double eval(double x, ProfileOrder order) const;
  double Q(double x) const { return eval(x, ProfileOrder::Q); }
  double Qx(double x) const { return eval(x, ProfileOrder::Qx); }
  /// From the ODE: Q'' = cQ - f(Q).
  double Qxx(double x) const;
  /// mu = -Q'/Q and mu' = (Q f(Q) - 2F(Q))/Q^2, both through polynomials in Q.
  double mu(double x) const;
  double mu_prime(double x) const;

  double match_point() const { return x_match_; }
  double tail_amplitude() const { return tail_amp_; }
  /// Relative disagreement between the table slope and -sqrt(c) Q at the match point.
  double tail_slope_mismatch() const { return slope_mismatch_; }
  /// Worst per-panel quadrature error estimate (panel vs. its two halves).
  double quadrature_error() const { return quad_err_; }
  std::size_t table_size() const { return xs_.size(); }

  /// Q(x - center) on the grid, nearest periodic image.
  Field sample(const Grid& g, double center = 0.0, ProfileOrder order = ProfileOrder::Q) const;

  /// Two-column CSV (x, Q) on [-x_max, x_max].
  void write_csv(std::ostream& os, double x_max, int points) const;

 private:
  SolitonProfile(Nonlinearity nl) : nl_(std::move(nl)) {}
  double interpolate(double x, ProfileOrder order) const;

  Nonlinearity nl_;
  double c_ = 0.0, s0_ = 0.0, sqrt_c_ = 0.0;
  double x_match_ = 0.0, tail_amp_ = 0.0, slope_mismatch_ = 0.0, quad_err_ = 0.0;
  // Nodes on x >= 0: position and Q, Q', Q'', Q'''.
  std::vector<double> xs_, q0_, q1_, q2_, q3_;
  Polynomial F_over_s2_, g_over_s2_;
};

struct DecayBounds {
  double K_lower;  // min of Q(x) e^{sqrt(c) x}
  double K_upper;  // max of the same
};

/// Samples Q(x) e^{sqrt(c) x} on [0, x_max].
DecayBounds verify_decay(const SolitonProfile& prof, double x_max, int samples = 4001);

/// S_c = dQ_c/dc on the grid: solves L_c S = -Q_c with S orthogonal to Q_c'
/// (bordered system, 4th-order stencil). Throws NumericalError if the
/// residual ||L S + Q|| / ||Q|| exceeds 1e-8.
Field dQdc(const SolitonProfile& prof, const Grid& grid, double* residual = nullptr);

}  // namespace gkdv
