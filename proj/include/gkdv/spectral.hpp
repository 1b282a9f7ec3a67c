#pragma once

#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "gkdv/grid.hpp"
#include "gkdv/soliton.hpp"

namespace gkdv {

/// -d^2/dx^2 + diag on a periodic grid, 4th-order centered stencil.
/// For L_c the diagonal is c - f'(Q_c).
struct OperatorL {
  Grid grid;
  double c = 0.0;
  Field potential;  // V(x); diag = c - V
  Field diag;

  Field apply(const Field& u) const;
  Eigen::SparseMatrix<double> sparse(double shift = 0.0) const;
  /// Column-major dense matrix.
  std::vector<double> dense() const;
};

/// Grid used for the spectral computations at speed c: L/2 = ceil(27.7/sqrt(c))
/// so that e^{-sqrt(c) L/2} < 1e-12.
Grid spectral_grid(double c, int N = 2048);

OperatorL assemble_operator(const Grid& grid, double c, Field potential);
/// L_c for the profile. Throws PreconditionError if e^{-sqrt(c) L/2} >= 1e-12.
OperatorL assemble_L(const SolitonProfile& prof, const Grid& grid);
/// -d^2 + (c/4)(p+1)^2 - (c/4)(p+1)(p+3) sech^2(sqrt(c) x).
OperatorL assemble_Ltilde(double c, int p, const Grid& grid);

/// Discrete L^2 inner product h * sum(a b).
double inner(const Grid& g, const Field& a, const Field& b);
double norm(const Grid& g, const Field& a);

struct EigenPair {
  double lambda = 0.0;
  Field vector;  // unit L^2 norm, positive at the peak
  double residual = 0.0;  // ||L v - lambda v||
};

/// The `count` lowest eigenpairs, ascending. Dense symmetric solve (LAPACK
/// dsyevr) for N <= 4096; shifted inverse iteration with deflation above.
std::vector<EigenPair> lowest_eigenpairs(const OperatorL& op, int count);

/// (-lambda0, chi~). Dense for N <= 2048, otherwise inverse iteration seeded
/// with `seed` (defaults to Q^((p+1)/2)-like bump if empty).
EigenPair ground_state(const OperatorL& op, const Field& seed = {});
/// Shifted inverse iteration from `seed`, always sparse.
EigenPair ground_state_inverse(const OperatorL& op, const Field& seed);

/// C^2 cutoff: 1 on [0,1], 0 on [2,inf), quintic smoothstep in between; even.
double cutoff_phi(double t);
double cutoff_phi_d1(double t);
double cutoff_phi_d2(double t);

struct TruncatedChi {
  Field chi;
  double chi_Q = 0.0;     // int chi Q
  double quotient = 0.0;  // -<L chi, chi> / <chi, chi>
  double lambda0 = 0.0;
  bool truncation_ok = false;  // int chi Q > 0 and quotient in [lambda0/2, lambda0]
};

/// chi = chi~ phi(x/B). Does not throw; see require_truncation_ok.
TruncatedChi truncate_chi(const OperatorL& op, const EigenPair& ground, const Field& Q, double B);
/// Throws NumericalError naming the measured quotient when the truncated chi fails its checks.
void require_truncation_ok(const TruncatedChi& t, double B);

/// Default truncation radius: smallest integer B with e^{-sqrt(c) B} <= 1e-4.
double default_B(double c);

struct Coercivity {
  double lambda1 = 0.0;
  Field minimizer;
};

/// Minimum of <Lu,u>/<u,u> over u orthogonal to the constraints (dense).
/// Throws NumericalError with the minimizer's description if lambda1 <= 0
/// and `require_positive` is set.
Coercivity constrained_coercivity(const OperatorL& op, const std::vector<Field>& constraints,
                                  bool require_positive = false);

struct WeightMu {
  Field Q;
  Field mu;
  Field mu_prime;
};

/// mu = -Q'/Q and mu' = (Q f(Q) - 2F(Q))/Q^2 from the polynomial identity.
/// Throws NumericalError if mu' <= 0 where Q > 0.
WeightMu mu_weight(const SolitonProfile& prof, const Grid& grid);
/// Same, centered at `center`; with periodic = false the offset x - center is
/// not wrapped (far-field weights on a long box).
WeightMu mu_weight(const SolitonProfile& prof, const Grid& grid, double center, bool periodic);

struct VirialSides {
  double lhs = 0.0;  // -int w_x L(w mu)
  double rhs = 0.0;  // (3/2) int (z_x)^2 Q^2 mu', z = w/Q
};

/// Both sides of the virial identity with the 4th-order stencils. Throws
/// PreconditionError if w is not negligible where Q <= 1e-10.
VirialSides virial_identity_check(const OperatorL& op, const Field& w, const WeightMu& mu);

/// The quadratic form -int w_x L(w mu) alone.
double virial_form(const OperatorL& op, const Field& w, const WeightMu& mu);

struct Lambda2 {
  double envelope = 0.0;  // min(r, 1/r) for r = mu' cosh^{p-1}(sqrt(c) x) on the resolved range
  double form = 0.0;      // sharp constant of the lower bound on |x| <= R
  double value = 0.0;     // min of the two
  double R = 0.0;
};

/// Measures lambda2. The form constant is the largest lambda with
/// F - lambda M + (1/lambda) b b^T positive definite, where F is the symmetrized
/// virial form, M the mu'-weighted Gram matrix and b = <phi_j, chi>, all taken
/// on sine modes of [-R, R] with k h <= 1/2. Bisection, Cholesky as the test.
Lambda2 measure_lambda2(const OperatorL& op, const WeightMu& mu, const Field& chi, int p, double R);

struct VirialBound {
  double form = 0.0;
  double bound = 0.0;  // lambda2 int w^2 mu' - (1/lambda2) (int w chi)^2
};

VirialBound virial_lower_bound(const OperatorL& op, const WeightMu& mu, const Field& chi, const Field& w,
                               double lambda2);

}  // namespace gkdv
