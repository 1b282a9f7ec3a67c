#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "gkdv/fourier.hpp"
#include "gkdv/grid.hpp"
#include "gkdv/nonlinearity.hpp"
#include "gkdv/soliton.hpp"
#include "gkdv/spectral.hpp"

namespace gkdv {

/// theorem1: eta orthogonal to chi~_c and Q_c'. theorem2: to L_c chi_c and Q_c'.
enum class ModulationMode { theorem1, theorem2 };

struct CacheOptions {
  double spacing = 1e-3;  // c-lattice step
  double B = 0.0;         // truncation radius for chi; 0 selects default_B(c)
  int spectral_N = 2048;  // eigenproblem grid, box from spectral_grid(c)
  double alpha0 = 0.1;    // tube radius relative to ||Q||_{H^1}
  int max_iterations = 50;
};

/// Profiles and eigenfunctions on a c-lattice, sampled on one simulation grid
/// (centered at x = 0), cubic Lagrange interpolation in c. Nodes are built on
/// first use; lookups are thread-safe.
class ModulationCache {
 public:
  struct Node {
    double c = 0.0;
    double lambda0 = 0.0;
    double B = 0.0;
    std::shared_ptr<const SolitonProfile> prof;
    Field Q, Qx, chit, chi, Lchi;
  };
  /// Interpolated fields at speed c, with their c-derivatives.
  struct Fields {
    double c = 0.0;
    double lambda0 = 0.0;
    Field Q, Qx, chit, chi, Lchi;
    Field dQ, dQx, dchit, dLchi;
    const Field& constraint(ModulationMode m) const { return m == ModulationMode::theorem1 ? chit : Lchi; }
    const Field& d_constraint(ModulationMode m) const { return m == ModulationMode::theorem1 ? dchit : dLchi; }
  };

  ModulationCache(Nonlinearity nl, const Grid& grid, CacheOptions opt = {});

  const Nonlinearity& nl() const { return nl_; }
  const Grid& grid() const { return grid_; }
  const Spectral& spectral() const { return spectral_; }
  const CacheOptions& options() const { return opt_; }

  const Node& node(long n) const;
  Fields at(double c) const;

  /// The four lattice nodes around c with cubic Lagrange weights (value and
  /// d/dc).
  struct Stencil {
    std::array<const Node*, 4> nodes{};
    std::array<double, 4> w{}, dw{};
  };
  Stencil stencil(double c) const;
  std::size_t nodes_built() const;

 private:
  Nonlinearity nl_;
  Grid grid_;
  Spectral spectral_;
  CacheOptions opt_;
  mutable std::mutex mutex_;
  mutable std::map<long, std::shared_ptr<const Node>> nodes_;
};

struct ModulationState {
  double c = 0.0;
  double rho = 0.0;
  ModulationMode mode = ModulationMode::theorem1;
  Field eta;           // u - Q_c(. - rho) in grid coordinates
  Field eta_centered;  // the same, translated so the soliton sits at 0
  Field v;             // dual variable, centered; filled by dual_v
  double newton_residual = 0.0;  // max |int eta w| / (||eta|| ||w||)
  bool roundoff_floor = false;   // stopped at the round-off floor of the pairings
  int iterations = 0;
  ModulationCache::Fields fields;  // interpolated fields at the final c
};

/// Newton on the two orthogonality conditions. Throws OutOfTubeError if u is
/// farther than alpha0 ||Q||_{H^1} from Q_{guess} or the iteration diverges,
/// NumericalError if the Jacobian is near-singular.
ModulationState decompose(const ModulationCache& cache, const Field& u, double c_guess, double rho_guess,
                          ModulationMode mode);

/// v = -eta_xx + c eta - (f(Q + eta) - f(Q)), centered; stored in state.v.
const Field& dual_v(const ModulationCache& cache, ModulationState& state);

/// Linear dual: alpha = -<eta, L chi> / <chi, Q>; PreconditionError if
/// <chi, Q> <= 0.
double dual_alpha(const OperatorL& op, const Field& eta, const Field& chi, const Field& Q);

struct DualEstimates {
  double v_Qx = 0.0;    // |int v Q'| / ||eta||^2
  double v_chi = 0.0;   // |int v chi| / ||eta||^2, chi the mode's function
  double eta_v = 0.0;   // ||eta|| / ||v||
  double eta_l2 = 0.0;
  double v_l2 = 0.0;
};

/// theorem2 pairs v with the truncated chi, theorem1 with chi~ (the function
/// eta is orthogonal to, up to L).
DualEstimates check_dual_estimates(const ModulationCache& cache, const ModulationState& state);

/// -(1/2) int (mu + eps0 y) v^2 with y = x - rho unwrapped; `v_grid` and `mu`
/// in grid coordinates.
double lyapunov_V(const Grid& grid, const Field& v_grid, const WeightMu& mu, double rho, double eps0);

/// (1/2) lambda3^2 inf { mu_c'(x) : |x| < B, c in [c_lo, c_hi] }.
double epsilon0(const Nonlinearity& nl, double B, double lambda3, double c_lo, double c_hi, int c_samples = 9,
                int x_samples = 2001);

/// mu_c(x - center) and mu_c' on the grid, x - center unwrapped, with c
/// interpolated across the cache lattice (smooth in c, unlike the nearest
/// node).
WeightMu mu_weight_at(const ModulationCache& cache, double c, double center);

/// Centered difference of a uniformly sampled series at spacing 1 and 2
/// cadences. `noise` is their disagreement (Richardson estimate scale).
struct Rate {
  double t = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double noise = 0.0;
};
std::vector<Rate> centered_rates(const std::vector<double>& t, const std::vector<double>& y);

struct VirialSample {
  double t = 0.0;
  double W_mu = 0.0;      // int v^2 mu
  double W_x = 0.0;       // int y v^2
  double X_mu = 0.0;      // int v^2 mu'
  double H1sq = 0.0;      // ||v||_{H^1}^2
  double eta_l2 = 0.0;    // ||eta||
  double local_B = 0.0;   // int_{|y| < B} v^2
  double V = 0.0;
};

struct VirialRateReport {
  /// Largest lambda3 compatible with both virial inequalities at every time.
  double lambda3_fit = 0.0;
  /// min over t of (V' - eps1 int (v_x^2 + v^2)) + noise; >= 0 passes.
  double worst_V_defect = 0.0;
  double worst_V_defect_raw = 0.0;
  double max_noise_ratio = 0.0;  // max |d1 - d2| / max |d1| over the three rates
  bool cadence_ok = false;
  /// Defects of both inequalities for the supplied lambda3 (>= 0 passes).
  double worst_vir1 = 0.0;
  double worst_vir2 = 0.0;
  int points = 0;
};

/// Weighted integrals of v for one record. `state` must carry v (dual_v);
/// y = x - rho unwrapped.
VirialSample virial_sample(const ModulationCache& cache, const ModulationState& state, const WeightMu& mu,
                           double t, double eps0, double B);

VirialRateReport virial_rate_check(const std::vector<VirialSample>& samples, double lambda3, double eps1);

struct MultiModulationState {
  std::vector<double> c;
  std::vector<double> rho;
  Field eta;
  std::vector<double> residual;  // per soliton, as ModulationState::newton_residual
  int sweeps = 0;
};

/// Gauss-Seidel over solitons ordered right to left. PreconditionError if two
/// guesses are closer than L0/2.
MultiModulationState multi_decompose(const ModulationCache& cache, const Field& u,
                                     const std::vector<std::pair<double, double>>& guesses, ModulationMode mode,
                                     double L0 = 20.0);

}  // namespace gkdv
