#include "gkdv/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <lapacke.h>

#include "gkdv/errors.hpp"
#include "gkdv/kernels.hpp"

namespace gkdv {

namespace kx = kernels::active;

Field OperatorL::apply(const Field& u) const {
  Field out(u.size());
  kx::apply_schrodinger(u.data(), diag.data(), out.data(), u.size(), grid.h());
  return out;
}

Eigen::SparseMatrix<double> OperatorL::sparse(double shift) const {
  const int n = grid.N;
  const double s = 1.0 / (12.0 * grid.h() * grid.h());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(5 * n));
  const int off[5] = {-2, -1, 0, 1, 2};
  const double w[5] = {s, -16.0 * s, 30.0 * s, -16.0 * s, s};
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < 5; ++m) {
      const double v = w[m] + (m == 2 ? diag[static_cast<std::size_t>(i)] - shift : 0.0);
      trip.emplace_back(i, (i + off[m] + n) % n, v);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

std::vector<double> OperatorL::dense() const {
  const int n = grid.N;
  const double s = 1.0 / (12.0 * grid.h() * grid.h());
  std::vector<double> a(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  const int off[5] = {-2, -1, 0, 1, 2};
  const double w[5] = {s, -16.0 * s, 30.0 * s, -16.0 * s, s};
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < 5; ++m) {
      const int j = (i + off[m] + n) % n;
      a[static_cast<std::size_t>(j) * n + i] += w[m] + (m == 2 ? diag[static_cast<std::size_t>(i)] : 0.0);
    }
  }
  return a;
}

Grid spectral_grid(double c, int N) {
  const double half = std::ceil(27.7 / std::sqrt(c));
  return Grid(2.0 * half, N);
}

OperatorL assemble_operator(const Grid& grid, double c, Field potential) {
  OperatorL op;
  op.grid = grid;
  op.c = c;
  op.potential = std::move(potential);
  op.diag.resize(op.potential.size());
  for (std::size_t i = 0; i < op.diag.size(); ++i) op.diag[i] = c - op.potential[i];
  return op;
}

OperatorL assemble_L(const SolitonProfile& prof, const Grid& grid) {
  if (!(std::exp(-std::sqrt(prof.c()) * 0.5 * grid.L) < 1e-12)) {
    std::ostringstream os;
    os << "assemble_L: domain too small, e^{-sqrt(c) L/2} = " << std::exp(-std::sqrt(prof.c()) * 0.5 * grid.L)
       << " >= 1e-12";
    throw PreconditionError(os.str());
  }
  Field q = prof.sample(grid);
  Field v(q.size());
  kx::poly_eval(prof.nl().df_poly().coefficients(), q.data(), v.data(), q.size());
  return assemble_operator(grid, prof.c(), std::move(v));
}

OperatorL assemble_Ltilde(double c, int p, const Grid& grid) {
  if (p < 2 || !(c > 0.0)) throw PreconditionError("assemble_Ltilde: need p >= 2, c > 0");
  const double shift = 0.25 * c * (p + 1) * (p + 1);
  const double depth = 0.25 * c * (p + 1) * (p + 3);
  Field v(static_cast<std::size_t>(grid.N));
  for (int i = 0; i < grid.N; ++i) {
    const double s = 1.0 / std::cosh(std::sqrt(c) * grid.x(i));
    v[static_cast<std::size_t>(i)] = depth * s * s;
  }
  return assemble_operator(grid, shift, std::move(v));
}

double inner(const Grid& g, const Field& a, const Field& b) { return g.h() * kx::dot(a.data(), b.data(), a.size()); }
double norm(const Grid& g, const Field& a) { return std::sqrt(inner(g, a, a)); }

namespace {

void normalize_pair(const OperatorL& op, EigenPair& e) {
  const double nv = norm(op.grid, e.vector);
  std::size_t imax = 0;
  for (std::size_t i = 0; i < e.vector.size(); ++i) {
    if (std::abs(e.vector[i]) > std::abs(e.vector[imax])) imax = i;
  }
  const double s = (e.vector[imax] < 0 ? -1.0 : 1.0) / nv;
  for (double& x : e.vector) x *= s;
  Field r = op.apply(e.vector);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= e.lambda * e.vector[i];
  e.residual = norm(op.grid, r);
}

std::vector<EigenPair> dense_lowest(const OperatorL& op, int count) {
  const int n = op.grid.N;
  std::vector<double> a = op.dense();
  std::vector<double> w(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) * static_cast<std::size_t>(count));
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, a.data(), n, 0.0, 0.0, 1, count,
                                         LAPACKE_dlamch('S'), &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != count) {
    throw NumericalError("lowest_eigenpairs: dsyevr failed (info " + std::to_string(info) + ")");
  }
  std::vector<EigenPair> out(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    auto& e = out[static_cast<std::size_t>(j)];
    e.lambda = w[static_cast<std::size_t>(j)];
    e.vector.assign(z.begin() + static_cast<std::ptrdiff_t>(j) * n, z.begin() + static_cast<std::ptrdiff_t>(j + 1) * n);
    normalize_pair(op, e);
  }
  return out;
}

// Subspace inverse iteration with Rayleigh-Ritz, shift below the spectrum.
std::vector<EigenPair> subspace_lowest(const OperatorL& op, int count) {
  const int n = op.grid.N;
  const int m = count + 2;
  double sigma = *std::min_element(op.diag.begin(), op.diag.end()) - 1e-3;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(op.sparse(sigma));
  if (lu.info() != Eigen::Success) throw NumericalError("lowest_eigenpairs: factorization failed");
  Eigen::MatrixXd X(n, m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x = op.grid.x(i);
      X(i, j) = std::exp(-0.01 * x * x) * std::cos(0.3 * j * x + 0.5 * j);
    }
  }
  std::vector<EigenPair> out;
  for (int it = 0; it < 500; ++it) {
    Eigen::MatrixXd Y = lu.solve(X);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    Eigen::MatrixXd Qm = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
    Eigen::MatrixXd AQ(n, m);
    for (int j = 0; j < m; ++j) {
      Field col(Qm.col(j).data(), Qm.col(j).data() + n);
      Field r = op.apply(col);
      AQ.col(j) = Eigen::Map<Eigen::VectorXd>(r.data(), n);
    }
    Eigen::MatrixXd H = Qm.transpose() * AQ;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
    X = Qm * es.eigenvectors();
    out.clear();
    double worst = 0.0;
    for (int j = 0; j < count; ++j) {
      EigenPair e;
      e.lambda = es.eigenvalues()[j];
      e.vector.assign(X.col(j).data(), X.col(j).data() + n);
      normalize_pair(op, e);
      worst = std::max(worst, e.residual);
      out.push_back(std::move(e));
    }
    if (worst < 1e-10) return out;
  }
  throw NumericalError("lowest_eigenpairs: subspace iteration did not converge");
}

}  // namespace

std::vector<EigenPair> lowest_eigenpairs(const OperatorL& op, int count) {
  if (count < 1 || count > op.grid.N) throw PreconditionError("lowest_eigenpairs: bad count");
  if (op.grid.N <= 4096) return dense_lowest(op, count);
  return subspace_lowest(op, count);
}

namespace {

void require_no_sign_change(const EigenPair& e) {
  double peak = 0.0;
  for (double v : e.vector) peak = std::max(peak, std::abs(v));
  for (double v : e.vector) {
    if (v < -1e-8 * peak) throw NumericalError("ground_state: eigenvector changes sign");
  }
}

}  // namespace

EigenPair ground_state_inverse(const OperatorL& op, const Field& seed) {
  const int n = op.grid.N;
  Field v = seed;
  double nv = norm(op.grid, v);
  if (!(nv > 0.0)) throw PreconditionError("ground_state_inverse: zero seed");
  for (double& x : v) x /= nv;
  const Field Lv = op.apply(v);
  const double rq = inner(op.grid, Lv, v);
  const double sigma = rq - 1e-2 * std::max(1.0, std::abs(rq));
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(op.sparse(sigma));
  if (lu.info() != Eigen::Success) throw NumericalError("ground_state_inverse: factorization failed");
  EigenPair e;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd y = lu.solve(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
    v.assign(y.data(), y.data() + n);
    nv = norm(op.grid, v);
    for (double& x : v) x /= nv;
    const Field Lw = op.apply(v);
    e.lambda = inner(op.grid, Lw, v);
    e.vector = v;
    normalize_pair(op, e);
    v = e.vector;
    if (e.residual < 1e-11) break;
  }
  if (!(e.residual < 1e-8)) throw NumericalError("ground_state_inverse: no convergence");
  require_no_sign_change(e);
  return e;
}

EigenPair ground_state(const OperatorL& op, const Field& seed) {
  EigenPair e;
  // Dense solves cost O(N^3); the simple ground state converges fast under
  // shifted inverse iteration.
  if (op.grid.N <= 2048) {
    e = dense_lowest(op, 1).front();
  } else {
    Field s = seed;
    if (s.empty()) {
      s.resize(static_cast<std::size_t>(op.grid.N));
      double vmax = *std::max_element(op.potential.begin(), op.potential.end());
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::max(op.potential[i], 1e-300 * vmax);
    }
    e = ground_state_inverse(op, s);
  }
  require_no_sign_change(e);
  return e;
}

double cutoff_phi(double t) {
  t = std::abs(t);
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  const double s = t - 1.0;
  return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double cutoff_phi_d1(double t) {
  const double a = std::abs(t);
  if (a <= 1.0 || a >= 2.0) return 0.0;
  const double s = a - 1.0;
  const double d = -30.0 * s * s * (s - 1.0) * (s - 1.0);
  return t < 0 ? -d : d;
}

double cutoff_phi_d2(double t) {
  const double a = std::abs(t);
  if (a <= 1.0 || a >= 2.0) return 0.0;
  const double s = a - 1.0;
  return -60.0 * s * (2.0 * s - 1.0) * (s - 1.0);
}

TruncatedChi truncate_chi(const OperatorL& op, const EigenPair& ground, const Field& Q, double B) {
  if (!(B > 0.0)) throw PreconditionError("truncate_chi: B must be positive");
  TruncatedChi t;
  t.lambda0 = -ground.lambda;
  t.chi.resize(ground.vector.size());
  for (int i = 0; i < op.grid.N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    t.chi[k] = ground.vector[k] * cutoff_phi(op.grid.x(i) / B);
  }
  t.chi_Q = inner(op.grid, t.chi, Q);
  t.quotient = -inner(op.grid, op.apply(t.chi), t.chi) / inner(op.grid, t.chi, t.chi);
  const double slack = 1e-12 * t.lambda0;
  t.truncation_ok = t.chi_Q > 0.0 && t.quotient >= 0.5 * t.lambda0 && t.quotient <= t.lambda0 + slack;
  return t;
}

void require_truncation_ok(const TruncatedChi& t, double B) {
  if (t.truncation_ok) return;
  std::ostringstream os;
  os << "truncate_chi: (B = " << B << ") int chi Q = " << t.chi_Q << ", Rayleigh quotient " << t.quotient
     << " outside [" << 0.5 * t.lambda0 << ", " << t.lambda0 << "]; B too small";
  throw NumericalError(os.str());
}

double default_B(double c) { return std::ceil(std::log(1e4) / std::sqrt(c)); }

Coercivity constrained_coercivity(const OperatorL& op, const std::vector<Field>& constraints, bool require_positive) {
  const int n = op.grid.N;
  std::vector<double> a = op.dense();
  Eigen::Map<Eigen::MatrixXd> A(a.data(), n, n);
  // Orthonormal basis of the constraint span (modified Gram-Schmidt).
  std::vector<Eigen::VectorXd> basis;
  for (const auto& cst : constraints) {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(cst.data(), n);
    const double n0 = v.norm();
    for (const auto& b : basis) v -= b.dot(v) * b;
    for (const auto& b : basis) v -= b.dot(v) * b;
    if (v.norm() > 1e-10 * n0) basis.push_back(v / v.norm());
  }
  if (!basis.empty()) {
    const int k = static_cast<int>(basis.size());
    Eigen::MatrixXd U(n, k);
    for (int j = 0; j < k; ++j) U.col(j) = basis[static_cast<std::size_t>(j)];
    const double h = op.grid.h();
    const double sigma = 64.0 / (12.0 * h * h) + A.diagonal().cwiseAbs().maxCoeff();
    const Eigen::MatrixXd AU = A * U;
    const Eigen::MatrixXd UAU = U.transpose() * AU;
    A -= U * AU.transpose() + AU * U.transpose();
    A += U * (UAU + sigma * Eigen::MatrixXd::Identity(k, k)) * U.transpose();
    A = 0.5 * (A + A.transpose()).eval();
  }
  std::vector<double> w(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n));
  std::vector<lapack_int> support(2);
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, a.data(), n, 0.0, 0.0, 1, 1,
                                         LAPACKE_dlamch('S'), &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != 1) throw NumericalError("constrained_coercivity: dsyevr failed");
  Coercivity out;
  out.lambda1 = w[0];
  out.minimizer = z;
  const double nz = norm(op.grid, out.minimizer);
  for (double& x : out.minimizer) x /= nz;
  if (require_positive && !(out.lambda1 > 0.0)) {
    std::size_t imax = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (std::abs(z[i]) > std::abs(z[imax])) imax = i;
    }
    std::ostringstream os;
    os << "constrained_coercivity: lambda1 = " << out.lambda1 << " <= 0; minimizer peaks at x = "
       << op.grid.x(static_cast<int>(imax));
    throw NumericalError(os.str());
  }
  return out;
}

WeightMu mu_weight(const SolitonProfile& prof, const Grid& grid) { return mu_weight(prof, grid, 0.0, true); }

WeightMu mu_weight(const SolitonProfile& prof, const Grid& grid, double center, bool periodic) {
  WeightMu m;
  const auto n = static_cast<std::size_t>(grid.N);
  m.Q.resize(n);
  m.mu.resize(n);
  m.mu_prime.resize(n);
  for (int i = 0; i < grid.N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double x = periodic ? grid.wrap(grid.x(i) - center) : grid.x(i) - center;
    m.Q[k] = prof.Q(x);
    m.mu[k] = prof.mu(x);
    m.mu_prime[k] = prof.mu_prime(x);
    if (m.Q[k] > 0.0 && !(m.mu_prime[k] > 0.0)) {
      std::ostringstream os;
      os << "mu_weight: mu' = " << m.mu_prime[k] << " <= 0 at x = " << x << " (c = " << prof.c()
         << " is not below c*)";
      throw NumericalError(os.str());
    }
  }
  return m;
}

double virial_form(const OperatorL& op, const Field& w, const WeightMu& mu) {
  const std::size_t n = w.size();
  const double h = op.grid.h();
  Field wx(n), wm(n);
  kx::fd4_first(w.data(), wx.data(), n, h);
  for (std::size_t i = 0; i < n; ++i) wm[i] = w[i] * mu.mu[i];
  const Field Lwm = op.apply(wm);
  return -h * kx::dot(wx.data(), Lwm.data(), n);
}

VirialSides virial_identity_check(const OperatorL& op, const Field& w, const WeightMu& mu) {
  const std::size_t n = w.size();
  const double h = op.grid.h();
  constexpr double kFloor = 1e-10;
  double wmax = 0.0;
  for (double v : w) wmax = std::max(wmax, std::abs(v));
  for (std::size_t i = 0; i < n; ++i) {
    if (mu.Q[i] <= kFloor && std::abs(w[i]) > 1e-8 * wmax) {
      std::ostringstream os;
      os << "virial_identity_check: w = " << w[i] << " where Q <= 1e-10 (x = " << op.grid.x(static_cast<int>(i))
         << ")";
      throw PreconditionError(os.str());
    }
  }
  VirialSides s;
  s.lhs = virial_form(op, w, mu);
  Field z(n, 0.0), zx(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (mu.Q[i] > kFloor) z[i] = w[i] / mu.Q[i];
  }
  kx::fd4_first(z.data(), zx.data(), n, h);
  Field integrand(n, 0.0);
  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t i = 0; i < nn; ++i) {
    bool inside = true;
    for (std::ptrdiff_t o = -2; o <= 2; ++o) inside = inside && mu.Q[static_cast<std::size_t>((i + o + nn) % nn)] > kFloor;
    if (!inside) continue;
    const auto k = static_cast<std::size_t>(i);
    integrand[k] = zx[k] * zx[k] * mu.Q[k] * mu.Q[k] * mu.mu_prime[k];
  }
  double acc = 0.0;
  for (double v : integrand) acc += v;
  s.rhs = 1.5 * h * acc;
  return s;
}

namespace {

bool positive_definite(Eigen::MatrixXd K) {
  const lapack_int m = static_cast<lapack_int>(K.rows());
  return LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', m, K.data(), m) == 0;
}

}  // namespace

Lambda2 measure_lambda2(const OperatorL& op, const WeightMu& mu, const Field& chi, int p, double R) {
  const Grid& g = op.grid;
  const double h = g.h();
  const double sc = std::sqrt(op.c);
  Lambda2 out;
  out.R = R;
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  double qmax = *std::max_element(mu.Q.begin(), mu.Q.end());
  for (int i = 0; i < g.N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (mu.Q[k] <= 1e-12 * qmax) continue;
    const double r = mu.mu_prime[k] * std::pow(std::cosh(sc * g.x(i)), p - 1);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  out.envelope = std::min(rmin, 1.0 / rmax);

  // Resolved subspace: sine modes on [-R, R] with k h <= 1/2. On raw grid
  // vectors the 4th-order first difference annihilates the sawtooth mode, so
  // the discrete form has spurious null directions that no lambda survives.
  const double kmax = 0.5 / h;
  const int m = std::max(1, static_cast<int>(std::floor(2.0 * R * kmax / std::numbers::pi)));
  const std::size_t n = static_cast<std::size_t>(g.N);
  Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(g.N, m);
  for (int i = 0; i < g.N; ++i) {
    const double x = g.x(i);
    if (std::abs(x) > R) continue;
    for (int j = 0; j < m; ++j) Phi(i, j) = std::sin((j + 1) * std::numbers::pi * (x + R) / (2.0 * R));
  }
  // B(a, b) = -h (D1 a) . L(mu b) = h a . D1 L(mu b), D1 antisymmetric.
  Eigen::MatrixXd G(g.N, m);
  {
    Field e(n), Le(n), d1(n);
    for (int j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) e[i] = mu.mu[i] * Phi(static_cast<Eigen::Index>(i), j);
      Le = op.apply(e);
      kx::fd4_first(Le.data(), d1.data(), n, h);
      for (std::size_t i = 0; i < n; ++i) G(static_cast<Eigen::Index>(i), j) = h * d1[i];
    }
  }
  Eigen::MatrixXd F = Phi.transpose() * G;
  F = 0.5 * (F + F.transpose()).eval();
  Eigen::VectorXd mp(g.N), ch(g.N);
  for (int i = 0; i < g.N; ++i) {
    mp[i] = h * mu.mu_prime[static_cast<std::size_t>(i)];
    ch[i] = h * chi[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd Mm = Phi.transpose() * mp.asDiagonal() * Phi;
  const Eigen::VectorXd b = Phi.transpose() * ch;
  auto ok = [&](double lam) {
    Eigen::MatrixXd K = F;
    K -= lam * Mm;
    K += (1.0 / lam) * b * b.transpose();
    return positive_definite(K);
  };
  double lo = 0.0, hi = std::max(1.0, 2.0 * out.envelope);
  while (ok(hi) && hi < 1e6) {
    lo = hi;
    hi *= 2.0;
  }
  if (lo == 0.0 && !ok(1e-8)) {
    out.form = 0.0;
  } else {
    if (lo == 0.0) lo = 1e-8;
    for (int it = 0; it < 60 && hi - lo > 1e-7 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    out.form = lo;
  }
  out.value = std::min(out.envelope, out.form);
  return out;
}

VirialBound virial_lower_bound(const OperatorL& op, const WeightMu& mu, const Field& chi, const Field& w,
                               double lambda2) {
  VirialBound vb;
  vb.form = virial_form(op, w, mu);
  const double h = op.grid.h();
  const double wmw = h * kx::dot3(w.data(), w.data(), mu.mu_prime.data(), w.size());
  const double wchi = h * kx::dot(w.data(), chi.data(), w.size());
  vb.bound = lambda2 * wmw - wchi * wchi / lambda2;
  return vb;
}

}  // namespace gkdv
