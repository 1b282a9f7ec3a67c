#include "gkdv/modulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gkdv/errors.hpp"
#include "gkdv/evolve.hpp"
#include "gkdv/kernels.hpp"

namespace gkdv {

namespace kx = kernels::active;

namespace {

// Trigonometric interpolant of a field on `src` evaluated at the points of
// `dst` (dst centered at 0); zero outside src's box.
Field resample_fourier(const Spectral& src_sp, const Field& u, const Grid& dst) {
  const Grid& src = src_sp.grid();
  const Spectrum uh = src_sp.forward(u);
  const int n = src.N;
  const int m = n / 2;  // Nyquist dropped
  const double dk = 2.0 * std::numbers::pi / src.L;
  Field out = dst.zeros();
  for (int i = 0; i < dst.N; ++i) {
    const double y = dst.x(i);
    if (y < -0.5 * src.L || y >= 0.5 * src.L) continue;
    const double s = y - src.x(0);
    const cplx step = std::polar(1.0, dk * s);
    cplx e(1.0, 0.0);
    double acc = uh[0].real();
    for (int j = 1; j < m; ++j) {
      e *= step;
      if ((j & 63) == 0) e = std::polar(1.0, dk * j * s);
      acc += 2.0 * (uh[static_cast<std::size_t>(j)] * e).real();
    }
    out[static_cast<std::size_t>(i)] = acc / n;
  }
  return out;
}

double dotf(const Field& a, const Field& b) { return kx::dot(a.data(), b.data(), a.size()); }

// Lagrange weights (value and derivative in units of the lattice index) for
// nodes n0-1 .. n0+2 at fractional index t.
void lagrange(double t, long n0, std::array<double, 4>& w, std::array<double, 4>& dw) {
  std::array<double, 4> nodes{};
  for (int k = 0; k < 4; ++k) nodes[static_cast<std::size_t>(k)] = static_cast<double>(n0 - 1 + k);
  for (std::size_t k = 0; k < 4; ++k) {
    double num = 1.0, den = 1.0;
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == k) continue;
      num *= t - nodes[j];
      den *= nodes[k] - nodes[j];
    }
    w[k] = num / den;
    double d = 0.0;
    for (std::size_t l = 0; l < 4; ++l) {
      if (l == k) continue;
      double p = 1.0;
      for (std::size_t j = 0; j < 4; ++j) {
        if (j == k || j == l) continue;
        p *= t - nodes[j];
      }
      d += p;
    }
    dw[k] = d / den;
  }
}

}  // namespace

ModulationCache::ModulationCache(Nonlinearity nl, const Grid& grid, CacheOptions opt)
    : nl_(std::move(nl)), grid_(grid), spectral_(grid), opt_(opt) {
  if (!(opt_.spacing > 0.0)) throw ConfigError("modulation.spacing: must be positive");
  if (!(opt_.alpha0 > 0.0)) throw ConfigError("modulation.alpha0: must be positive");
}

std::size_t ModulationCache::nodes_built() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return nodes_.size();
}

const ModulationCache::Node& ModulationCache::node(long n) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = nodes_.find(n);
    if (it != nodes_.end()) return *it->second;
  }
  auto node = std::make_shared<Node>();
  node->c = static_cast<double>(n) * opt_.spacing;
  if (!(node->c > 0.0) || !soliton_exists(nl_, node->c)) {
    std::ostringstream os;
    os << "modulation: no soliton at lattice speed c = " << node->c;
    throw OutOfTubeError(os.str());
  }
  node->prof = std::make_shared<SolitonProfile>(SolitonProfile::build(nl_, node->c));
  const SolitonProfile& prof = *node->prof;
  node->Q = prof.sample(grid_, 0.0, ProfileOrder::Q);
  node->Qx = prof.sample(grid_, 0.0, ProfileOrder::Qx);

  const Grid sg = spectral_grid(node->c, opt_.spectral_N);
  const OperatorL op = assemble_L(prof, sg);
  const Field Qs = prof.sample(sg);
  Field seed(Qs.size());
  for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = std::pow(Qs[i], 0.5 * (nl_.p() + 1));
  const EigenPair g = ground_state_inverse(op, seed);
  node->lambda0 = -g.lambda;
  node->B = opt_.B > 0.0 ? opt_.B : default_B(node->c);
  const TruncatedChi tc = truncate_chi(op, g, Qs, node->B);
  require_truncation_ok(tc, node->B);

  const Spectral ssp(sg);
  node->chit = resample_fourier(ssp, g.vector, grid_);
  node->chi = resample_fourier(ssp, tc.chi, grid_);
  // L chi on the simulation grid with spectral derivatives.
  const Field chixx = spectral_.derivative(node->chi, 2);
  node->Lchi.resize(node->chi.size());
  for (std::size_t i = 0; i < node->chi.size(); ++i) {
    node->Lchi[i] = -chixx[i] + (node->c - nl_.df(node->Q[i])) * node->chi[i];
  }

  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = nodes_.emplace(n, std::move(node));
  return *it->second;
}

ModulationCache::Stencil ModulationCache::stencil(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw OutOfTubeError("modulation: speed left (0, inf)");
  const double t = c / opt_.spacing;
  // Snap only the stencil choice; the weights use the exact t so Q_c stays
  // smooth in c right at a node.
  const double ts = std::abs(t - std::round(t)) < 1e-9 ? std::round(t) : t;
  const long n0 = static_cast<long>(std::floor(ts));
  Stencil s;
  lagrange(t, n0, s.w, s.dw);
  for (int k = 0; k < 4; ++k) s.nodes[static_cast<std::size_t>(k)] = &node(n0 - 1 + k);
  return s;
}

ModulationCache::Fields ModulationCache::at(double c) const {
  const Stencil st = stencil(c);
  const auto& nd = st.nodes;
  const auto& w = st.w;
  const auto& dw = st.dw;

  Fields f;
  f.c = c;
  const std::size_t n = static_cast<std::size_t>(grid_.N);
  for (Field* x : {&f.Q, &f.Qx, &f.chit, &f.chi, &f.Lchi, &f.dQ, &f.dQx, &f.dchit, &f.dLchi}) x->assign(n, 0.0);
  const double inv = 1.0 / opt_.spacing;
  for (std::size_t k = 0; k < 4; ++k) {
    const Node& a = *nd[k];
    const double wk = w[k], dk = dw[k] * inv;
    f.lambda0 += wk * a.lambda0;
    for (std::size_t i = 0; i < n; ++i) {
      f.Q[i] += wk * a.Q[i];
      f.Qx[i] += wk * a.Qx[i];
      f.chit[i] += wk * a.chit[i];
      f.chi[i] += wk * a.chi[i];
      f.Lchi[i] += wk * a.Lchi[i];
      f.dQ[i] += dk * a.Q[i];
      f.dQx[i] += dk * a.Qx[i];
      f.dchit[i] += dk * a.chit[i];
      f.dLchi[i] += dk * a.Lchi[i];
    }
  }
  return f;
}

ModulationState decompose(const ModulationCache& cache, const Field& u, double c_guess, double rho_guess,
                          ModulationMode mode) {
  const Spectral& sp = cache.spectral();
  const Grid& g = cache.grid();
  const double h = g.h();
  if (u.size() != static_cast<std::size_t>(g.N)) throw PreconditionError("decompose: field size mismatch");
  const std::size_t n = u.size();

  double c = c_guess, rho = rho_guess;
  ModulationCache::Fields F = cache.at(c);
  Field ut = sp.shift(u, -rho);
  Field eta(n);
  for (std::size_t i = 0; i < n; ++i) eta[i] = ut[i] - F.Q[i];
  {
    const double dist = h1_norm(sp, eta), scale = h1_norm(sp, F.Q);
    if (!(dist <= cache.options().alpha0 * scale)) {
      std::ostringstream os;
      os << "decompose: out of tube, ||u - Q_guess||_H1 = " << dist << " > " << cache.options().alpha0 << " * "
         << scale;
      throw OutOfTubeError(os.str());
    }
  }

  ModulationState st;
  st.mode = mode;
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  int it = 0;
  double res = 0.0;
  const double unorm = std::sqrt(h * dotf(u, u));
  bool floor_hit = false;
  bool tiny_step = false;
  auto residual = [&](double R1, double R2, const Field& w1) {
    const double ne = std::sqrt(h * dotf(eta, eta));
    const double n1 = std::sqrt(h * dotf(w1, w1)), n2 = std::sqrt(h * dotf(F.Qx, F.Qx));
    // The shift and the c-interpolation each carry about eps log2(N) ||u||
    // of round-off in eta; pairings below that are noise.
    const double fl = 4.0 * std::log2(static_cast<double>(n)) * std::numeric_limits<double>::epsilon() * unorm;
    floor_hit = std::abs(R1) <= fl * n1 && std::abs(R2) <= fl * n2;
    const double floor = ne > 0.0 ? ne : 1.0;
    return std::max(std::abs(R1) / (n1 * floor), std::abs(R2) / (n2 * floor));
  };
  for (;; ++it) {
    const Field& w1 = F.constraint(mode);
    const double R1 = h * dotf(eta, w1);
    const double R2 = h * dotf(eta, F.Qx);
    res = residual(R1, R2, w1);
    if (res <= 1e-12 || floor_hit) break;
    if (res < best * 0.5) {
      best = res;
      stalled = 0;
    } else if (++stalled >= 3 && (res < 1e-9 || tiny_step)) {
      floor_hit = floor_hit || tiny_step;
      break;  // no further progress at round-off level
    }
    if (it >= cache.options().max_iterations) {
      std::ostringstream os;
      os << "decompose: Newton did not converge in " << it << " iterations (residual " << res << "); out of tube";
      throw OutOfTubeError(os.str());
    }
    const Field ux = sp.derivative(ut, 1);
    const Field& dw1 = F.d_constraint(mode);
    const double J11 = h * (dotf(eta, dw1) - dotf(F.dQ, w1));
    const double J12 = h * dotf(ux, w1);
    const double J21 = h * (dotf(eta, F.dQx) - dotf(F.dQ, F.Qx));
    const double J22 = h * dotf(ux, F.Qx);
    const double det = J11 * J22 - J12 * J21;
    if (!(std::abs(det) > 1e-12 * std::abs(J11 * J22))) {
      std::ostringstream os;
      os << "decompose: Jacobian near-singular (det = " << det << ")";
      throw NumericalError(os.str());
    }
    const double dc = (J22 * R1 - J12 * R2) / det;
    const double drho = (J11 * R2 - J21 * R1) / det;
    c -= dc;
    rho -= drho;
    tiny_step = std::abs(dc) <= 64.0 * std::numeric_limits<double>::epsilon() * c &&
                std::abs(drho) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(rho));
    if (!(c > 0.0) || std::abs(c - c_guess) > 0.5 * c_guess || std::abs(rho - rho_guess) > 0.25 * g.L) {
      std::ostringstream os;
      os << "decompose: Newton diverged (c = " << c << ", rho = " << rho << "); out of tube";
      throw OutOfTubeError(os.str());
    }
    F = cache.at(c);
    ut = sp.shift(u, -rho);
    for (std::size_t i = 0; i < n; ++i) eta[i] = ut[i] - F.Q[i];
  }
  st.c = c;
  st.rho = rho;
  st.iterations = it;
  st.newton_residual = res;
  st.roundoff_floor = floor_hit;
  st.eta = sp.shift(eta, rho);
  st.eta_centered = std::move(eta);
  st.fields = std::move(F);
  return st;
}

const Field& dual_v(const ModulationCache& cache, ModulationState& state) {
  const Spectral& sp = cache.spectral();
  const Field& eta = state.eta_centered;
  const Field& Q = state.fields.Q;
  const Field exx = sp.derivative(eta, 2);
  const std::size_t n = eta.size();
  Field qe(n), fqe(n), fq(n);
  for (std::size_t i = 0; i < n; ++i) qe[i] = Q[i] + eta[i];
  const auto coeffs = cache.nl().f_poly().coefficients();
  kx::poly_eval(coeffs, qe.data(), fqe.data(), n);
  kx::poly_eval(coeffs, Q.data(), fq.data(), n);
  state.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) state.v[i] = -exx[i] + state.c * eta[i] - (fqe[i] - fq[i]);
  return state.v;
}

double dual_alpha(const OperatorL& op, const Field& eta, const Field& chi, const Field& Q) {
  const double chiQ = inner(op.grid, chi, Q);
  if (!(chiQ > 0.0)) {
    std::ostringstream os;
    os << "dual_alpha: int chi Q = " << chiQ << " <= 0";
    throw PreconditionError(os.str());
  }
  return -inner(op.grid, eta, op.apply(chi)) / chiQ;
}

DualEstimates check_dual_estimates(const ModulationCache& cache, const ModulationState& state) {
  const double h = cache.grid().h();
  if (state.v.size() != state.eta_centered.size()) throw PreconditionError("check_dual_estimates: v not computed");
  const Field& chi = state.mode == ModulationMode::theorem2 ? state.fields.chi : state.fields.chit;
  DualEstimates d;
  d.eta_l2 = std::sqrt(h * dotf(state.eta_centered, state.eta_centered));
  d.v_l2 = std::sqrt(h * dotf(state.v, state.v));
  const double e2 = d.eta_l2 * d.eta_l2;
  if (e2 > 0.0) {
    d.v_Qx = std::abs(h * dotf(state.v, state.fields.Qx)) / e2;
    d.v_chi = std::abs(h * dotf(state.v, chi)) / e2;
  }
  if (d.v_l2 > 0.0) d.eta_v = d.eta_l2 / d.v_l2;
  return d;
}

double lyapunov_V(const Grid& grid, const Field& v_grid, const WeightMu& mu, double rho, double eps0) {
  double acc = 0.0;
  Field w(v_grid.size());
  for (int i = 0; i < grid.N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    w[k] = mu.mu[k] + eps0 * (grid.x(i) - rho);
  }
  acc = kx::dot3(v_grid.data(), v_grid.data(), w.data(), v_grid.size());
  return -0.5 * grid.h() * acc;
}

double epsilon0(const Nonlinearity& nl, double B, double lambda3, double c_lo, double c_hi, int c_samples,
                int x_samples) {
  if (!(B > 0.0) || !(c_lo > 0.0) || c_hi < c_lo) throw PreconditionError("epsilon0: bad arguments");
  double inf = std::numeric_limits<double>::infinity();
  for (int j = 0; j < c_samples; ++j) {
    const double c = c_samples == 1 ? c_lo : c_lo + (c_hi - c_lo) * j / (c_samples - 1);
    const SolitonProfile prof = SolitonProfile::build(nl, c);
    for (int i = 0; i < x_samples; ++i) inf = std::min(inf, prof.mu_prime(B * i / (x_samples - 1)));
  }
  return 0.5 * lambda3 * lambda3 * inf;
}

WeightMu mu_weight_at(const ModulationCache& cache, double c, double center) {
  const auto st = cache.stencil(c);
  const Grid& g = cache.grid();
  const auto n = static_cast<std::size_t>(g.N);
  WeightMu out;
  out.Q.assign(n, 0.0);
  out.mu.assign(n, 0.0);
  out.mu_prime.assign(n, 0.0);
  for (std::size_t k = 0; k < 4; ++k) {
    const WeightMu m = mu_weight(*st.nodes[k]->prof, g, center, false);
    for (std::size_t i = 0; i < n; ++i) {
      out.Q[i] += st.w[k] * m.Q[i];
      out.mu[i] += st.w[k] * m.mu[i];
      out.mu_prime[i] += st.w[k] * m.mu_prime[i];
    }
  }
  return out;
}

VirialSample virial_sample(const ModulationCache& cache, const ModulationState& state, const WeightMu& mu,
                           double t, double eps0, double B) {
  const Spectral& sp = cache.spectral();
  const Grid& g = cache.grid();
  const double h = g.h();
  if (state.v.size() != state.eta.size()) throw PreconditionError("virial_sample: v not computed");
  const Field v = sp.shift(state.v, state.rho);
  const Field vx = sp.derivative(v, 1);
  const std::size_t n = v.size();
  Field y(n), box(n);
  for (int i = 0; i < g.N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    y[k] = g.x(i) - state.rho;
    box[k] = std::abs(y[k]) < B ? 1.0 : 0.0;
  }
  VirialSample s;
  s.t = t;
  s.W_mu = h * kx::dot3(v.data(), v.data(), mu.mu.data(), n);
  s.W_x = h * kx::dot3(v.data(), v.data(), y.data(), n);
  s.X_mu = h * kx::dot3(v.data(), v.data(), mu.mu_prime.data(), n);
  s.H1sq = h * (dotf(v, v) + dotf(vx, vx));
  s.eta_l2 = std::sqrt(h * dotf(state.eta, state.eta));
  s.local_B = h * kx::dot3(v.data(), v.data(), box.data(), n);
  s.V = -0.5 * (s.W_mu + eps0 * s.W_x);
  return s;
}

std::vector<Rate> centered_rates(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size()) throw PreconditionError("centered_rates: size mismatch");
  std::vector<Rate> out;
  for (std::size_t i = 2; i + 2 < t.size(); ++i) {
    Rate r;
    r.t = t[i];
    r.d1 = (y[i + 1] - y[i - 1]) / (t[i + 1] - t[i - 1]);
    r.d2 = (y[i + 2] - y[i - 2]) / (t[i + 2] - t[i - 2]);
    r.noise = std::abs(r.d1 - r.d2);
    out.push_back(r);
  }
  return out;
}

VirialRateReport virial_rate_check(const std::vector<VirialSample>& s, double lambda3, double eps1) {
  VirialRateReport rep;
  if (s.size() < 5) throw PreconditionError("virial_rate_check: need at least 5 samples");
  std::vector<double> t, wmu, wx, V;
  for (const auto& x : s) {
    t.push_back(x.t);
    wmu.push_back(x.W_mu);
    wx.push_back(x.W_x);
    V.push_back(x.V);
  }
  const auto r1 = centered_rates(t, wmu), r2 = centered_rates(t, wx), rv = centered_rates(t, V);
  double m1 = 0.0, m2 = 0.0, mv = 0.0, n1 = 0.0, n2 = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    m1 = std::max(m1, std::abs(r1[i].d1));
    m2 = std::max(m2, std::abs(r2[i].d1));
    mv = std::max(mv, std::abs(rv[i].d1));
    n1 = std::max(n1, r1[i].noise);
    n2 = std::max(n2, r2[i].noise);
    nv = std::max(nv, rv[i].noise);
  }
  auto ratio = [](double n, double m) { return m > 0.0 ? n / m : 0.0; };
  rep.max_noise_ratio = std::max({ratio(n1, m1), ratio(n2, m2), ratio(nv, mv)});
  rep.cadence_ok = rep.max_noise_ratio <= 0.1;
  rep.lambda3_fit = std::numeric_limits<double>::infinity();
  rep.worst_V_defect = std::numeric_limits<double>::infinity();
  rep.worst_V_defect_raw = std::numeric_limits<double>::infinity();
  rep.worst_vir1 = rep.worst_vir2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r1.size(); ++i) {
    const VirialSample& x = s[i + 2];
    // A >= lam X - Y / lam holds for lam <= (A + sqrt(A^2 + 4 X Y)) / (2 X).
    auto root = [](double A, double X, double Y) {
      if (!(X > 0.0)) return std::numeric_limits<double>::infinity();
      return (A + std::sqrt(A * A + 4.0 * X * Y)) / (2.0 * X);
    };
    const double A1 = -0.5 * r1[i].d1, A2 = -0.5 * r2[i].d1;
    const double Y1 = x.H1sq * x.eta_l2;
    rep.lambda3_fit = std::min({rep.lambda3_fit, root(A1, x.X_mu, Y1), root(A2, x.H1sq, x.local_B)});
    if (lambda3 > 0.0) {
      rep.worst_vir1 = std::min(rep.worst_vir1, A1 - (lambda3 * x.X_mu - Y1 / lambda3) + 0.5 * r1[i].noise);
      rep.worst_vir2 = std::min(rep.worst_vir2, A2 - (lambda3 * x.H1sq - x.local_B / lambda3) + 0.5 * r2[i].noise);
    }
    const double d = rv[i].d1 - eps1 * x.H1sq;
    rep.worst_V_defect_raw = std::min(rep.worst_V_defect_raw, d);
    rep.worst_V_defect = std::min(rep.worst_V_defect, d + rv[i].noise);
    ++rep.points;
  }
  return rep;
}

MultiModulationState multi_decompose(const ModulationCache& cache, const Field& u,
                                     const std::vector<std::pair<double, double>>& guesses, ModulationMode mode,
                                     double L0) {
  const std::size_t m = guesses.size();
  if (m == 0) throw PreconditionError("multi_decompose: no guesses");
  std::vector<std::size_t> order(m);
  for (std::size_t j = 0; j < m; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return guesses[a].second > guesses[b].second; });
  for (std::size_t j = 0; j + 1 < m; ++j) {
    const double gap = guesses[order[j]].second - guesses[order[j + 1]].second;
    if (!(gap > 0.5 * L0)) {
      std::ostringstream os;
      os << "multi_decompose: separation " << gap << " <= L0/2 = " << 0.5 * L0;
      throw PreconditionError(os.str());
    }
  }
  const Spectral& sp = cache.spectral();
  const std::size_t n = u.size();
  MultiModulationState out;
  out.c.resize(m);
  out.rho.resize(m);
  out.residual.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    out.c[j] = guesses[order[j]].first;
    out.rho[j] = guesses[order[j]].second;
  }
  std::vector<Field> placed(m);
  for (std::size_t j = 0; j < m; ++j) placed[j] = sp.shift(cache.at(out.c[j]).Q, out.rho[j]);

  if (m == 1) {
    const ModulationState st = decompose(cache, u, out.c[0], out.rho[0], mode);
    out.c[0] = st.c;
    out.rho[0] = st.rho;
    out.residual[0] = st.newton_residual;
    out.eta = st.eta;
    out.sweeps = 1;
    return out;
  }
  for (int sweep = 1; sweep <= 50; ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      Field uj = u;
      for (std::size_t k = 0; k < m; ++k) {
        if (k == j) continue;
        for (std::size_t i = 0; i < n; ++i) uj[i] -= placed[k][i];
      }
      const ModulationState st = decompose(cache, uj, out.c[j], out.rho[j], mode);
      change = std::max({change, std::abs(st.c - out.c[j]), std::abs(st.rho - out.rho[j])});
      out.c[j] = st.c;
      out.rho[j] = st.rho;
      out.residual[j] = st.newton_residual;
      placed[j] = sp.shift(st.fields.Q, st.rho);
    }
    out.sweeps = sweep;
    if (change <= 1e-13) break;
  }
  out.eta = u;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < n; ++i) out.eta[i] -= placed[k][i];
  }
  // Report in the caller's order.
  MultiModulationState r = out;
  for (std::size_t j = 0; j < m; ++j) {
    r.c[order[j]] = out.c[j];
    r.rho[order[j]] = out.rho[j];
    r.residual[order[j]] = out.residual[j];
  }
  return r;
}

}  // namespace gkdv
