#include "gkdv/fourier.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

namespace gkdv {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Spectral::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

Spectral::Spectral(const Grid& grid) : grid_(grid), plans_(std::make_unique<Plans>()) {
  const int n = grid_.N;
  const int m = modes();
  k_.assign(static_cast<std::size_t>(m), 0.0);
  mask_.assign(static_cast<std::size_t>(m), 0.0);
  for (int j = 0; j < m; ++j) {
    k_[static_cast<std::size_t>(j)] = (j == n / 2) ? 0.0 : 2.0 * std::numbers::pi * j / grid_.L;
    mask_[static_cast<std::size_t>(j)] = (3 * j <= n) ? 1.0 : 0.0;
  }
  std::lock_guard<std::mutex> lock(planner_mutex());
  double* in = fftw_alloc_real(static_cast<std::size_t>(n));
  fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(m));
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->r2c = fftw_plan_dft_r2c_1d(n, in, out, flags);
  plans_->c2r = fftw_plan_dft_c2r_1d(n, out, in, flags | FFTW_DESTROY_INPUT);
  fftw_free(in);
  fftw_free(out);
}

Spectral::~Spectral() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plans_->r2c);
  fftw_destroy_plan(plans_->c2r);
}

void Spectral::forward(const double* u, cplx* uhat) const {
  // r2c does not modify its input.
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(u), reinterpret_cast<fftw_complex*>(uhat));
}

void Spectral::backward(const cplx* uhat, double* u) const {
  Spectrum tmp(uhat, uhat + modes());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(tmp.data()), u);
  const double s = 1.0 / grid_.N;
  for (int i = 0; i < grid_.N; ++i) u[i] *= s;
}

Spectrum Spectral::forward(const Field& u) const {
  Spectrum out(static_cast<std::size_t>(modes()));
  forward(u.data(), out.data());
  return out;
}

Field Spectral::backward(const Spectrum& uhat) const {
  Field out(static_cast<std::size_t>(grid_.N));
  backward(uhat.data(), out.data());
  return out;
}

Field Spectral::derivative(const Field& u, int order) const {
  Spectrum uh = forward(u);
  for (std::size_t j = 0; j < uh.size(); ++j) {
    cplx f(1.0, 0.0);
    const cplx ik(0.0, k_[j]);
    for (int r = 0; r < order; ++r) f *= ik;
    uh[j] *= f;
  }
  return backward(uh);
}

Field Spectral::shift(const Field& u, double a) const {
  Spectrum uh = forward(u);
  for (std::size_t j = 0; j < uh.size(); ++j) uh[j] *= std::polar(1.0, -k_[j] * a);
  return backward(uh);
}

}  // namespace gkdv
