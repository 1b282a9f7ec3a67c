#pragma once

// Data-parallel inner loops. Every kernel exists twice with identical
// semantics: `serial` is the reference kept for testing, `parallel` is the
// OpenMP version used by the library. Reductions use a fixed block size and a
// fixed combination order, so both variants return bit-identical results.

#include <complex>
#include <cstddef>
#include <span>

namespace gkdv::kernels {

using cplx = std::complex<double>;
inline constexpr std::size_t kReduceBlock = 256;

#define GKDV_KERNEL_DECLS                                                                       \
  /* out[i] = p(in[i]), coefficients ascending */                                               \
  void poly_eval(std::span<const double> coeffs, const double* in, double* out, std::size_t n); \
  /* periodic 4th-order centered second and first differences */                               \
  void fd4_second(const double* u, double* out, std::size_t n, double h);                       \
  void fd4_first(const double* u, double* out, std::size_t n, double h);                        \
  /* out = -u'' + d .* u with the 4th-order stencil */                                          \
  void apply_schrodinger(const double* u, const double* d, double* out, std::size_t n, double h); \
  double sum(const double* a, std::size_t n);                                                    \
  double dot(const double* a, const double* b, std::size_t n);                                   \
  double dot3(const double* a, const double* b, const double* w, std::size_t n);                 \
  /* out = i k in (spectral derivative in transform space) */                                   \
  void mul_ik(const cplx* in, const double* k, cplx* out, std::size_t m);                        \
  /* out = E2 v + Q nv */                                                                        \
  void etd_half(const cplx* e2, const cplx* v, const cplx* q, const cplx* nv, cplx* out, std::size_t m); \
  /* out = E2 a + Q (2 nb - nv) */                                                               \
  void etd_half_c(const cplx* e2, const cplx* a, const cplx* q, const cplx* nb, const cplx* nv, cplx* out, \
                  std::size_t m);                                                                \
  /* v = E v + f1 nv + 2 f2 (na + nb) + f3 nc */                                                 \
  void etd_final(const cplx* e, const cplx* f1, const cplx* f2, const cplx* f3, const cplx* nv, \
                 const cplx* na, const cplx* nb, const cplx* nc, cplx* v, std::size_t m);

namespace serial {
GKDV_KERNEL_DECLS
}
namespace parallel {
GKDV_KERNEL_DECLS
}

#undef GKDV_KERNEL_DECLS

namespace active = parallel;

}  // namespace gkdv::kernels
