#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "gkdv/grid.hpp"

namespace gkdv {

using cplx = std::complex<double>;
using Spectrum = std::vector<cplx>;

/// Real-to-complex transforms on a Grid (FFTW), plus spectral derivatives.
/// Plans are created once; executing them is thread-safe.
class Spectral {
 public:
  explicit Spectral(const Grid& grid);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  const Grid& grid() const { return grid_; }
  int modes() const { return grid_.N / 2 + 1; }
  /// Angular wavenumbers; the Nyquist entry is 0.
  const std::vector<double>& k() const { return k_; }
  /// 2/3-rule mask (1 kept, 0 removed).
  const std::vector<double>& dealias_mask() const { return mask_; }

  /// Unnormalized forward transform.
  void forward(const double* u, cplx* uhat) const;
  /// Inverse transform including the 1/N factor. `uhat` is not modified.
  void backward(const cplx* uhat, double* u) const;
  Spectrum forward(const Field& u) const;
  Field backward(const Spectrum& uhat) const;

  Field derivative(const Field& u, int order) const;
  /// u(x - a), exact for band-limited data.
  Field shift(const Field& u, double a) const;

 private:
  Grid grid_;
  std::vector<double> k_;
  std::vector<double> mask_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace gkdv
