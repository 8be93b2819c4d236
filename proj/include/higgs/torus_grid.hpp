#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>

namespace higgs {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// Flat torus C/(Z + tau Z) sampled on an N x N grid in lattice coordinates
// z = u + tau v, with Kaehler form omega = scale * (i/2) dz ^ dzbar.
class TorusGrid {
 public:
  TorusGrid(int n, cplx tau, double scale);

  int n() const { return n_; }
  std::size_t sites() const { return static_cast<std::size_t>(n_) * n_; }
  cplx tau() const { return tau_; }
  double scale() const { return scale_; }
  double spacing() const { return 1.0 / n_; }

  double volume() const { return scale_ * tau_.imag(); }
  double cell_weight() const { return volume() / static_cast<double>(sites()); }
  double g_zzbar() const { return 0.5 * scale_; }
  double g_inv() const { return 2.0 / scale_; }

  // Coefficients of dbar = c_u d/du + c_v d/dv and d = conj(c_u) d/du + conj(c_v) d/dv.
  cplx dbar_cu() const { return tau_ / (2.0 * I * tau_.imag()); }
  cplx dbar_cv() const { return -1.0 / (2.0 * I * tau_.imag()); }

  std::size_t index(int p, int q) const {
    return static_cast<std::size_t>(wrap(p)) * n_ + static_cast<std::size_t>(wrap(q));
  }
  int wrap(int p) const { return ((p % n_) + n_) % n_; }
  double u(int p) const { return static_cast<double>(p) / n_; }
  double v(int q) const { return static_cast<double>(q) / n_; }
  cplx z(int p, int q) const { return u(p) + tau_ * v(q); }

  bool operator==(const TorusGrid& o) const {
    return n_ == o.n_ && tau_ == o.tau_ && scale_ == o.scale_;
  }

 private:
  int n_;
  cplx tau_;
  double scale_;
};

TorusGrid build_torus(int n, cplx tau, double scale);

}  // namespace higgs
