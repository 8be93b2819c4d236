#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "higgs/form_field.hpp"

namespace higgs {

enum class Dir : int { u = 0, v = 1 };

// Constant-curvature background of rank r and degree d: central flux f = d/r,
// connection -2 pi i f u dv per component, and 't Hooft transition matrices
// s(u+1, v) = exp(2 pi i f v) P s(u, v), s(u, v+1) = Q s(u, v) with QP = exp(2 pi i f) PQ.
class Background {
 public:
  Background(const TorusGrid& grid, int rank, int degree);

  const TorusGrid& grid() const { return grid_; }
  int rank() const { return rank_; }
  int degree() const { return degree_; }
  double flux() const { return static_cast<double>(degree_) / rank_; }
  const Mat& P() const { return P_; }
  const Mat& Q() const { return Q_; }

  // Constant (1,1) coefficient of the background curvature, F_{z zbar} = pi f / Im tau.
  double curvature_zzbar() const { return kPi * flux() / grid_.tau().imag(); }

  // Link from site x to its forward neighbour in direction dir: phase * W.
  cplx link_phase(Dir d, std::size_t site) const { return phase_[static_cast<int>(d)][site]; }
  // 0: identity, 1: wrap matrix (P for u, Q for v)
  bool link_wraps(Dir d, std::size_t site) const { return wraps_[static_cast<int>(d)][site]; }
  const Mat& wrap_matrix(Dir d) const { return d == Dir::u ? P_ : Q_; }

  // Quasi-periodicity of the Weyl component C^a S^b of an Endomorphism field:
  // x(u+1) = exp(2 pi i theta_u) x(u), x(v+1) = exp(2 pi i theta_v) x(v).
  double weyl_theta_u(int a, int b) const;
  double weyl_theta_v(int a, int b) const;
  const Mat& weyl_basis(int a, int b) const { return weyl_[static_cast<std::size_t>(a * rank_ + b)]; }

 private:
  TorusGrid grid_;
  int rank_;
  int degree_;
  Mat P_, Q_;
  std::vector<cplx> phase_[2];
  std::vector<char> wraps_[2];
  std::vector<Mat> weyl_;
};

using BackgroundPtr = std::shared_ptr<const Background>;

// Covariant lattice stencils acting on one part's coefficient array.
// Endomorphism arrays transform by X -> L X L^dagger, sections by s -> L s.
namespace stencil {

// out(x) = L(x) in(x + e_dir)
void forward(const Background& bg, Coeff c, Dir d, const Eigen::VectorXcd& in, Eigen::VectorXcd& out);
// out(x) = L(x - e_dir)^dagger in(x - e_dir): flat adjoint and inverse of forward
void backward(const Background& bg, Coeff c, Dir d, const Eigen::VectorXcd& in, Eigen::VectorXcd& out);

// Second-order one-sided dbar of the background: c_u D_u + c_v D_v with
// D f = (-3 f + 4 T f - T^2 f) / (2h). Free of the doubled zeros of central differences.
Eigen::VectorXcd dbar(const Background& bg, Coeff c, const Eigen::VectorXcd& in);
// Exact flat adjoint of dbar.
Eigen::VectorXcd dbar_adjoint(const Background& bg, Coeff c, const Eigen::VectorXcd& in);

// Second-order central derivatives used for pointwise curvature of Endomorphism fields.
Eigen::VectorXcd central_dbar(const Background& bg, Coeff c, const Eigen::VectorXcd& in);
Eigen::VectorXcd central_d(const Background& bg, Coeff c, const Eigen::VectorXcd& in);

}  // namespace stencil

// Endomorphism fields decomposed in the Weyl basis B_ab = C^a S^b, each component
// made periodic by removing its boundary phase; used for spectral preconditioning
// and for building smooth fields from Fourier modes.
class WeylFourier {
 public:
  explicit WeylFourier(BackgroundPtr bg);
  ~WeylFourier();
  WeylFourier(const WeylFourier&) = delete;
  WeylFourier& operator=(const WeylFourier&) = delete;

  // Apply a Fourier multiplier m(k_u, k_v) (momenta in radians per cell, shifted
  // by the component's quasi-periodicity) to an Endomorphism coefficient array.
  template <class F>
  Eigen::VectorXcd apply_multiplier(const Eigen::VectorXcd& in, F&& m) const {
    return apply_impl(in, [&](double ku, double kv) { return cplx(m(ku, kv)); });
  }

  // Evaluate sum of modes c * exp(2 pi i ((n_u + theta_u) u + (n_v + theta_v) v)) B_ab.
  struct Mode {
    int a = 0, b = 0, nu = 0, nv = 0;
    cplx c{};
  };
  Eigen::VectorXcd synthesize(const std::vector<Mode>& modes) const;

 private:
  Eigen::VectorXcd apply_impl(const Eigen::VectorXcd& in,
                              const std::function<cplx(double, double)>& m) const;
  BackgroundPtr bg_;
  struct Plan;
  std::unique_ptr<Plan> plan_;
};

}  // namespace higgs
