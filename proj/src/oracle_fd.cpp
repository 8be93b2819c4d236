#include "higgs/oracle_fd.hpp"

#include <Eigen/Eigenvalues>

#include "higgs/fd.hpp"

namespace higgs {

namespace {

Eigen::MatrixXcd dense_d(const HodgeEngine& eng, int degree) {
  const Eigen::Index n = eng.to_flat(eng.zero(degree)).size();
  const Eigen::Index m = eng.to_flat(eng.zero(degree + 1)).size();
  Eigen::MatrixXcd D(m, n);
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    D.col(j) = eng.to_flat(eng.d(eng.from_flat(e, degree)));
    e[j] = 0.0;
  }
  return D;
}

}  // namespace

DenseHodgeOracle::DenseHodgeOracle(const BundleConfig& b, Coeff coeff, double kernel_rel_threshold)
    : eng_(b, coeff) {
  if (b.grid().n() > max_grid) throw SizeCapExceeded("dense_hodge_oracle: grid larger than 8");
  const Eigen::MatrixXcd d0 = dense_d(eng_, 0), d1 = dense_d(eng_, 1);
  box_[0] = d0.adjoint() * d0;
  box_[1] = d1.adjoint() * d1 + d0 * d0.adjoint();
  box_[2] = d1 * d1.adjoint();
  for (int k = 0; k < 3; ++k) {
    const Eigen::MatrixXcd& A = box_[k];
    herm_[k] = (A - A.adjoint()).norm() / std::max(A.norm(), 1e-300);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (A + A.adjoint()));
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXcd& V = es.eigenvectors();
    min_eig_[k] = lam.minCoeff();
    const double cut = kernel_rel_threshold * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd inv(lam.size()), ker(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      const bool zero = std::abs(lam[i]) <= cut;
      inv[i] = zero ? 0.0 : 1.0 / lam[i];
      ker[i] = zero ? 1.0 : 0.0;
      kernel_dim_[k] += zero ? 1 : 0;
    }
    green_[k] = V * inv.asDiagonal() * V.adjoint();
    proj_[k] = V * ker.asDiagonal() * V.adjoint();
  }
}

DenseHodgeOracle::Result DenseHodgeOracle::apply(const FormField& f) const {
  const int k = f.degree();
  const Eigen::VectorXcd y = eng_.to_flat(f);
  return {eng_.from_flat(box_[k] * y, k), eng_.from_flat(green_[k] * y, k), eng_.from_flat(proj_[k] * y, k)};
}

FdTensor fd_kahler_curvature(const MetricSampler& metric, const SVec& s0, double fd_step) {
  const Eigen::MatrixXcd G = metric(s0);
  const int m = static_cast<int>(G.rows());
  if (G.cols() != m || s0.size() != m) throw std::invalid_argument("fd_kahler_curvature: metric size differs from the parameter dimension");
  const Eigen::MatrixXcd Ginv = G.inverse();
  std::vector<FdValue<Eigen::MatrixXcd>> dk, dl;
  for (int k = 0; k < m; ++k) {
    dk.push_back(fd_wirtinger(metric, s0, k, false, fd_step));
    dl.push_back(fd_wirtinger(metric, s0, k, true, fd_step));
  }
  FdTensor out{Tensor4::cube(m), 0.0};
  const double gi = Ginv.norm();
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) {
      const FdValue<Eigen::MatrixXcd> dd = fd_mixed(metric, s0, k, l, fd_step);
      const Eigen::MatrixXcd R = -dd.value + dk[k].value * Ginv * dl[l].value;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out.value(i, j, k, l) = R(i, j);
      const double err = dd.error + gi * (dk[k].error * dl[l].value.norm() + dl[l].error * dk[k].value.norm());
      out.error = std::max(out.error, err);
    }
  return out;
}

}  // namespace higgs
