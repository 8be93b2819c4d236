#pragma once

#include <functional>

#include "higgs/hodge.hpp"
#include "higgs/wp_curvature.hpp"

namespace higgs {

class SizeCapExceeded : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Brute-force Hodge theory: d as explicit dense matrices in the engine's flat
// coordinates (where the global inner product is Euclidean), box by products,
// G and P from a full eigendecomposition.
class DenseHodgeOracle {
 public:
  static constexpr int max_grid = 8;
  DenseHodgeOracle(const BundleConfig& b, Coeff coeff, double kernel_rel_threshold = 1e-9);

  struct Result {
    FormField box, green, project;
  };
  Result apply(const FormField& f) const;
  int kernel_dim(int degree) const { return kernel_dim_[degree]; }
  double min_eigenvalue(int degree) const { return min_eig_[degree]; }
  double hermitian_residual(int degree) const { return herm_[degree]; }

 private:
  HodgeEngine eng_;
  std::array<Eigen::MatrixXcd, 3> box_, green_, proj_;
  std::array<int, 3> kernel_dim_{};
  std::array<double, 3> min_eig_{}, herm_{};
};

using MetricSampler = std::function<Eigen::MatrixXcd(const SVec&)>;

struct FdTensor {
  Tensor4 value;  // R_{i jbar k lbar}
  double error = 0.0;  // max step-halving estimate
};
// R_{i jbar k lbar} = -d_k dbar_l G_{i jbar} + G^{qbar p} d_k G_{i qbar} dbar_l G_{p jbar}.
FdTensor fd_kahler_curvature(const MetricSampler& metric, const SVec& s0, double fd_step);

}  // namespace higgs
