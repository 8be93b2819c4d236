#include <doctest.h>

#include "higgs/oracle_fd.hpp"
#include "test_support.hpp"

using namespace higgs;

TEST_CASE("dense oracle agrees with the iterative Hodge engine") {
  const BundleConfig b = random_bundle(3, TorusGrid(8, cplx(0.2, 0.95), 1.0), 2, 1, 0.5);
  const DenseHodgeOracle dense(b, Coeff::Endomorphism);
  HodgeEngine eng(b, Coeff::Endomorphism);
  for (int k = 0; k < 3; ++k) {
    CAPTURE(k);
    CHECK(dense.min_eigenvalue(k) >= -1e-12);
    CHECK(dense.hermitian_residual(k) < 1e-12);
    CHECK(static_cast<std::size_t>(dense.kernel_dim(k)) == eng.harmonic_basis(k).dim());
    const FormField f = test::random_field(eng.zero(k), 40 + k);
    const DenseHodgeOracle::Result r = dense.apply(f);
    const double n = eng.norm(f);
    CHECK(eng.norm(eng.laplacian(f) - r.box) <= 1e-8 * eng.norm(r.box));
    CHECK(eng.norm(eng.green(f) - r.green) <= 1e-8 * eng.norm(r.green));
    CHECK(eng.norm(eng.project(f) - r.project) <= 1e-8 * n);
  }
}

TEST_CASE("dense oracle refuses large grids") {
  CHECK_THROWS_AS(DenseHodgeOracle(make_bundle(TorusGrid(12, cplx(0, 1), 1.0), 1, 0), Coeff::Endomorphism),
                  SizeCapExceeded);
}

TEST_CASE("FD Kaehler curvature of constant and analytic profiles") {
  const SVec s0 = SVec::Constant(1, cplx(0.3, -0.2));
  const FdTensor flat = fd_kahler_curvature([](const SVec&) { return Eigen::MatrixXcd::Identity(2, 2); },
                                              SVec::Constant(2, cplx(0.3, -0.2)), 1e-3);
  CHECK(flat.value.max_abs() == 0.0);
  const FdTensor exp_profile = fd_kahler_curvature(
      [](const SVec& s) { return Eigen::MatrixXcd::Constant(1, 1, std::exp(std::norm(s[0]))); }, s0, 1e-3);
  // -dd G + |dG|^2 / G = -G for G = exp(|s|^2)
  CHECK(exp_profile.value(0, 0, 0, 0).real() == doctest::Approx(-std::exp(std::norm(s0[0]))).epsilon(1e-6));
  CHECK(std::abs(exp_profile.value(0, 0, 0, 0).imag()) < 1e-8);
}
