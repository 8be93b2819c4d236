#include <doctest.h>

#include "higgs/he_solver.hpp"
#include "test_support.hpp"

using namespace higgs;

TEST_CASE("einstein constant is topological") {
  const TorusGrid g(16, cplx(0.0, 1.0), 1.0);
  CHECK(einstein_constant(make_bundle(g, 1, 0)) == doctest::Approx(0.0));
  CHECK(einstein_constant(make_bundle(g, 2, 1)) == doctest::Approx(kPi).epsilon(1e-12));
  const BundleConfig rb = random_bundle(4, g, 2, 1, 0.5);
  CHECK(einstein_constant(rb) == doctest::Approx(kPi).epsilon(1e-10));
  const TorusGrid g2(16, cplx(0.0, 1.0), 2.0);
  CHECK(einstein_constant(make_bundle(g2, 2, 1)) == doctest::Approx(kPi / 2).epsilon(1e-12));
}

TEST_CASE("constant curvature backgrounds are already Hermitian-Einstein") {
  const BundleConfig b = make_bundle(TorusGrid(16, cplx(0.3, 0.9), 1.0), 1, 2);
  CHECK(he_residual(b) < 1e-12);
  auto [out, trace] = donaldson_flow(b);
  CHECK(trace.steps.empty());
}

TEST_CASE("donaldson flow converges on a rank 2 degree 1 bundle") {
  const BundleConfig b = random_bundle(7, TorusGrid(32, cplx(0.1, 1.0), 1.0), 2, 1, 0.5);
  CHECK(he_residual(b) > 1e-3);
  auto [out, trace] = donaldson_flow(b, {.tol = 1e-8});
  MESSAGE("steps " << trace.steps.size() << " rejected " << trace.rejected);
  CHECK(trace.converged);
  CHECK(he_residual(out) <= 1e-8);
  CHECK(std::abs(einstein_constant(out) - trace.lambda) < 1e-10);
  for (std::size_t i = 1; i < trace.residuals.size(); ++i) CHECK(trace.residuals[i] < trace.residuals[i - 1]);
}

TEST_CASE("simplicity check") {
  const TorusGrid g(16, cplx(0.0, 1.0), 1.0);
  CHECK(check_simple(make_bundle(g, 1, 0)).simple);
  const Simplicity st = check_simple(make_bundle(g, 2, 1));
  CHECK(st.simple);
  CHECK(st.dimension == 1);
  const Simplicity dec = check_simple(make_bundle(g, 2, 0));
  CHECK_FALSE(dec.simple);
}
