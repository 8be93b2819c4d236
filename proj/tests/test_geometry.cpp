#include <doctest.h>

#include "test_support.hpp"

using namespace higgs;

TEST_CASE("torus grid basics") {
  const TorusGrid g(16, cplx(0.3, 1.2), 2.0);
  CHECK(g.volume() == doctest::Approx(2.4));
  CHECK(g.index(-1, 16) == g.index(15, 0));
  CHECK(g.g_zzbar() * g.g_inv() == doctest::Approx(1.0));
  CHECK_THROWS(TorusGrid(4, cplx(0, 1), 1.0));
  CHECK_THROWS(TorusGrid(8, cplx(0, -1), 1.0));
}

TEST_CASE("backward transport inverts forward transport") {
  for (auto [r, d] : {std::pair{1, 1}, {2, 1}, {3, 2}, {2, 0}}) {
    const Background bg(TorusGrid(12, cplx(0.1, 1.1), 1.0), r, d);
    for (Coeff c : {Coeff::Endomorphism, Coeff::Section}) {
      FormField shape(bg.grid(), c, r, c == Coeff::Section ? d : 0, 0);
      const FormField f = test::random_field(shape, 7);
      for (Dir dir : {Dir::u, Dir::v}) {
        Eigen::VectorXcd a, b;
        stencil::forward(bg, c, dir, f.data(Part::p00), a);
        stencil::backward(bg, c, dir, a, b);
        CHECK((b - f.data(Part::p00)).norm() < 1e-12 * f.data(Part::p00).norm());
      }
    }
  }
}

TEST_CASE("background curvature integrates to the degree") {
  for (auto [r, d] : {std::pair{1, 1}, {2, 1}, {2, 3}, {3, -1}}) {
    const BundleConfig b = make_bundle(TorusGrid(16, cplx(0.2, 1.0), 1.0), r, d);
    CHECK(first_chern_number(b) == doctest::Approx(d).epsilon(1e-8));
  }
}

TEST_CASE("random bundle keeps its degree and is Higgs") {
  const BundleConfig b = random_bundle(3, TorusGrid(16, cplx(0.2, 1.0), 1.0), 2, 1, 0.5);
  CHECK(first_chern_number(b) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(b.higgs_residual < 1e-8);
  const FormField F = unitary_curvature(b);
  double asym = 0.0;
  for (std::size_t s = 0; s < F.sites(); ++s)
    asym = std::max(asym, (F.mat(Part::p11, s) - F.mat(Part::p11, s).adjoint()).norm());
  CHECK(asym < 1e-12);
}
