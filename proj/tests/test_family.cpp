#include <doctest.h>

#include "higgs/ks_family.hpp"
#include "test_support.hpp"

using namespace higgs;

namespace {

const TorusGrid kGrid(16, cplx(0.1, 1.1), 1.0);

}  // namespace

TEST_CASE("abelian family satisfies the structure identities exactly") {
  FamilyChart fam = family_abelian(kGrid);
  const SVec t = SVec::Zero(2);
  const Lemma21Residuals r = check_lemma21(fam, t);
  for (int k = 0; k < 5; ++k) {
    CAPTURE(k);
    CHECK(r.absolute[k] <= 1e-10);
  }
  const Eigen::MatrixXcd G = wp_metric(fam, t);
  CHECK((G - G.adjoint()).norm() < 1e-12);
  CHECK(std::abs(G(0, 1)) < 1e-12);
}

TEST_CASE("stable family identity residuals shrink under refinement") {
  std::array<double, 5> coarse{}, fine{};
  for (int N : {12, 24}) {
    FamilyChart fam = family_stable(TorusGrid(N, cplx(0.1, 1.1), 1.0));
    const Lemma21Residuals r = check_lemma21(fam, SVec::Zero(2));
    (N == 12 ? coarse : fine) = r.absolute;
  }
  for (int k = 0; k < 5; ++k) {
    CAPTURE(k);
    CAPTURE(coarse[k]);
    CAPTURE(fine[k]);
    CHECK((fine[k] < coarse[k] || fine[k] < 1e-9));
  }
}

TEST_CASE("Kodaira-Spencer representatives are closed and converge to coclosed") {
  std::array<double, 2> dstar{};
  for (int n = 0; n < 2; ++n) {
    FamilyChart fam = family_stable(TorusGrid(n == 0 ? 12 : 24, cplx(0.1, 1.1), 1.0));
    const EtaResult e = eta(fam, SVec::Zero(2), 0);
    CHECK(e.d_residual < 1e-6);
    dstar[n] = e.dstar_residual;
  }
  MESSAGE("d^dagger eta residual " << dstar[0] << " -> " << dstar[1]);
  CHECK(dstar[1] < 0.5 * dstar[0]);
}

TEST_CASE("normal coordinates kill the first derivatives of the WP metric") {
  FamilyChart fam = family_stable(kGrid);
  SVec t0(2);
  t0 << cplx(0.05, -0.02), cplx(0.03, 0.01);
  const FdValue<double> before = wp_first_derivative(fam, t0);
  FamilyChart nc = normal_coordinates(fam, t0);
  const FdValue<double> after = wp_first_derivative(nc, SVec::Zero(2));
  CHECK(after.value <= std::max(1e-3 * before.value, 10.0 * after.error));
  CHECK((wp_metric(nc, SVec::Zero(2)) - wp_metric(fam, t0)).norm() < 1e-8);
}

TEST_CASE("rescaling the fiber metrics changes theta by the gradient of the scale") {
  FamilyOptions opts;
  opts.log_scale = [](const SVec& s) { return 0.3 * s.squaredNorm(); };
  FamilyChart scaled = family_direct_image(kGrid, {}, opts);
  FamilyChart plain = family_direct_image(kGrid);
  SVec t(1);
  t << cplx(0.1, 0.05);
  const FormField d = connection_form(scaled, t, 0).value - connection_form(plain, t, 0).value;
  const FormField id = identity_field(kGrid, 2);
  const cplx expected = 0.3 * std::conj(t[0]);
  CHECK((d - expected * id).coeff_norm() < 1e-6 * id.coeff_norm());
}
