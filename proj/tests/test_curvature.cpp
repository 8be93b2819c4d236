#include <doctest.h>

#include "higgs/mutation.hpp"
#include "higgs/wp_curvature.hpp"
#include "test_support.hpp"

using namespace higgs;

namespace {

const TorusGrid kGrid(16, cplx(0.1, 1.1), 1.0);

BundleConfig with_central_phi(BundleConfig b, cplx c) {
  b.phi = central_one_form(b.grid(), b.rank(), c, Part::p10);
  return b;
}

struct MutationScope {
  explicit MutationScope(Mutation m) { set_mutation(m); }
  ~MutationScope() { set_mutation(Mutation::none); }
};

}  // namespace

TEST_CASE("abelian family has flat WP metric") {
  FamilyChart fam = family_abelian(kGrid);
  const WpCurvature w = wp_curvature_formula(fam, SVec::Zero(2));
  CHECK(w.tensor.max_abs() <= 1e-8);
  CHECK(w.bracket_term_structural_zero);
}

TEST_CASE("curvature tensor has the Kaehler symmetries") {
  FamilyChart fam = family_synthetic(TorusGrid(12, cplx(0.1, 1.1), 1.0));
  const WpCurvature w = wp_curvature_formula(fam, SVec::Zero(2));
  CHECK(w.tensor.max_abs() > 1e-3);
  CHECK(w.symmetry_residual < 1e-10);
  for (double v : wp_sectional_values(w)) CHECK(v >= -1e-10);
}

TEST_CASE("flipping either term of the curvature formula breaks its symmetries") {
  FamilyChart fam = family_synthetic(TorusGrid(12, cplx(0.1, 1.1), 1.0));
  for (Mutation m : {Mutation::eq1_first, Mutation::eq1_second}) {
    MutationScope scope(m);
    CAPTURE(mutation_name(m));
    CHECK(wp_curvature_formula(fam, SVec::Zero(2)).symmetry_residual > 0.1);
  }
}

TEST_CASE("direct image dimensions match the index oracle") {
  for (int N : {12, 16}) {
    const TorusGrid g(N, cplx(0.1, 1.1), 1.0);
    const BundleConfig flat1 = make_bundle(g, 1, 0);
    for (int d = 0; d < 3; ++d) CHECK(dimage_basis(flat1, d).dim() == (d == 1 ? 2u : 1u));
    CHECK(dimage_basis(with_central_phi(flat1, cplx(0.7, 0.2)), 0).dim() == 0u);
    const BundleConfig st = make_bundle(g, 2, 1);
    CHECK(dimage_basis(st, 0).dim() == 1u);
    CHECK(dimage_basis(with_central_phi(st, cplx(0.7, 0.2)), 0).dim() == 0u);
  }
}

TEST_CASE("trace coefficients equal the central part of R") {
  FamilyOptions opts;
  opts.log_scale = [](const SVec& s) { return 0.3 * s.squaredNorm(); };
  FamilyChart fam = family_direct_image(kGrid, {}, opts);
  const Eigen::MatrixXcd c = trace_term_coefficients(fam, SVec::Zero(1));
  CHECK(c(0, 0).real() == doctest::Approx(-0.3).epsilon(1e-3));
}

TEST_CASE("degree zero direct image curvature matches the Chern scalar") {
  FamilyOptions opts;
  opts.log_scale = [](const SVec& s) { return 0.3 * s.squaredNorm(); };
  FamilyChart fam = family_direct_image(kGrid, {}, opts);
  const DimageCurvature dc = dimage_curvature(fam, SVec::Zero(1), 0);
  CHECK(dc.dimension == 1);
  CHECK(dc.adjoint_term_structural_zero);
  CHECK(dc.adjoint_term.max_abs() == 0.0);
  CHECK(dc.ricci_residual < 1e-3);
  CHECK(dc.symmetry_residual < 1e-6);
  const ChernScalar cs = chern_scalar_check(fam, SVec::Zero(1), 0, 1e-3);
  CHECK(cs.relative_gap < 0.05);
  for (Mutation m : {Mutation::thm33_trace, Mutation::thm33_wedge}) {
    MutationScope scope(m);
    CAPTURE(mutation_name(m));
    CHECK(chern_scalar_check(fam, SVec::Zero(1), 0, 1e-3).relative_gap > 0.2);
  }
}

TEST_CASE("chern scalar check is restricted to degree zero") {
  FamilyChart fam = family_direct_image(TorusGrid(8, cplx(0.1, 1.1), 1.0));
  CHECK_THROWS_AS(chern_scalar_check(fam, SVec::Zero(1), 1, 1e-3), std::invalid_argument);
}

TEST_CASE("recovery template vanishes on the abelian family") {
  FamilyChart fam = family_abelian(kGrid);
  const RecoveryCheck rc = recover_bs_check(fam, SVec::Zero(2));
  CHECK(rc.template_tensor.max_abs() <= 1e-10);
  CHECK(rc.formula_tensor.max_abs() <= 1e-10);
  for (double a : rc.principal_angles) CHECK(a < 1e-6);
}

TEST_CASE("curvature report round trips to JSON") {
  FamilyChart fam = family_abelian(TorusGrid(8, cplx(0.1, 1.1), 1.0));
  CurvatureReport rep;
  rep.family = fam.name();
  rep.grid_n = 8;
  rep.wp_metric = wp_metric(fam, SVec::Zero(2));
  rep.wp_curvature = wp_curvature_formula(fam, SVec::Zero(2));
  const nlohmann::json j = rep.to_json();
  CHECK(j.at("family") == fam.name());
  CHECK(j.contains("wp_curvature"));
}
