#include <doctest.h>

#include <random>

#include "higgs/finsler.hpp"
#include "higgs/mutation.hpp"
#include "higgs/wp_curvature.hpp"
#include "test_support.hpp"

using namespace higgs;

namespace {

const TorusGrid kGrid(12, cplx(0.1, 1.1), 1.0);

SVec random_xi(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> nd;
  SVec xi(m);
  for (int k = 0; k < m; ++k) xi[k] = cplx(nd(rng), nd(rng));
  return xi;
}

struct MutationScope {
  explicit MutationScope(Mutation m) { set_mutation(m); }
  ~MutationScope() { set_mutation(Mutation::none); }
};

}  // namespace

TEST_CASE("F_kappa is homogeneous and reduces to F1 at kappa zero") {
  FamilyChart fam = family_synthetic(kGrid);
  const FinslerPoint fp(fam, SVec::Zero(2));
  std::mt19937_64 rng(3);
  for (int r = 0; r < 10; ++r) {
    const SVec xi = random_xi(rng, 2);
    const cplx c = random_xi(rng, 1)[0];
    const FinslerValue v = fp.value(xi, 1.3), w = fp.value(c * xi, 1.3);
    CHECK(std::abs(w.Fk - std::abs(c) * v.Fk) <= 1e-10 * std::max(1.0, w.Fk));
    CHECK(v.F2 > 0.0);
    CHECK(fp.value(xi, 0.0).Fk == doctest::Approx(v.F1).epsilon(1e-14));
  }
}

TEST_CASE("bracket pairing is nonnegative") {
  FamilyChart fam = family_synthetic(kGrid);
  const FinslerPoint fp(fam, SVec::Zero(2));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) CHECK(fp.bracket_pairing(a, b, a, b).real() >= -1e-12);
}

TEST_CASE("Levi matrix matches FD in xi and satisfies the diagonal lower bound") {
  FamilyChart fam = family_synthetic(kGrid);
  const FinslerPoint fp(fam, SVec::Zero(2));
  std::mt19937_64 rng(11);
  for (int r = 0; r < 20; ++r) {
    const SVec xi = random_xi(rng, 2);
    const double kappa = std::pow(10.0, -1.0 + 0.1 * r);
    const Eigen::MatrixXcd L = fp.levi(xi, kappa);
    CHECK((L - L.adjoint()).norm() <= 1e-10 * L.norm());
    CHECK((L - fp.levi_fd(xi, kappa, 1e-3)).norm() <= 1e-4 * L.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(L);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    for (int i = 0; i < 2; ++i) {
      const auto b = fp.diagonal_bound(xi, kappa, i);
      CHECK(b.levi - b.bound >= -1e-10);
      CHECK(b.cs_first >= -1e-10);
      CHECK(b.cs_second >= -1e-10);
    }
  }
}

TEST_CASE("Levi matrix rejects the zero vector") {
  FamilyChart fam = family_abelian(kGrid);
  CHECK_THROWS_AS(levi_matrix(fam, {SVec::Zero(2), SVec::Zero(2)}, 1.0), DegenerateDirection);
}

TEST_CASE("rank one F_kappa has no bracket part") {
  FamilyChart fam = family_abelian(kGrid);
  const FinslerValue v = fkappa(fam, {SVec::Zero(2), SVec::Ones(2)}, 5.0);
  CHECK(v.F2 == 0.0);
  CHECK(v.Fk == doctest::Approx(v.F1));
}

TEST_CASE("closed form terms are finite and ordered on noncommuting input") {
  FamilyChart fam = family_synthetic(kGrid);
  HodgeEngine endo = fiber_engine(fam, SVec::Zero(2));
  for (int i = 0; i < 2; ++i) {
    const Lemma44Closed t = lemma44_closed(endo, eta_field(fam, SVec::Zero(2), i));
    CHECK(std::isfinite(t.A()));
    CHECK(std::isfinite(t.E()));
    CHECK(t.C() >= t.D - 1e-10);
    CHECK(t.bracket > 0.0);
  }
}

TEST_CASE("Theorem assembly agrees with the Lemma term assembly") {
  FamilyChart fam = family_synthetic(kGrid);
  HodgeEngine endo = fiber_engine(fam, SVec::Zero(2));
  const Lemma44Closed t = lemma44_closed(endo, eta_field(fam, SVec::Zero(2), 0));
  for (double kappa : {0.1, 1.0, 10.0}) {
    const double k = finsler_hsc(t, kappa);
    CHECK(k == doctest::Approx(finsler_hsc_from_terms(t, kappa)).epsilon(1e-12));
  }
  for (Mutation m : {Mutation::thm45_leading, Mutation::thm45_x1, Mutation::thm45_z, Mutation::thm45_e}) {
    MutationScope scope(m);
    CAPTURE(mutation_name(m));
    double worst = 0.0;
    for (double kappa : {0.1, 1.0, 10.0})
      worst = std::max(worst, test::rel_diff(finsler_hsc(t, kappa), finsler_hsc_from_terms(t, kappa)));
    CHECK(worst > 1e-3);
  }
}

TEST_CASE("abelian family has zero Finsler curvature on every route") {
  FamilyChart fam = family_abelian(kGrid);
  for (double kappa : {0.0, 1.0}) {
    CHECK(finsler_hsc(fam, SVec::Zero(2), 0, kappa) == 0.0);
    CHECK(std::abs(fd_gauss_oracle(fam, SVec::Zero(2), 0, kappa, 1e-3).value) <= 1e-6);
  }
  const Lemma44Terms l = terms_lemma44(fam, SVec::Zero(2), 0);
  for (int k = 0; k < 5; ++k) {
    CHECK(l.definitional[k] == 0.0);
    CHECK(l.closed_form[k] == 0.0);
  }
}

TEST_CASE("Gauss oracle pullback expansion agrees with the F^4 route") {
  FamilyChart fam = family_stable(kGrid);
  const GaussOracle g = fd_gauss_oracle(fam, SVec::Zero(2), 0, 1.0, 1e-3);
  CHECK(g.pullback_gap < 1e-3);
  CHECK(std::isfinite(g.value));
}
