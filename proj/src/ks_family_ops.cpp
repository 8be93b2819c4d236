#include <cmath>

#include "higgs/ks_family.hpp"

namespace higgs {

namespace {

FormField metric_field(FamilyChart& fam, const SVec& t) { return fam.fiber(t).h; }

// Pointwise X -> h^{-1} X for an Endomorphism 0-form.
FormField left_hinv(const HermitianMetric& hm, const FormField& x) {
  FormField out = x;
  for (std::size_t s = 0; s < x.sites(); ++s) out.mat(Part::p00, s) = hm.hinv(s) * x.mat(Part::p00, s);
  return out;
}

double h_norm(FamilyChart& fam, const SVec& t, const FormField& f) {
  return std::sqrt(std::max(0.0, global_inner_product(f, f, fam.fiber(t).metric()).real()));
}

double rel(double num, double a, double b, double ref) { return num / std::max({a, b, ref, 1e-300}); }

}  // namespace

HodgeEngine fiber_engine(FamilyChart& fam, const SVec& t, Coeff c) {
  return HodgeEngine(fam.fiber(t), c, fam.options().hodge);
}

FdValue<FormField> connection_form(FamilyChart& fam, const SVec& t, int i) {
  auto dh = fd_wirtinger([&](const SVec& x) { return metric_field(fam, x); }, t, i, false, fam.fd_step());
  const HermitianMetric hm = fam.fiber(t).metric();
  return {left_hinv(hm, dh.value), dh.error / std::max(hm.min_eigenvalue(), 1e-300)};
}

EtaResult eta(FamilyChart& fam, const SVec& t, int i) {
  EtaResult out;
  out.eta = eta_field(fam, t, i);
  out.fd_error = fam.cached_eta(t, i)->fd_error;
  HodgeEngine e = fiber_engine(fam, t);
  const double n = std::max(e.norm(out.eta), 1e-300);
  out.d_residual = e.norm(e.d(out.eta)) / n;
  out.dstar_residual = e.norm(e.d_adjoint(out.eta)) / n;
  return out;
}

FormField eta_field(FamilyChart& fam, const SVec& t, int i) {
  if (const EtaCacheEntry* c = fam.cached_eta(t, i)) return c->eta;
  const BundleConfig& b = fam.fiber(t);
  if (he_residual(b) > 100.0 * fam.options().he_tol)
    throw FiberError("eta: fiber is not Hermitian-Einstein to tolerance");
  const FdValue<FormField> theta = connection_form(fam, t, i);
  FormField ev = fam.d_data(t, i) - dolbeault_d(fam.fiber(t), theta.value);
  fam.store_eta(t, i, {ev, theta.error});
  return ev;
}

FdValue<FormField> mixed_curvature_Rij(FamilyChart& fam, const SVec& t, int i, int j) {
  auto H = [&](const SVec& x) { return metric_field(fam, x); };
  const double step = fam.fd_step();
  const auto dh_i = fd_wirtinger(H, t, i, false, step);
  const auto dhb_j = fd_wirtinger(H, t, j, true, step);
  const auto ddh = fd_mixed(H, t, i, j, step);
  const HermitianMetric hm = fam.fiber(t).metric();
  FormField R = FormField::zeros_like(ddh.value);
  for (std::size_t s = 0; s < R.sites(); ++s) {
    const Mat& hi = hm.hinv(s);
    R.mat(Part::p00, s) = hi * dhb_j.value.mat(Part::p00, s) * hi * dh_i.value.mat(Part::p00, s) -
                          hi * ddh.value.mat(Part::p00, s);
  }
  const double ih = 1.0 / std::max(hm.min_eigenvalue(), 1e-300);
  return {R, ih * (ddh.error + ih * (dh_i.error * fd_norm(dhb_j.value) + dhb_j.error * fd_norm(dh_i.value)))};
}

FdValue<FormField> covariant_s_derivative(FamilyChart& fam, const SVec& t, int i, bool conj, const FieldPath& path) {
  FdValue<FormField> d = fd_wirtinger(path, t, i, conj, fam.fd_step());
  if (!conj) {
    const FdValue<FormField> theta = connection_form(fam, t, i);
    const FormField x = path(t);
    d.value += act(theta.value, x);
    d.error += theta.error * fd_norm(x) * 2.0;
  }
  return d;
}

Eigen::MatrixXcd wp_metric(FamilyChart& fam, const SVec& t) {
  const int m = fam.dim();
  std::vector<FormField> etas;
  for (int i = 0; i < m; ++i) etas.push_back(eta_field(fam, t, i));
  const HermitianMetric hm = fam.fiber(t).metric();
  Eigen::MatrixXcd G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) G(i, j) = global_inner_product(etas[static_cast<std::size_t>(i)],
                                                               etas[static_cast<std::size_t>(j)], hm);
  return 0.5 * (G + G.adjoint());
}

FdValue<double> wp_first_derivative(FamilyChart& fam, const SVec& t0) {
  FdValue<double> out{0.0, 0.0};
  for (int k = 0; k < fam.dim(); ++k) {
    const auto dG = fd_wirtinger([&](const SVec& x) { return Eigen::MatrixXcd(wp_metric(fam, x)); }, t0, k, false,
                                 fam.fd_step());
    out.value = std::max(out.value, dG.value.cwiseAbs().maxCoeff());
    out.error = std::max(out.error, dG.error);
  }
  return out;
}

FamilyChart normal_coordinates(FamilyChart& fam, const SVec& t0) {
  const int m = fam.dim();
  const Eigen::MatrixXcd G = wp_metric(fam, t0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
  if (es.eigenvalues().minCoeff() <= 1e-8 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw FiberError("normal_coordinates: WP metric is degenerate (effective parametrization fails)");
  std::vector<Eigen::MatrixXcd> dG;
  for (int k = 0; k < m; ++k)
    dG.push_back(fd_wirtinger([&](const SVec& x) { return Eigen::MatrixXcd(wp_metric(fam, x)); }, t0, k, false,
                              fam.fd_step())
                     .value);
  // sum_p gamma^p_{ik} G_{p jbar} = -d_k G_{i jbar}
  const Eigen::MatrixXcd GTinv = G.transpose().inverse();
  std::vector<Eigen::MatrixXcd> gamma(static_cast<std::size_t>(m), Eigen::MatrixXcd::Zero(m, m));
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      const Eigen::VectorXcd rhs = -dG[static_cast<std::size_t>(k)].row(i).transpose();
      const Eigen::VectorXcd g = GTinv * rhs;
      for (int p = 0; p < m; ++p) gamma[static_cast<std::size_t>(p)](i, k) = g[p];
    }
  for (auto& gm : gamma) gm = (0.5 * (gm + gm.transpose())).eval();
  return fam.reparametrize({t0, std::move(gamma)});
}

Lemma21Residuals check_lemma21(FamilyChart& fam, const SVec& t) {
  const int m = fam.dim();
  HodgeEngine e = fiber_engine(fam, t);
  const HermitianMetric hm = fam.fiber(t).metric();
  const double vol = fam.grid().volume();
  auto nrm = [&](const FormField& f) { return e.norm(f); };
  auto eta_path = [&](int j) { return FieldPath([&fam, j](const SVec& x) { return eta_field(fam, x, j); }); };
  auto eta_star_path = [&](int j) {
    return FieldPath([&fam, j](const SVec& x) { return star_adjoint(eta_field(fam, x, j), fam.fiber(x).metric()); });
  };

  Lemma21Residuals out;
  auto record = [&](int k, const FormField& lhs, const FormField& rhs, double ref) {
    const double a = nrm(lhs), b = nrm(rhs);
    const double num = nrm(lhs - rhs);
    out.absolute[static_cast<std::size_t>(k)] = std::max(out.absolute[static_cast<std::size_t>(k)], num);
    out.residual[static_cast<std::size_t>(k)] =
        std::max(out.residual[static_cast<std::size_t>(k)], rel(num, a, b, ref));
  };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const FormField ei = eta_field(fam, t, i), ej = eta_field(fam, t, j);
      const double ref = nrm(ei) * nrm(ej) / std::sqrt(vol);
      const FormField nab_i_ej = covariant_s_derivative(fam, t, i, false, eta_path(j)).value;
      const FormField nab_jb_ei = covariant_s_derivative(fam, t, j, true, eta_path(i)).value;
      const FormField nab_ib_ej = covariant_s_derivative(fam, t, i, true, eta_path(j)).value;
      const FdValue<FormField> R = mixed_curvature_Rij(fam, t, i, j);
      // (1) d nabla_i eta_j + [eta_i ^ eta_j] = 0
      record(0, e.d(nab_i_ej), cplx(-1.0) * wedge_bracket(ei, ej), ref);
      // (2) d^dagger nabla_jbar eta_i + eta_j^dagger eta_i = 0
      record(1, e.d_adjoint(nab_jb_ei), cplx(-1.0) * wedge_act_adjoint(ej, ei, hm), ref);
      // (3) d^dagger nabla_i eta_j = 0 and d nabla_ibar eta_j = 0
      {
        const double n1 = nrm(e.d_adjoint(nab_i_ej)), n2 = nrm(e.d(nab_ib_ej));
        const double num = std::hypot(n1, n2);
        out.absolute[2] = std::max(out.absolute[2], num);
        out.residual[2] = std::max(out.residual[2], rel(num, nrm(nab_i_ej), nrm(nab_ib_ej), ref));
      }
      // (4) nabla_jbar eta_i = d R_{i jbar}
      record(3, nab_jb_ei, e.d(R.value), ref);
      // (5) nabla_i eta_j^* = -d^{*h} R_{i jbar}, with d^{*h} X = -(d X^*)^*
      const FormField lhs5 = covariant_s_derivative(fam, t, i, false, eta_star_path(j)).value;
      const FormField rhs5 = star_adjoint(e.d(star_adjoint(R.value, hm)), hm);
      record(4, lhs5, rhs5, ref);
    }
  return out;
}

std::pair<double, double> check_rel_harmonic(FamilyChart& fam, const SVec& t, const SVec& xi) {
  HodgeEngine e = fiber_engine(fam, t);
  const HermitianMetric hm = fam.fiber(t).metric();
  FormField H = e.zero(1);
  for (int i = 0; i < fam.dim(); ++i) H.axpy(xi[i], eta_field(fam, t, i));
  const FormField Y = e.green(wedge_act_adjoint(H, H, hm));
  const FormField Z = wedge_bracket(H, Y);
  const double n3 = std::pow(std::max(e.norm(H), 1e-300), 3);
  return {e.norm(e.d(Z)) / n3, e.norm(e.d_adjoint(Z)) / n3};
}

}  // namespace higgs
