#include "higgs/finsler.hpp"

#include <cmath>
#include <stdexcept>

#include "higgs/fd.hpp"
#include "higgs/hodge.hpp"
#include "higgs/mutation.hpp"

namespace higgs {

namespace {

SVec unit(int m, int i) {
  SVec e = SVec::Zero(m);
  e[i] = 1.0;
  return e;
}

std::vector<FormField> etas_at(FamilyChart& fam, const SVec& s) {
  std::vector<FormField> out;
  for (int i = 0; i < fam.dim(); ++i) out.push_back(eta_field(fam, s, i));
  return out;
}

}  // namespace

FinslerPoint::FinslerPoint(HodgeEngine& endo, std::vector<FormField> etas) : etas_(std::move(etas)) {
  const int m = dim();
  gram_.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) gram_(i, j) = endo.inner(etas_[i], etas_[j]);
  gram_ = 0.5 * (gram_ + gram_.adjoint()).eval();

  std::vector<FormField> w, gw;
  std::vector<int> slot(static_cast<std::size_t>(m * m));
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      slot[a * m + b] = slot[b * m + a] = static_cast<int>(w.size());
      w.push_back(wedge_bracket(etas_[a], etas_[b]));
      gw.push_back(endo.green(w.back()));
    }
  pairing_.assign(static_cast<std::size_t>(m) * m * m * m, cplx(0.0));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d)
          pairing_[index(a, b, c, d)] = endo.inner(w[slot[a * m + b]], gw[slot[c * m + d]]);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) {
          const std::size_t p = index(a, b, c, d), q = index(c, d, a, b);
          if (p < q) {
            const cplx v = 0.5 * (pairing_[p] + std::conj(pairing_[q]));
            pairing_[p] = v;
            pairing_[q] = std::conj(v);
          } else if (p == q) {
            pairing_[p] = pairing_[p].real();
          }
        }
}

FinslerPoint::FinslerPoint(FamilyChart& fam, const SVec& s) {
  HodgeEngine endo = fiber_engine(fam, s);
  *this = FinslerPoint(endo, etas_at(fam, s));
}

cplx FinslerPoint::gram_form(const SVec& x, const SVec& y) const { return x.transpose() * gram_ * y.conjugate(); }

cplx FinslerPoint::bracket_form(const SVec& x, const SVec& y, const SVec& z, const SVec& w) const {
  const int m = dim();
  cplx sum = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const cplx xy = x[a] * y[b];
      if (xy == cplx(0.0)) continue;
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) sum += xy * std::conj(z[c] * w[d]) * pairing_[index(a, b, c, d)];
    }
  return sum;
}

FinslerValue FinslerPoint::value(const SVec& xi, double kappa) const {
  if (kappa < 0.0) throw std::invalid_argument("fkappa: kappa must be nonnegative");
  const double a = gram_form(xi, xi).real();
  const double f = bracket_form(xi, xi, xi, xi).real();
  FinslerValue v;
  v.F1 = std::sqrt(std::max(a, 0.0));
  v.F2 = std::pow(std::max(f, 0.0), 0.25);
  v.Fk = std::pow(std::max(a * a + kappa * f, 0.0), 0.25);
  return v;
}

double FinslerPoint::f_squared(const SVec& xi, double kappa) const {
  const double a = gram_form(xi, xi).real();
  const double f = bracket_form(xi, xi, xi, xi).real();
  return std::sqrt(std::max(a * a + kappa * f, 0.0));
}

Eigen::MatrixXcd FinslerPoint::levi(const SVec& xi, double kappa) const {
  const int m = dim();
  const double a = gram_form(xi, xi).real();
  const double f = bracket_form(xi, xi, xi, xi).real();
  const double F2 = std::sqrt(std::max(a * a + kappa * f, 0.0));
  if (F2 < 1e-14) throw DegenerateDirection("levi_matrix: F_kappa(v) vanishes");
  const double F6 = F2 * F2 * F2;
  std::vector<cplx> p(m), X(m);
  for (int i = 0; i < m; ++i) {
    const SVec e = unit(m, i);
    p[i] = gram_form(e, xi);
    X[i] = bracket_form(e, xi, xi, xi);
  }
  Eigen::MatrixXcd L(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const cplx b = bracket_form(unit(m, i), xi, unit(m, j), xi);
      L(i, j) = (a * gram_(i, j) + p[i] * std::conj(p[j]) + 2.0 * kappa * b) / F2 -
                (a * a * p[i] * std::conj(p[j]) + kappa * a * X[i] * std::conj(p[j]) +
                 kappa * a * p[i] * std::conj(X[j]) + kappa * kappa * X[i] * std::conj(X[j])) /
                    F6;
    }
  return L;
}

Eigen::MatrixXcd FinslerPoint::levi_fd(const SVec& xi, double kappa, double step) const {
  const int m = dim();
  const double h = step * std::max(xi.norm(), 1e-300);
  auto F = [&](const SVec& x) { return cplx(f_squared(x, kappa)); };
  Eigen::MatrixXcd L(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) L(i, j) = fd_mixed(F, xi, i, j, h).value;
  return L;
}

FinslerPoint::DiagonalBound FinslerPoint::diagonal_bound(const SVec& xi, double kappa, int i) const {
  const int m = dim();
  const SVec e = unit(m, i);
  const double a = gram_form(xi, xi).real();
  const double f = std::max(bracket_form(xi, xi, xi, xi).real(), 0.0);
  const double g = gram_(i, i).real();
  const double b = std::max(bracket_form(e, xi, e, xi).real(), 0.0);
  const cplx X = bracket_form(e, xi, xi, xi);
  const cplx p = gram_form(xi, e);
  const double F2 = std::sqrt(std::max(a * a + kappa * f, 0.0));
  const double sq = a * std::sqrt(b) - std::sqrt(a * g * f);
  DiagonalBound out;
  out.levi = levi(xi, kappa)(i, i).real();
  out.bound = (a * a * a * g + kappa * sq * sq + kappa * kappa * f * b) / (F2 * F2 * F2);
  out.cs_first = f * b - std::norm(X);
  out.cs_second = std::sqrt(a * g * f * b) - std::abs(X * p);
  return out;
}

FinslerValue fkappa(FamilyChart& fam, const TangentVector& v, double kappa) {
  return FinslerPoint(fam, v.s).value(v.xi, kappa);
}

Eigen::MatrixXcd levi_matrix(FamilyChart& fam, const TangentVector& v, double kappa) {
  if (v.xi.norm() == 0.0) throw DegenerateDirection("levi_matrix: zero tangent vector");
  return FinslerPoint(fam, v.s).levi(v.xi, kappa);
}

Lemma44Closed lemma44_closed(HodgeEngine& endo, const FormField& eta) {
  const HermitianMetric& h = endo.metric();
  Lemma44Closed t;
  const FormField w = wedge_bracket(eta, eta);
  const FormField gw = endo.green(w);
  const FormField y0 = endo.d_adjoint(gw);
  const FormField g = wedge_act_adjoint(eta, eta, h);
  const FormField gg = endo.green(g);
  t.a = endo.inner(eta, eta).real();
  t.bracket = endo.inner(y0, y0).real();
  t.endo = endo.inner(g, gg).real();
  t.X1 = endo.inner(act(gg, y0), y0).real();
  const FormField dv = endo.d_adjoint(wedge_act_adjoint(eta, gw, h));
  t.X2 = endo.inner(endo.green(dv), dv).real();
  const FormField u = wedge_bracket(eta, gg);
  t.X3 = endo.inner(endo.green(endo.d_adjoint(u)), dv);
  const FormField z = wedge_bracket(eta, endo.d(gg));
  t.Z = endo.inner(endo.green(z), z).real();
  // [[eta ^ eta] ^ eta] is a 3-form: zero on a curve.
  t.B = 0.0;
  const FormField pu = endo.project(u);
  t.D = 4.0 * endo.inner(pu, pu).real();
  t.E1 = endo.inner(wedge_bracket(y0, eta), gw);
  t.E2 = endo.inner(z, gw);
  return t;
}

double finsler_hsc(const Lemma44Closed& t, double kappa) {
  const double q = t.a * t.a + kappa * t.bracket;
  if (q < 1e-40) throw DegenerateDirection("finsler_hsc: F_kappa vanishes in this direction");
  const double lead = mutation_sign(Mutation::thm45_leading) * 2.0 * t.a * (2.0 * t.endo - t.bracket);
  const double mid = -5.0 * mutation_sign(Mutation::thm45_x1) * t.X1 + 5.0 * t.X2 - 12.0 * t.X3.real() -
                     4.0 * mutation_sign(Mutation::thm45_z) * t.Z - t.B;
  const double last = mutation_sign(Mutation::thm45_e) * kappa * kappa * t.E();
  return (lead + kappa * mid) * std::pow(q, -1.5) + last * std::pow(q, -2.5);
}

double finsler_hsc_from_terms(const Lemma44Closed& t, double kappa) {
  const double q = t.a * t.a + kappa * t.bracket;
  if (q < 1e-40) throw DegenerateDirection("finsler_hsc: F_kappa vanishes in this direction");
  const double num = 2.0 * t.a * (2.0 * t.endo - t.bracket) - kappa * (t.A() + t.B + t.C() - t.D);
  return (num / q + kappa * kappa * t.E() / (q * q)) / std::sqrt(q);
}

double finsler_hsc(FamilyChart& fam, const SVec& s0, int i, double kappa) {
  HodgeEngine endo = fiber_engine(fam, s0);
  return finsler_hsc(lemma44_closed(endo, eta_field(fam, s0, i)), kappa);
}

std::array<double, 5> Lemma44Terms::gaps() const {
  std::array<double, 5> g{};
  for (int k = 0; k < 5; ++k) {
    const double floor = std::max(fd_error[k], 1e-12 * scale);
    const double ref = std::max({std::abs(definitional[k]), std::abs(closed_form[k]), floor});
    g[k] = std::abs(definitional[k] - closed_form[k]) / ref;
  }
  return g;
}

Lemma44Terms terms_lemma44(FamilyChart& fam, const SVec& s0, int i) {
  FamilyChart nc = normal_coordinates(fam, s0);
  const SVec o = SVec::Zero(nc.dim());
  HodgeEngine endo = fiber_engine(nc, o);
  Lemma44Terms out;
  const Lemma44Closed c = lemma44_closed(endo, eta_field(nc, o, i));
  out.closed_form = {c.A(), c.B, c.C(), c.D, c.E()};
  out.scale = c.a * c.a;

  auto nab = [&](const SVec& y, bool conj, const FieldPath& path) {
    return covariant_s_derivative(nc, y, i, conj, path);
  };
  const FieldPath p0 = [&](const SVec& y) { return eta_field(nc, y, i); };
  const FieldPath p1 = [&](const SVec& y) { return nab(y, false, p0).value; };
  const FieldPath p2 = [&](const SVec& y) { return nab(y, false, p1).value; };
  const FieldPath p1b = [&](const SVec& y) { return nab(y, true, p1).value; };
  const FieldPath pp1 = [&](const SVec& y) {
    HodgeEngine e = fiber_engine(nc, y);
    return e.project(p1(y));
  };

  const FormField d1 = p1(o);
  const FdValue<FormField> d2 = nab(o, false, p1);
  const FdValue<FormField> d1b = nab(o, true, p1);
  const FdValue<FormField> d1b2 = nab(o, true, p2);
  const FdValue<FormField> d11b = nab(o, false, p1b);
  const FdValue<FormField> dp = nab(o, false, pp1);
  const FdValue<FormField> dpb = nab(o, true, pp1);

  const double n1 = endo.norm(d1);
  const cplx e1 = endo.inner(d2.value, d1) + endo.inner(d1, d1b.value);
  out.definitional[0] = (endo.inner(d1, d1b2.value) + endo.inner(d11b.value, d1)).real();
  out.definitional[1] = endo.inner(d2.value, d2.value).real();
  out.definitional[2] = endo.inner(d1b.value, d1b.value).real();
  out.definitional[3] = (endo.inner(dp.value, dp.value) + endo.inner(dpb.value, dpb.value)).real();
  out.definitional[4] = std::norm(e1);
  out.fd_error[0] = n1 * (d1b2.error + d11b.error);
  out.fd_error[1] = d2.error * (2.0 * endo.norm(d2.value) + d2.error);
  out.fd_error[2] = d1b.error * (2.0 * endo.norm(d1b.value) + d1b.error);
  out.fd_error[3] = dp.error * (2.0 * endo.norm(dp.value) + dp.error) + dpb.error * (2.0 * endo.norm(dpb.value) + dpb.error);
  out.fd_error[4] = 2.0 * std::abs(e1) * n1 * (d2.error + d1b.error);
  out.b_projection = endo.norm(endo.project(d2.value));
  return out;
}

GaussOracle fd_gauss_oracle(FamilyChart& fam, const SVec& s0, int i, double kappa, double fd_step) {
  FamilyChart nc = normal_coordinates(fam, s0);
  const int m = nc.dim();
  const SVec o = SVec::Zero(m);
  const SVec e = unit(m, i);
  auto f_sq = [&](const SVec& y) {
    HodgeEngine endo = fiber_engine(nc, y);
    const FormField eta = eta_field(nc, y, i);
    const double a = endo.inner(eta, eta).real();
    const FormField w = wedge_bracket(eta, eta);
    const double f = endo.inner(w, endo.green(w)).real();
    return std::sqrt(std::max(a * a + kappa * f, 0.0));
  };
  const double F0 = f_sq(o);
  if (F0 < 1e-10) throw DegenerateDirection("fd_gauss_oracle: F_kappa near zero");
  auto log_f = [&](const SVec& t) {
    const double v = f_sq(o + t[0] * e);
    if (v < 1e-10 * F0) throw DegenerateDirection("fd_gauss_oracle: F_kappa near zero on stencil");
    return cplx(std::log(v));
  };
  const FdValue<cplx> dd = fd_mixed(log_f, SVec::Zero(1), 0, 0, fd_step * nc.options().radius);
  GaussOracle out;
  out.value = -2.0 / F0 * dd.value.real();
  out.error = 2.0 / F0 * dd.error;

  // Pullback expansion: F^4 = a^2 + kappa (|nabla eta|^2 - |P nabla eta|^2).
  HodgeEngine endo = fiber_engine(nc, o);
  const FormField eta = eta_field(nc, o, i);
  const FdValue<FormField> nabla = covariant_s_derivative(
      nc, o, i, false, [&](const SVec& y) { return eta_field(nc, y, i); });
  const FormField pn = endo.project(nabla.value);
  const double a = endo.inner(eta, eta).real();
  const double f_exp = endo.inner(nabla.value, nabla.value).real() - endo.inner(pn, pn).real();
  const double F4_exp = a * a + kappa * f_exp;
  out.pullback_gap = std::abs(F4_exp - F0 * F0) / std::max(F0 * F0, 1e-300);
  return out;
}

}  // namespace higgs
