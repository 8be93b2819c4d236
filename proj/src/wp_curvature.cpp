#include "higgs/wp_curvature.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "higgs/mutation.hpp"

namespace higgs {

Tensor4& Tensor4::operator+=(const Tensor4& o) {
  if (dims_ != o.dims_) throw std::invalid_argument("Tensor4: shape mismatch");
  for (std::size_t q = 0; q < v_.size(); ++q) v_[q] += o.v_[q];
  return *this;
}

Tensor4 Tensor4::scaled(cplx c) const {
  Tensor4 out = *this;
  for (auto& x : out.v_) x *= c;
  return out;
}

double Tensor4::max_abs() const {
  double m = 0.0;
  for (const auto& x : v_) m = std::max(m, std::abs(x));
  return m;
}

Tensor4 operator-(const Tensor4& a, const Tensor4& b) {
  Tensor4 out = a;
  out += b.scaled(-1.0);
  return out;
}

nlohmann::json Tensor4::to_json() const {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (const auto& x : v_) {
    re.push_back(x.real());
    im.push_back(x.imag());
  }
  return {{"dims", dims_}, {"order", "i,j,k,l (i-major)"}, {"re", re}, {"im", im}};
}

std::string Tensor4::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "i,j,k,l,re,im\n";
  for (int i = 0; i < dims_[0]; ++i)
    for (int j = 0; j < dims_[1]; ++j)
      for (int k = 0; k < dims_[2]; ++k)
        for (int l = 0; l < dims_[3]; ++l) {
          const cplx x = (*this)(i, j, k, l);
          os << i << ',' << j << ',' << k << ',' << l << ',' << x.real() << ',' << x.imag() << '\n';
        }
  return os.str();
}

nlohmann::json matrix_to_json(const Eigen::MatrixXcd& m) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r, c;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j).real());
      c.push_back(m(i, j).imag());
    }
    re.push_back(r);
    im.push_back(c);
  }
  return {{"re", re}, {"im", im}};
}

cplx trace_pairing(const FormField& a, const FormField& b) {
  if (a.coeff() != Coeff::Endomorphism || a.degree() != 0) throw std::invalid_argument("trace_pairing: End 0-forms");
  a.require_same_shape(b, "trace_pairing");
  cplx acc = 0.0;
  for (std::size_t x = 0; x < a.sites(); ++x) acc += (a.mat(Part::p00, x) * b.mat(Part::p00, x)).trace();
  return acc * a.grid().cell_weight();
}

namespace {

double relative_or_absolute(double diff, double scale) { return scale > 1e-12 ? diff / scale : diff; }

// R_{i jbar} with FD errors for all (i, j).
struct MixedCurvatures {
  std::vector<std::vector<FormField>> R;
  std::vector<std::vector<double>> err;
};

MixedCurvatures all_mixed(FamilyChart& fam, const SVec& t) {
  const int m = fam.dim();
  MixedCurvatures out;
  out.R.assign(m, std::vector<FormField>(m));
  out.err.assign(m, std::vector<double>(m, 0.0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      auto r = mixed_curvature_Rij(fam, t, i, j);
      out.R[i][j] = std::move(r.value);
      out.err[i][j] = r.error;
    }
  return out;
}

double kaehler_symmetry_residual(const Tensor4& R, bool with_conjugate = true) {
  const int m = R.dims()[0];
  double diff = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
          const cplx x = R(i, j, k, l);
          diff = std::max({diff, std::abs(x - R(k, j, i, l)), std::abs(x - R(i, l, k, j))});
          if (with_conjugate) diff = std::max(diff, std::abs(std::conj(x) - R(j, i, l, k)));
        }
  return relative_or_absolute(diff, R.max_abs());
}

}  // namespace

WpCurvature wp_curvature_formula(FamilyChart& fam, const SVec& t) {
  const int m = fam.dim();
  if (m < 1) throw std::invalid_argument("wp_curvature_formula: empty family");
  const MixedCurvatures mc = all_mixed(fam, t);
  HodgeEngine eng = fiber_engine(fam, t);
  std::vector<std::vector<FormField>> box(m, std::vector<FormField>(m));
  std::vector<std::vector<double>> box_norm(m, std::vector<double>(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      box[i][j] = eng.laplacian(mc.R[i][j]);
      box_norm[i][j] = box[i][j].coeff_norm();
    }
  // Symmetric under the swap of the two R factors, so that the index symmetries
  // of the tensor hold exactly at fixed grid.
  auto pair = [&](int i, int j, int k, int l) {
    return 0.5 * (trace_pairing(mc.R[i][j], box[k][l]) + trace_pairing(box[i][j], mc.R[k][l]));
  };
  const double s1 = mutation_sign(Mutation::eq1_first), s2 = mutation_sign(Mutation::eq1_second);
  const double w = fam.grid().cell_weight();
  WpCurvature out;
  out.tensor = out.first = out.second = Tensor4::cube(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
          out.first(i, j, k, l) = pair(i, j, k, l);
          out.second(i, j, k, l) = pair(i, l, k, j);
          out.tensor(i, j, k, l) = s1 * out.first(i, j, k, l) + s2 * out.second(i, j, k, l);
          const double e = w * (mc.err[i][j] * box_norm[k][l] + mc.err[k][l] * box_norm[i][j] +
                                mc.err[i][l] * box_norm[k][j] + mc.err[k][j] * box_norm[i][l]);
          out.fd_error = std::max(out.fd_error, e);
        }
  std::vector<std::vector<FormField>> wedge(m, std::vector<FormField>(m)), gwedge(m, std::vector<FormField>(m));
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      wedge[i][k] = wedge_bracket(eta_field(fam, t, i), eta_field(fam, t, k));
      gwedge[i][k] = eng.green(wedge[i][k]);
    }
  out.bracket_pairing = Tensor4::cube(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) out.bracket_pairing(i, j, k, l) = eng.inner(wedge[i][k], gwedge[j][l]);
  out.symmetry_residual = kaehler_symmetry_residual(out.tensor);
  out.swap_residual = kaehler_symmetry_residual(out.tensor, false);
  return out;
}

std::vector<double> wp_sectional_values(const WpCurvature& c) {
  std::vector<double> v;
  for (int i = 0; i < c.tensor.dims()[0]; ++i) v.push_back(c.tensor(i, i, i, i).real());
  return v;
}

HarmonicBasis dimage_basis(const BundleConfig& b, int d, const HodgeOptions& opts) {
  if (d < 0 || d > 2) throw std::invalid_argument("dimage_basis: degree must be 0, 1 or 2");
  HodgeEngine eng(b, Coeff::Section, opts);
  return eng.harmonic_basis(d);
}

Eigen::MatrixXcd dimage_metric(const BundleConfig& b, const std::vector<FormField>& frame) {
  const HermitianMetric h = b.metric();
  const auto l = static_cast<Eigen::Index>(frame.size());
  Eigen::MatrixXcd H(l, l);
  for (Eigen::Index a = 0; a < l; ++a)
    for (Eigen::Index c = 0; c < l; ++c) H(a, c) = global_inner_product(frame[a], frame[c], h);
  return H;
}

Eigen::MatrixXcd dimage_metric(const HarmonicBasis& basis, const BundleConfig& b) {
  return dimage_metric(b, basis.fields);
}

Eigen::MatrixXcd trace_term_coefficients(FamilyChart& fam, const SVec& t) {
  const int m = fam.dim();
  const FormField id = identity_field(fam.grid(), fam.background()->rank());
  const double norm = fam.background()->rank() * fam.grid().volume();
  Eigen::MatrixXcd c(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) c(i, j) = trace_pairing(mixed_curvature_Rij(fam, t, i, j).value, id) / norm;
  return c;
}

namespace {

// The three field-dependent curvature terms for a frame t_a on a complex with
// engine `eng`; `endo` is the End complex engine supplying G(eta_j^dagger eta_i).
struct TermSet {
  Tensor4 adjoint, endo, wedge;
  bool adjoint_zero = false;
};

TermSet curvature_terms(const std::vector<FormField>& etas, const std::vector<FormField>& frame, HodgeEngine& eng,
                        HodgeEngine& endo_eng) {
  const int m = static_cast<int>(etas.size());
  const int l = static_cast<int>(frame.size());
  const HermitianMetric& h = eng.metric();
  TermSet out;
  out.adjoint = out.endo = out.wedge = Tensor4(l, l, m, m);
  if (l == 0) return out;
  const int d = frame.front().degree();

  // eta_i t_a and G of it
  std::vector<std::vector<FormField>> wedge(m, std::vector<FormField>(l)), gwedge = wedge;
  if (d < 2)
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < l; ++a) {
        wedge[i][a] = wedge_act(etas[i], frame[a]);
        gwedge[i][a] = eng.green(wedge[i][a]);
      }
  // eta_i^dagger t_a; absent in degree 0
  out.adjoint_zero = d == 0;
  std::vector<std::vector<FormField>> adj(m, std::vector<FormField>(l)), gadj = adj;
  if (d > 0)
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < l; ++a) {
        adj[i][a] = wedge_act_adjoint(etas[i], frame[a], h);
        gadj[i][a] = eng.green(adj[i][a]);
      }
  // G(eta_j^dagger eta_i) on End
  std::vector<std::vector<FormField>> gee(m, std::vector<FormField>(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) gee[i][j] = endo_eng.green(wedge_act_adjoint(etas[j], etas[i], endo_eng.metric()));

  const bool on_end = frame.front().coeff() == Coeff::Endomorphism;
  const double sa = mutation_sign(Mutation::thm33_adjoint), se = mutation_sign(Mutation::thm33_endo),
               sw = mutation_sign(Mutation::thm33_wedge);
  for (int a = 0; a < l; ++a)
    for (int b = 0; b < l; ++b)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          if (d > 0) out.adjoint(a, b, i, j) = sa * eng.inner(gadj[j][a], adj[i][b]);
          const FormField acted = on_end ? act(gee[i][j], frame[a]) : multiply(gee[i][j], frame[a]);
          out.endo(a, b, i, j) = -se * eng.inner(acted, frame[b]);
          if (d < 2) out.wedge(a, b, i, j) = -sw * eng.inner(gwedge[i][a], wedge[j][b]);
        }
  return out;
}

std::vector<FormField> fiber_etas(FamilyChart& fam, const SVec& t) {
  std::vector<FormField> etas;
  for (int i = 0; i < fam.dim(); ++i) etas.push_back(eta_field(fam, t, i));
  return etas;
}

}  // namespace

DimageCurvature dimage_curvature(FamilyChart& fam, const SVec& t, int d) {
  if (d < 0 || d > 2) throw std::invalid_argument("dimage_curvature: degree must be 0, 1 or 2");
  const int m = fam.dim();
  HodgeEngine eng = fiber_engine(fam, t, Coeff::Section);
  HodgeEngine endo = fiber_engine(fam, t);
  const HarmonicBasis basis = eng.harmonic_basis(d);
  DimageCurvature out;
  out.degree = d;
  out.dimension = static_cast<int>(basis.dim());
  out.H = dimage_metric(fam.fiber(t), basis.fields);
  out.trace = trace_term_coefficients(fam, t);
  const int l = out.dimension;
  out.trace_term = Tensor4(l, l, m, m);
  const double st = mutation_sign(Mutation::thm33_trace);
  for (int a = 0; a < l; ++a)
    for (int b = 0; b < l; ++b)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out.trace_term(a, b, i, j) = st * out.trace(i, j) * out.H(a, b);
  TermSet terms = curvature_terms(fiber_etas(fam, t), basis.fields, eng, endo);
  out.adjoint_term = std::move(terms.adjoint);
  out.endo_term = std::move(terms.endo);
  out.wedge_term = std::move(terms.wedge);
  out.adjoint_term_structural_zero = terms.adjoint_zero;
  out.tensor = out.trace_term;
  out.tensor += out.adjoint_term;
  out.tensor += out.endo_term;
  out.tensor += out.wedge_term;

  const MixedCurvatures mc = all_mixed(fam, t);
  double sym = 0.0, ricci = 0.0, ricci_scale = 0.0;
  for (int a = 0; a < l; ++a)
    for (int b = 0; b < l; ++b)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          sym = std::max(sym, std::abs(out.tensor(a, b, i, j) - std::conj(out.tensor(b, a, j, i))));
          const cplx direct = eng.inner(multiply(mc.R[i][j], basis.fields[a]), basis.fields[b]);
          ricci = std::max(ricci, std::abs(out.trace_term(a, b, i, j) + out.endo_term(a, b, i, j) - direct));
          ricci_scale = std::max(ricci_scale, std::abs(direct));
        }
  out.symmetry_residual = relative_or_absolute(sym, out.tensor.max_abs());
  out.ricci_residual = relative_or_absolute(ricci, ricci_scale);
  return out;
}

namespace {

Eigen::MatrixXcd flat_coefficients(const HodgeEngine& eng, const std::vector<FormField>& fields) {
  if (fields.empty()) return {};
  Eigen::MatrixXcd M(eng.to_flat(fields.front()).size(), static_cast<Eigen::Index>(fields.size()));
  for (std::size_t a = 0; a < fields.size(); ++a) {
    M.col(static_cast<Eigen::Index>(a)).setZero();
    for (int s = 0; s < fields[a].num_parts(); ++s) {
      const auto& v = fields[a].slot_data(s);
      M.col(static_cast<Eigen::Index>(a)).segment(s * v.size(), v.size()) = v;
    }
  }
  return M;
}

}  // namespace

ChernScalar chern_scalar_check(FamilyChart& fam, const SVec& t0, int d, double fd_step) {
  if (d != 0)
    throw std::invalid_argument("chern_scalar_check: holomorphic frames are constructed in degree 0 only");
  const int m = fam.dim();
  ChernScalar out;
  HodgeEngine eng0 = fiber_engine(fam, t0, Coeff::Section);
  const HarmonicBasis base = eng0.harmonic_basis(0);
  const int l = static_cast<int>(base.dim());
  out.formula = out.fd = out.fd_error = Eigen::MatrixXcd::Zero(m, m);
  if (l == 0) {
    out.empty = true;
    return out;
  }
  const Eigen::MatrixXcd T0 = flat_coefficients(eng0, base.fields);

  // Holomorphic frame: kernel at s, normalized against the base kernel by a fixed linear functional.
  auto log_det = [&](const SVec& t) -> cplx {
    HodgeEngine eng = fiber_engine(fam, t, Coeff::Section);
    const HarmonicBasis& hb = eng.harmonic_basis(0);
    if (static_cast<int>(hb.dim()) != l)
      throw DimensionJump("chern_scalar_check: kernel dimension changes across the stencil");
    const Eigen::MatrixXcd K = flat_coefficients(eng, hb.fields);
    const Eigen::MatrixXcd F = K * (T0.adjoint() * K).inverse();
    std::vector<FormField> frame;
    for (int a = 0; a < l; ++a) {
      FormField f = FormField::zeros_like(hb.fields.front());
      f.data(Part::p00) = F.col(a);
      frame.push_back(std::move(f));
    }
    const Eigen::MatrixXcd H = dimage_metric(fam.fiber(t), frame);
    return std::log(H.determinant().real());
  };

  const DimageCurvature dc = dimage_curvature(fam, t0, 0);
  const Eigen::MatrixXcd Hinv = dc.H.inverse();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      cplx tr = 0.0;
      for (int a = 0; a < l; ++a)
        for (int b = 0; b < l; ++b) tr += dc.tensor(a, b, i, j) * Hinv(b, a);
      out.formula(i, j) = tr;
      const auto v = fd_mixed(log_det, t0, i, j, fd_step);
      out.fd(i, j) = -v.value;
      out.fd_error(i, j) = v.error;
    }
  const double scale = std::max(out.formula.cwiseAbs().maxCoeff(), out.fd.cwiseAbs().maxCoeff());
  const double diff = std::max(0.0, (out.formula - out.fd).cwiseAbs().maxCoeff() - out.fd_error.cwiseAbs().maxCoeff());
  // below the FD roundoff floor both sides count as zero
  out.relative_gap = scale > 1e-8 ? diff / scale : diff;
  return out;
}

RecoveryCheck recover_bs_check(FamilyChart& fam, const SVec& t) {
  return recover_bs_check(fam, t, fiber_etas(fam, t));
}

RecoveryCheck recover_bs_check(FamilyChart& fam, const SVec& t, const std::vector<FormField>& etas) {
  const int m = fam.dim();
  if (m < 1) throw std::invalid_argument("recover_bs_check: empty family");
  HodgeEngine endo = fiber_engine(fam, t);
  RecoveryCheck out;

  // principal angles between span{eta_i} and the harmonic End 1-forms
  const HarmonicBasis& hb = endo.harmonic_basis(1);
  Eigen::MatrixXcd gram(m, m), cross(m, static_cast<Eigen::Index>(hb.dim()));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) gram(i, j) = endo.inner(etas[j], etas[i]);
    for (std::size_t k = 0; k < hb.dim(); ++k) cross(i, static_cast<Eigen::Index>(k)) = endo.inner(hb.fields[k], etas[i]);
  }
  const Eigen::LLT<Eigen::MatrixXcd> llt(gram);
  const Eigen::MatrixXcd C = llt.matrixL().solve(cross);
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(C);
  for (Eigen::Index q = 0; q < m; ++q) {
    const double sv = q < svd.singularValues().size() ? std::min(1.0, svd.singularValues()(q)) : 0.0;
    out.principal_angles.push_back(std::acos(sv));
  }

  TermSet terms = curvature_terms(etas, etas, endo, endo);
  // The trace term drops out on End: ad of the central part of R_{i jbar} vanishes.
  out.template_tensor = terms.adjoint;
  out.template_tensor += terms.endo;
  out.template_tensor += terms.wedge;
  out.wedge_term = terms.wedge.max_abs();
  out.formula_tensor = wp_curvature_formula(fam, t).tensor;
  out.scale = out.formula_tensor.max_abs();
  out.deviation = relative_or_absolute((out.template_tensor - out.formula_tensor).max_abs(), out.scale);
  return out;
}

nlohmann::json CurvatureReport::to_json() const {
  nlohmann::json j;
  j["family"] = family;
  j["grid_n"] = grid_n;
  j["wp_metric"] = matrix_to_json(wp_metric);
  j["wp_curvature"] = {{"tensor", wp_curvature.tensor.to_json()},
                       {"bracket_term_structural_zero", wp_curvature.bracket_term_structural_zero},
                       {"bracket_pairing_max", wp_curvature.bracket_pairing.max_abs()},
                       {"fd_error", wp_curvature.fd_error},
                       {"symmetry_residual", wp_curvature.symmetry_residual}};
  nlohmann::json di = nlohmann::json::object();
  for (const auto& [d, c] : dimage)
    di[std::to_string(d)] = {{"dimension", c.dimension},
                             {"H", matrix_to_json(c.H)},
                             {"curvature", c.tensor.to_json()},
                             {"trace_term", matrix_to_json(c.trace)},
                             {"adjoint_term_structural_zero", c.adjoint_term_structural_zero},
                             {"symmetry_residual", c.symmetry_residual},
                             {"ricci_residual", c.ricci_residual}};
  j["dimage"] = di;
  j["residuals"] = residuals;
  j["provenance"] = provenance;
  j["oracles"] = oracles;
  return j;
}

void CurvatureReport::write(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream(std::filesystem::path(dir) / "report.json") << to_json().dump(2) << '\n';
  std::ofstream(std::filesystem::path(dir) / "wp_curvature.csv") << wp_curvature.tensor.to_csv();
  for (const auto& [d, c] : dimage)
    std::ofstream(std::filesystem::path(dir) / ("dimage_curvature_" + std::to_string(d) + ".csv")) << c.tensor.to_csv();
}

}  // namespace higgs
