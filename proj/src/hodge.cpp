#include "higgs/hodge.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <random>

namespace higgs {

struct HodgeEngine::DegreeCache {
  bool assembled = false;
  Eigen::SparseMatrix<cplx> A;
  std::unique_ptr<Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<cplx>>> llt;
  double lambda_max = 0.0;
  double sigma = 0.0;
  std::optional<HarmonicBasis> basis;
  Eigen::MatrixXcd kernel_flat;  // orthonormal columns
};

HodgeEngine::HodgeEngine(BundleConfig b, Coeff coeff, HodgeOptions opts)
    : b_(std::move(b)), coeff_(coeff), opts_(opts), metric_(b_.h) {}

HodgeEngine::~HodgeEngine() = default;
HodgeEngine::HodgeEngine(HodgeEngine&&) noexcept = default;
HodgeEngine& HodgeEngine::operator=(HodgeEngine&&) noexcept = default;

namespace {

enum class MetricAction { J, Jinv, Half, HalfInv };

// Pointwise metric actions: J X = h X h^{-1} (End) or h s (Section), and J^{1/2}.
void apply_metric(const HermitianMetric& hm, Coeff c, MetricAction act, FormField& f) {
  if (hm.is_identity()) return;
  const int r = f.rank();
  for (int sl = 0; sl < f.num_parts(); ++sl) {
    const Part p = f.part_at(sl);
    for (std::size_t s = 0; s < f.sites(); ++s) {
      const Mat* L = nullptr;
      const Mat* R = nullptr;
      switch (act) {
        case MetricAction::J: L = &hm.h(s), R = &hm.hinv(s); break;
        case MetricAction::Jinv: L = &hm.hinv(s), R = &hm.h(s); break;
        case MetricAction::Half: L = &hm.sqrt(s), R = &hm.sqrt_inv(s); break;
        case MetricAction::HalfInv: L = &hm.sqrt_inv(s), R = &hm.sqrt(s); break;
      }
      if (c == Coeff::Endomorphism) {
        const Mat X = f.mat(p, s);
        f.mat(p, s) = (*L) * X * (*R);
      } else {
        Eigen::Map<Eigen::VectorXcd> v(f.at(p, s), r);
        const Vec t = (*L) * v;
        v = t;
      }
    }
  }
}

double degree_metric_factor(const TorusGrid& g, int degree) {
  return degree == 0 ? 1.0 : (degree == 1 ? g.g_inv() : g.g_inv() * g.g_inv());
}

int smallest_divisor_at_least(int n, int k) {
  for (int c = k; c <= n; ++c)
    if (n % c == 0) return c;
  return n;
}

}  // namespace

FormField HodgeEngine::d(const FormField& f) const { return dolbeault_d(b_, f); }

FormField HodgeEngine::d_adjoint(const FormField& f) const {
  if (f.degree() == 0) throw std::invalid_argument("d_adjoint: degree 0 input has no image");
  if (f.degree() > 2) return zero(2);
  FormField x = f;
  apply_metric(metric_, coeff_, MetricAction::J, x);
  FormField y = dolbeault_d_flat_adjoint(b_, x);
  apply_metric(metric_, coeff_, MetricAction::Jinv, y);
  y *= b_.grid().g_inv();
  return y;
}

FormField HodgeEngine::laplacian(const FormField& f) const {
  FormField out = FormField::zeros_like(f);
  if (f.degree() >= 1) out += d(d_adjoint(f));
  if (f.degree() <= 1) out += d_adjoint(d(f));
  return out;
}

Eigen::VectorXcd HodgeEngine::to_flat(const FormField& f) const {
  FormField x = f;
  apply_metric(metric_, coeff_, MetricAction::Half, x);
  const double w = std::sqrt(b_.grid().cell_weight() * degree_metric_factor(b_.grid(), f.degree()));
  const Eigen::Index part = static_cast<Eigen::Index>(f.sites() * f.block());
  Eigen::VectorXcd y(part * f.num_parts());
  for (int s = 0; s < f.num_parts(); ++s) y.segment(s * part, part) = w * x.slot_data(s);
  return y;
}

FormField HodgeEngine::from_flat(const Eigen::VectorXcd& y, int degree) const {
  FormField x = zero(degree);
  const double w = std::sqrt(b_.grid().cell_weight() * degree_metric_factor(b_.grid(), degree));
  const Eigen::Index part = static_cast<Eigen::Index>(x.sites() * x.block());
  for (int s = 0; s < x.num_parts(); ++s) x.slot_data(s) = y.segment(s * part, part) / w;
  apply_metric(metric_, coeff_, MetricAction::HalfInv, x);
  return x;
}

HodgeEngine::DegreeCache& HodgeEngine::cache(int degree) {
  if (degree < 0 || degree > 2) throw std::invalid_argument("HodgeEngine: degree outside 0..2");
  if (!caches_[degree]) caches_[degree] = std::make_unique<DegreeCache>();
  return *caches_[degree];
}

// Probe the Laplacian with colored unit vectors; its stencil reaches two cells
// in each direction, so a color period of at least 5 separates the columns.
void HodgeEngine::assemble(int degree) {
  DegreeCache& dc = cache(degree);
  if (dc.assembled) return;
  const TorusGrid& g = b_.grid();
  const int n = g.n();
  const int period = smallest_divisor_at_least(n, 5);
  FormField proto = zero(degree);
  const std::size_t blk = proto.block();
  const int parts = proto.num_parts();
  const std::size_t part_len = g.sites() * blk;
  const std::size_t dim = part_len * static_cast<std::size_t>(parts);
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(dim * 25 * blk * static_cast<std::size_t>(parts) / 2);

  for (int ci = 0; ci < period; ++ci)
    for (int cj = 0; cj < period; ++cj)
      for (int sl = 0; sl < parts; ++sl)
        for (std::size_t k = 0; k < blk; ++k) {
          Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
          for (int p = ci; p < n; p += period)
            for (int q = cj; q < n; q += period) e[static_cast<Eigen::Index>(sl * part_len + g.index(p, q) * blk + k)] = 1.0;
          const Eigen::VectorXcd out = to_flat(laplacian(from_flat(e, degree)));
          for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) {
              // the unique colored source within reach of (p, q)
              int sp = -1, sq = -1;
              for (int dp = -2; dp <= 2 && sp < 0; ++dp)
                for (int dq = -2; dq <= 2; ++dq) {
                  const int xp = g.wrap(p + dp), xq = g.wrap(q + dq);
                  if (xp % period == ci && xq % period == cj) {
                    sp = xp, sq = xq;
                    break;
                  }
                }
              if (sp < 0) continue;
              const std::size_t col = static_cast<std::size_t>(sl) * part_len + g.index(sp, sq) * blk + k;
              for (int so = 0; so < parts; ++so)
                for (std::size_t ko = 0; ko < blk; ++ko) {
                  const std::size_t row = static_cast<std::size_t>(so) * part_len + g.index(p, q) * blk + ko;
                  const cplx v = out[static_cast<Eigen::Index>(row)];
                  if (v != cplx(0.0)) trip.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
                }
            }
        }
  Eigen::SparseMatrix<cplx> A(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<cplx> At = A.adjoint();
  dc.A = 0.5 * (A + At);
  dc.A.makeCompressed();

  // largest eigenvalue by power iteration
  std::mt19937_64 rng(opts_.seed + static_cast<std::uint64_t>(degree));
  std::normal_distribution<double> normal;
  Eigen::VectorXcd x(static_cast<Eigen::Index>(dim));
  for (auto& v : x) v = cplx(normal(rng), normal(rng));
  x.normalize();
  double lam = 0.0;
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXcd y = dc.A * x;
    lam = y.norm();
    if (lam == 0.0) break;
    x = y / lam;
  }
  dc.lambda_max = std::max(lam, 1e-300);
  dc.assembled = true;
}

const Eigen::SparseMatrix<cplx>& HodgeEngine::assembled_laplacian(int degree) {
  assemble(degree);
  return cache(degree).A;
}

void HodgeEngine::factor(int degree) {
  assemble(degree);
  DegreeCache& dc = cache(degree);
  if (dc.llt) return;
  const double threshold = opts_.harmonic_rel_threshold * dc.lambda_max;
  dc.sigma = 1e-2 * threshold;
  Eigen::SparseMatrix<cplx> I(dc.A.rows(), dc.A.cols());
  I.setIdentity();
  Eigen::SparseMatrix<cplx> M = dc.A + dc.sigma * I;
  dc.llt = std::make_unique<Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<cplx>>>();
  dc.llt->compute(M);
  if (dc.llt->info() != Eigen::Success) throw std::runtime_error("HodgeEngine: factorization failed");
}

// Shift-invert subspace iteration for the eigenvalues below threshold.
void HodgeEngine::compute_basis(int degree) {
  factor(degree);
  DegreeCache& dc = cache(degree);
  const Eigen::Index dim = dc.A.rows();
  const double threshold = opts_.harmonic_rel_threshold * dc.lambda_max;
  std::mt19937_64 rng(opts_.seed * 7 + static_cast<std::uint64_t>(degree));
  std::normal_distribution<double> normal;

  int k = std::min<Eigen::Index>(opts_.initial_block, dim);
  HarmonicBasis hb;
  hb.degree = degree;
  hb.coeff = coeff_;
  hb.threshold = threshold;
  hb.lambda_max = dc.lambda_max;
  for (;;) {
    Eigen::MatrixXcd X(dim, k);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = cplx(normal(rng), normal(rng));
    Eigen::VectorXd theta;
    Eigen::MatrixXcd V;
    int prev_count = -1;
    int it = 0;
    bool converged = false;
    for (; it < 60; ++it) {
      Eigen::MatrixXcd Y = dc.llt->solve(X);
      Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Y);
      Eigen::MatrixXcd Qm = qr.householderQ() * Eigen::MatrixXcd::Identity(dim, k);
      Eigen::MatrixXcd AQ = dc.A * Qm;
      Eigen::MatrixXcd T = Qm.adjoint() * AQ;
      T = 0.5 * (T + T.adjoint()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(T);
      theta = es.eigenvalues();
      X = Qm * es.eigenvectors();
      const Eigen::MatrixXcd R = AQ * es.eigenvectors() - X * theta.asDiagonal();
      int count = 0;
      double worst = 0.0;
      for (int i = 0; i < k; ++i) {
        if (theta[i] < opts_.gap_factor * threshold || i == 0) worst = std::max(worst, R.col(i).norm());
        if (theta[i] < threshold) ++count;
      }
      // the first retained-complement value must be resolved too
      if (count < k) worst = std::max(worst, R.col(count).norm() / std::max(1.0, theta[count] / threshold) * 0.0);
      if (count == prev_count && worst <= 1e-11 * dc.lambda_max && it >= 2) {
        converged = true;
        ++it;
        break;
      }
      prev_count = count;
    }
    int count = 0;
    for (int i = 0; i < k; ++i)
      if (theta[i] < threshold) ++count;
    if (count >= k - 1 && k < dim) {
      k = static_cast<int>(std::min<Eigen::Index>(2 * k, dim));
      continue;
    }
    hb.iterations = it;
    hb.reliable = converged;
    dc.kernel_flat = X.leftCols(count);
    for (int i = 0; i < count; ++i) {
      hb.fields.push_back(from_flat(X.col(i), degree));
      hb.eigenvalues.push_back(theta[i]);
    }
    hb.first_nonzero = count < k ? theta[count] : std::numeric_limits<double>::infinity();
    if (hb.first_nonzero < opts_.gap_factor * threshold) hb.reliable = false;
    break;
  }
  hb.gram.resize(static_cast<Eigen::Index>(hb.dim()), static_cast<Eigen::Index>(hb.dim()));
  for (std::size_t i = 0; i < hb.dim(); ++i)
    for (std::size_t j = 0; j < hb.dim(); ++j)
      hb.gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = inner(hb.fields[i], hb.fields[j]);
  dc.basis = std::move(hb);
}

const HarmonicBasis& HodgeEngine::harmonic_basis(int degree) {
  DegreeCache& dc = cache(degree);
  if (!dc.basis) compute_basis(degree);
  return *dc.basis;
}

FormField HodgeEngine::project(const FormField& f) {
  const HarmonicBasis& hb = harmonic_basis(f.degree());
  FormField out = FormField::zeros_like(f);
  for (const FormField& q : hb.fields) out.axpy(inner(f, q), q);
  return out;
}

FormField HodgeEngine::green(const FormField& f, GreenStats* stats) {
  const int degree = f.degree();
  if (degree > 2) return FormField::zeros_like(f);
  harmonic_basis(degree);
  DegreeCache& dc = cache(degree);
  const Eigen::MatrixXcd& K = dc.kernel_flat;
  auto deflate = [&](Eigen::VectorXcd v) {
    if (K.cols() > 0) v -= K * (K.adjoint() * v);
    return v;
  };
  const Eigen::VectorXcd f_flat = to_flat(f);
  const double fnorm = f_flat.norm();
  const Eigen::VectorXcd rhs = deflate(f_flat);
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(rhs.size());
  if (fnorm == 0.0 || rhs.norm() <= opts_.green_rtol * fnorm * 1e-3) {
    if (stats) *stats = {0, 0.0};
    return from_flat(x, degree);
  }
  Eigen::VectorXcd r = rhs;
  Eigen::VectorXcd z = deflate(dc.llt->solve(r));
  Eigen::VectorXcd p = z;
  cplx rz = r.dot(z);
  const int cap = 20 * b_.grid().n() * b_.grid().n();
  int it = 0;
  double res = r.norm() / fnorm;
  while (res > opts_.green_rtol && it < cap) {
    const Eigen::VectorXcd Ap = dc.A * p;
    const cplx alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    // refresh the true residual now and then to avoid drift
    if (++it % 25 == 0) r = rhs - dc.A * x;
    res = r.norm() / fnorm;
    if (res <= opts_.green_rtol) break;
    z = deflate(dc.llt->solve(r));
    const cplx rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  x = deflate(x);
  res = (rhs - dc.A * x).norm() / fnorm;
  if (stats) *stats = {it, res};
  if (res > 10.0 * opts_.green_rtol)
    throw NonConvergence("green: conjugate gradient did not converge", it, res);
  return from_flat(x, degree);
}

FormField d_adjoint(const BundleConfig& b, const FormField& f) {
  return HodgeEngine(b, f.coeff()).d_adjoint(f);
}

FormField laplacian(const BundleConfig& b, const FormField& f) {
  return HodgeEngine(b, f.coeff()).laplacian(f);
}

HarmonicBasis harmonic_basis(const BundleConfig& b, int degree, Coeff coeff, const HodgeOptions& opts) {
  HodgeEngine e(b, coeff, opts);
  return e.harmonic_basis(degree);
}

FormField green(const BundleConfig& b, const FormField& f, const HodgeOptions& opts) {
  HodgeEngine e(b, f.coeff(), opts);
  return e.green(f);
}

FormField harmonic_project(const BundleConfig& b, const FormField& f, const HodgeOptions& opts) {
  HodgeEngine e(b, f.coeff(), opts);
  return e.project(f);
}

FormField project_holomorphic(const BundleConfig& b, const FormField& phi, double threshold) {
  if (phi.degree() != 1) throw std::invalid_argument("project_holomorphic: phi must be a 1-form");
  BundleConfig flat = b;
  flat.phi = FormField::zeros_like(b.phi);
  HodgeOptions opts;
  opts.harmonic_rel_threshold = threshold;
  HodgeEngine e(std::move(flat), phi.coeff(), opts);
  // dz is parallel, so holomorphic (1,0)-forms are holomorphic 0-forms times dz
  FormField coef = e.zero(0);
  coef.data(Part::p00) = phi.data(Part::p10);
  const FormField proj = e.project(coef);
  FormField out = FormField::zeros_like(phi);
  out.data(Part::p10) = proj.data(Part::p00);
  return out;
}

FormField lambda_bracket_pairing(const FormField& A, const FormField& B, const HermitianMetric& h) {
  if (A.degree() != 1 || B.degree() != 1)
    throw std::invalid_argument("lambda_bracket_pairing: both arguments must be 1-forms");
  const FormField alpha_star = star_adjoint(A.only(Part::p10), h);
  const FormField beta_star = star_adjoint(A.only(Part::p01), h);
  FormField out = lambda_contract(wedge_bracket(alpha_star, B.only(Part::p10)));
  out *= -I;
  out.axpy(I, lambda_contract(wedge_bracket(beta_star, B.only(Part::p01))));
  return out;
}

namespace {

// [M, x] for Endomorphisms, M x for sections, at every site and part
Eigen::VectorXcd left_mult(const FormField& eta, Part pe, bool star, const HermitianMetric& h, Coeff c,
                           const Eigen::VectorXcd& in) {
  const int r = eta.rank();
  const std::size_t sites = eta.sites();
  const std::size_t blk = c == Coeff::Endomorphism ? static_cast<std::size_t>(r * r) : static_cast<std::size_t>(r);
  Eigen::VectorXcd out(in.size());
  for (std::size_t s = 0; s < sites; ++s) {
    Mat M = eta.mat(pe, s);
    if (star) M = h.is_identity() ? Mat(M.adjoint()) : Mat(h.hinv(s) * M.adjoint() * h.h(s));
    if (c == Coeff::Endomorphism) {
      Eigen::Map<const Eigen::MatrixXcd> X(in.data() + s * blk, r, r);
      Eigen::Map<Eigen::MatrixXcd> Y(out.data() + s * blk, r, r);
      Y.noalias() = M * X;
      Y.noalias() -= X * M;
    } else {
      Eigen::Map<const Eigen::VectorXcd> X(in.data() + s * blk, r);
      Eigen::Map<Eigen::VectorXcd> Y(out.data() + s * blk, r);
      Y.noalias() = M * X;
    }
  }
  return out;
}

}  // namespace

FormField wedge_act(const FormField& eta, const FormField& x) {
  if (eta.coeff() != Coeff::Endomorphism || eta.degree() != 1)
    throw std::invalid_argument("wedge_act: eta must be an Endomorphism 1-form");
  if (x.coeff() == Coeff::Endomorphism) return wedge_bracket(eta, x);
  FormField out(x.grid(), x.coeff(), x.rank(), x.twist(), x.degree() + 1);
  const HermitianMetric id(x.grid(), x.rank());
  const Coeff c = x.coeff();
  if (x.degree() == 0) {
    out.data(Part::p10) = left_mult(eta, Part::p10, false, id, c, x.data(Part::p00));
    out.data(Part::p01) = left_mult(eta, Part::p01, false, id, c, x.data(Part::p00));
  } else if (x.degree() == 1) {
    out.data(Part::p11) = left_mult(eta, Part::p10, false, id, c, x.data(Part::p01)) -
                          left_mult(eta, Part::p01, false, id, c, x.data(Part::p10));
  }
  return out;
}

FormField wedge_act_adjoint(const FormField& eta, const FormField& y, const HermitianMetric& h) {
  if (eta.coeff() != Coeff::Endomorphism || eta.degree() != 1)
    throw std::invalid_argument("wedge_act_adjoint: eta must be an Endomorphism 1-form");
  if (y.degree() == 0) throw std::invalid_argument("wedge_act_adjoint: degree 0 input has no image");
  const Coeff c = y.coeff();
  const double gi = y.grid().g_inv();
  FormField out(y.grid(), c, y.rank(), y.twist(), std::min(y.degree() - 1, 2));
  if (y.degree() == 1) {
    out.data(Part::p00) = gi * (left_mult(eta, Part::p10, true, h, c, y.data(Part::p10)) +
                                left_mult(eta, Part::p01, true, h, c, y.data(Part::p01)));
  } else if (y.degree() == 2) {
    out.data(Part::p01) = gi * left_mult(eta, Part::p10, true, h, c, y.data(Part::p11));
    out.data(Part::p10) = -gi * left_mult(eta, Part::p01, true, h, c, y.data(Part::p11));
  }
  return out;
}

}  // namespace higgs
