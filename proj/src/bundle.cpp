#include "higgs/bundle.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

namespace higgs {

BundleConfig trivial_bundle(BackgroundPtr bg) {
  BundleConfig b;
  const TorusGrid& g = bg->grid();
  const int r = bg->rank();
  b.background = std::move(bg);
  b.a01 = FormField(g, Coeff::Endomorphism, r, 0, 1);
  b.phi = FormField(g, Coeff::Endomorphism, r, 0, 1);
  b.h = identity_field(g, r);
  return b;
}

BundleConfig make_bundle(const TorusGrid& grid, int rank, int degree) {
  return trivial_bundle(std::make_shared<const Background>(grid, rank, degree));
}

FormField identity_field(const TorusGrid& grid, int rank) {
  FormField f(grid, Coeff::Endomorphism, rank, 0, 0);
  for (std::size_t s = 0; s < f.sites(); ++s) f.mat(Part::p00, s).setIdentity();
  return f;
}

FormField central_one_form(const TorusGrid& grid, int rank, cplx c, Part p) {
  FormField f(grid, Coeff::Endomorphism, rank, 0, 1);
  for (std::size_t s = 0; s < f.sites(); ++s) f.mat(p, s) = c * Eigen::MatrixXcd::Identity(rank, rank);
  return f;
}

namespace {

// [X, f] for Endomorphisms, X f for sections; X^dagger instead of X when adjoint.
Eigen::VectorXcd left_action(const FormField& x, Part px, const Eigen::VectorXcd& in, Coeff c, bool adjoint) {
  const int r = x.rank();
  const std::size_t sites = x.sites();
  Eigen::VectorXcd out(in.size());
  if (c == Coeff::Endomorphism) {
    const std::size_t rr = static_cast<std::size_t>(r * r);
    for (std::size_t s = 0; s < sites; ++s) {
      const Mat X = adjoint ? Mat(x.mat(px, s).adjoint()) : Mat(x.mat(px, s));
      Eigen::Map<const Eigen::MatrixXcd> F(in.data() + s * rr, r, r);
      Eigen::Map<Eigen::MatrixXcd> O(out.data() + s * rr, r, r);
      O.noalias() = X * F;
      O.noalias() -= F * X;
    }
  } else {
    for (std::size_t s = 0; s < sites; ++s) {
      const Mat X = adjoint ? Mat(x.mat(px, s).adjoint()) : Mat(x.mat(px, s));
      Eigen::Map<const Eigen::VectorXcd> F(in.data() + s * r, r);
      Eigen::Map<Eigen::VectorXcd> O(out.data() + s * r, r);
      O.noalias() = X * F;
    }
  }
  return out;
}

void require_compatible(const BundleConfig& b, const FormField& f, const char* where) {
  if (f.rank() != b.rank() || !(f.grid() == b.grid()))
    throw std::invalid_argument(std::string(where) + ": rank/grid mismatch with bundle");
  if (f.coeff() == Coeff::Section && f.twist() != b.degree())
    throw std::invalid_argument(std::string(where) + ": section twist differs from bundle degree");
}

}  // namespace

FormField dolbeault_d(const BundleConfig& b, const FormField& f) {
  require_compatible(b, f, "dolbeault_d");
  const Background& bg = *b.background;
  const Coeff c = f.coeff();
  FormField out(f.grid(), c, f.rank(), f.twist(), f.degree() + 1);
  if (f.degree() == 0) {
    const Eigen::VectorXcd& f0 = f.data(Part::p00);
    out.data(Part::p10) = left_action(b.phi, Part::p10, f0, c, false);
    out.data(Part::p01) = stencil::dbar(bg, c, f0) + left_action(b.a01, Part::p01, f0, c, false);
  } else if (f.degree() == 1) {
    const Eigen::VectorXcd& al = f.data(Part::p10);
    const Eigen::VectorXcd& be = f.data(Part::p01);
    out.data(Part::p11) = left_action(b.phi, Part::p10, be, c, false) - stencil::dbar(bg, c, al) -
                          left_action(b.a01, Part::p01, al, c, false);
  }
  return out;
}

FormField dolbeault_d_flat_adjoint(const BundleConfig& b, const FormField& f) {
  require_compatible(b, f, "dolbeault_d_flat_adjoint");
  if (f.degree() == 0) throw std::invalid_argument("dolbeault_d adjoint: degree 0 input has no image");
  const Background& bg = *b.background;
  const Coeff c = f.coeff();
  FormField out(f.grid(), c, f.rank(), f.twist(), f.degree() - 1);
  if (f.degree() == 1) {
    const Eigen::VectorXcd& al = f.data(Part::p10);
    const Eigen::VectorXcd& be = f.data(Part::p01);
    out.data(Part::p00) = left_action(b.phi, Part::p10, al, c, true) + stencil::dbar_adjoint(bg, c, be) +
                          left_action(b.a01, Part::p01, be, c, true);
  } else if (f.degree() == 2) {
    const Eigen::VectorXcd& ga = f.data(Part::p11);
    out.data(Part::p10) = -(stencil::dbar_adjoint(bg, c, ga) + left_action(b.a01, Part::p01, ga, c, true));
    out.data(Part::p01) = left_action(b.phi, Part::p10, ga, c, true);
  }
  return out;
}

FormField dbar_a(const BundleConfig& b, const FormField& f) {
  require_compatible(b, f, "dbar_a");
  if (f.degree() != 0) throw std::invalid_argument("dbar_a: expects a 0-form");
  FormField out(f.grid(), f.coeff(), f.rank(), f.twist(), 1);
  const Eigen::VectorXcd& f0 = f.data(Part::p00);
  out.data(Part::p01) =
      stencil::dbar(*b.background, f.coeff(), f0) + left_action(b.a01, Part::p01, f0, f.coeff(), false);
  return out;
}

FormField unitary_curvature(const BundleConfig& b) {
  const Background& bg = *b.background;
  const TorusGrid& grid = bg.grid();
  const int r = b.rank();
  const std::size_t rr = static_cast<std::size_t>(r * r);
  const HermitianMetric hm = b.metric();
  const std::size_t n = grid.sites();

  Eigen::VectorXcd g(static_cast<Eigen::Index>(n * rr));
  for (std::size_t s = 0; s < n; ++s) Eigen::Map<Eigen::MatrixXcd>(g.data() + s * rr, r, r) = hm.sqrt(s);
  const Eigen::VectorXcd dg = stencil::central_dbar(bg, Coeff::Endomorphism, g);

  // (0,1) part of the unitary-frame connection: g a g^{-1} - (dbar g) g^{-1}
  Eigen::VectorXcd bz(g.size()), bzd(g.size());
  for (std::size_t s = 0; s < n; ++s) {
    const Mat A = b.a01.mat(Part::p01, s);
    Eigen::Map<const Eigen::MatrixXcd> DG(dg.data() + s * rr, r, r);
    const Mat B = hm.sqrt(s) * A * hm.sqrt_inv(s) - DG * hm.sqrt_inv(s);
    Eigen::Map<Eigen::MatrixXcd>(bz.data() + s * rr, r, r) = B;
    Eigen::Map<Eigen::MatrixXcd>(bzd.data() + s * rr, r, r) = B.adjoint();
  }
  const Eigen::VectorXcd db = stencil::central_d(bg, Coeff::Endomorphism, bz);
  const Eigen::VectorXcd dbd = stencil::central_dbar(bg, Coeff::Endomorphism, bzd);

  FormField out(grid, Coeff::Endomorphism, r, 0, 2);
  const double fbg = bg.curvature_zzbar();
  for (std::size_t s = 0; s < n; ++s) {
    Eigen::Map<const Eigen::MatrixXcd> B(bz.data() + s * rr, r, r), Bd(bzd.data() + s * rr, r, r);
    Eigen::Map<const Eigen::MatrixXcd> T1(db.data() + s * rr, r, r), T2(dbd.data() + s * rr, r, r);
    Mat F = T1 + T2 - (Bd * B - B * Bd);
    F.diagonal().array() += fbg;
    out.mat(Part::p11, s) = F;
  }
  return out;
}

FormField chern_curvature(const BundleConfig& b) {
  FormField f = unitary_curvature(b);
  if (b.h.coeff_norm() == 0.0) throw std::domain_error("chern_curvature: singular metric");
  const HermitianMetric hm = b.metric();
  for (std::size_t s = 0; s < f.sites(); ++s) {
    const Mat F = f.mat(Part::p11, s);
    f.mat(Part::p11, s) = hm.sqrt_inv(s) * F * hm.sqrt(s);
  }
  return f;
}

double check_higgs(const BundleConfig& b) {
  FormField phi0(b.grid(), Coeff::Endomorphism, b.rank(), 0, 0);
  phi0.data(Part::p00) = b.phi.data(Part::p10);
  const FormField d = dbar_a(b, phi0);
  const HermitianMetric id(b.grid(), b.rank());
  const double num = std::sqrt(std::max(0.0, global_inner_product(d, d, id).real()));
  const double den = std::sqrt(std::max(0.0, global_inner_product(phi0, phi0, id).real()));
  return num / std::max(den, 1.0);
}

double first_chern_number(const BundleConfig& b) {
  const FormField f = chern_curvature(b);
  cplx tr = 0.0;
  for (std::size_t s = 0; s < f.sites(); ++s) tr += f.mat(Part::p11, s).trace();
  const TorusGrid& g = b.grid();
  // (i/2pi) * (-2i) * coordinate area per cell
  return (tr * g.tau().imag() / (kPi * static_cast<double>(g.sites()))).real();
}

Eigen::VectorXcd random_smooth_end(const Background& bg, std::uint64_t seed, double roughness, double amplitude,
                                   bool hermitian) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int r = bg.rank();
  const int kmax = std::max(1, static_cast<int>(std::lround(roughness * bg.grid().n() / 4.0)));
  std::vector<WeylFourier::Mode> modes;
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      for (int nu = -kmax; nu <= kmax; ++nu)
        for (int nv = -kmax; nv <= kmax; ++nv) {
          const double decay = 1.0 / (1.0 + nu * nu + nv * nv);
          const double re = normal(rng), im = normal(rng);
          modes.push_back({a, b, nu, nv, amplitude * decay * cplx(re, im)});
        }
  WeylFourier wf(std::make_shared<const Background>(bg));
  Eigen::VectorXcd x = wf.synthesize(modes);
  if (hermitian) {
    const std::size_t rr = static_cast<std::size_t>(r * r);
    for (std::size_t s = 0; s < bg.grid().sites(); ++s) {
      Eigen::Map<Eigen::MatrixXcd> X(x.data() + s * rr, r, r);
      const Mat H = 0.5 * (X + X.adjoint());
      X = H;
    }
  }
  return x;
}

BundleConfig random_bundle(std::uint64_t seed, const TorusGrid& grid, int rank, int degree, double roughness,
                           const RandomBundleOptions& opts) {
  if (roughness < 0.0 || roughness > 1.0) throw std::invalid_argument("random_bundle: roughness outside [0,1]");
  BundleConfig b = make_bundle(grid, rank, degree);
  b.seed = seed;
  const Background& bg = *b.background;
  const int r = rank;
  const std::size_t rr = static_cast<std::size_t>(r * r);
  b.a01.data(Part::p01) = random_smooth_end(bg, seed * 4 + 1, roughness, opts.amplitude, false);
  const Eigen::VectorXcd herm = random_smooth_end(bg, seed * 4 + 2, roughness, opts.amplitude, true);
  for (std::size_t s = 0; s < grid.sites(); ++s) {
    Eigen::Map<const Eigen::MatrixXcd> X(herm.data() + s * rr, r, r);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(X);
    b.h.mat(Part::p00, s) =
        es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().adjoint();
  }
  if (opts.with_higgs) {
    std::mt19937_64 rng(seed * 4 + 3);
    std::normal_distribution<double> normal(0.0, 1.0);
    const cplx c(normal(rng), normal(rng));
    FormField phi = central_one_form(grid, r, c, Part::p10);
    if (r > 1) {
      FormField bump(grid, Coeff::Endomorphism, r, 0, 1);
      bump.data(Part::p10) = random_smooth_end(bg, seed * 4 + 4, roughness, opts.amplitude, false);
      phi += bump;
    }
    b.phi = project_holomorphic(b, phi);
  }
  b.higgs_residual = check_higgs(b);
  return b;
}

nlohmann::json bundle_sidecar(const BundleConfig& b) {
  const TorusGrid& g = b.grid();
  return nlohmann::json{{"rank", b.rank()},
                        {"degree", b.degree()},
                        {"N", g.n()},
                        {"tau", {g.tau().real(), g.tau().imag()}},
                        {"scale", g.scale()},
                        {"seed", b.seed},
                        {"residuals", {{"higgs", check_higgs(b)}, {"first_chern", first_chern_number(b)}}}};
}

void save_bundle(const BundleConfig& b, const std::string& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base = std::filesystem::path(dir) / stem;
  write_snapshot(b.a01, base.string() + ".a01.bin");
  write_snapshot(b.phi, base.string() + ".phi.bin");
  write_snapshot(b.h, base.string() + ".h.bin");
  std::ofstream(base.string() + ".json") << bundle_sidecar(b).dump(2) << "\n";
}

}  // namespace higgs
