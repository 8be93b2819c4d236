#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "higgs/background.hpp"

namespace higgs {

// One Higgs bundle (E, dbar_A, Phi, h) over the torus.
struct BundleConfig {
  BackgroundPtr background;
  FormField a01;  // Endomorphism 1-form, dzbar part only
  FormField phi;  // Endomorphism 1-form, dz part only
  FormField h;    // Endomorphism 0-form, Hermitian positive-definite
  double higgs_residual = 0.0;
  std::uint64_t seed = 0;

  const TorusGrid& grid() const { return background->grid(); }
  int rank() const { return background->rank(); }
  int degree() const { return background->degree(); }
  HermitianMetric metric() const { return HermitianMetric(h); }

  FormField zero_field(Coeff c, int degree) const {
    return FormField(grid(), c, rank(), c == Coeff::Section ? this->degree() : 0, degree);
  }
};

// Flat bundle data: a01 = 0, Phi = 0, h = Id on the given background.
BundleConfig trivial_bundle(BackgroundPtr bg);
BundleConfig make_bundle(const TorusGrid& grid, int rank, int degree);

// Identity endomorphism 0-form; central 1-forms c Id dz / c Id dzbar.
FormField identity_field(const TorusGrid& grid, int rank);
FormField central_one_form(const TorusGrid& grid, int rank, cplx c, Part p);

// R_{z zbar} dz ^ dzbar of the Chern connection of (dbar_A, h), in the h-frame.
FormField chern_curvature(const BundleConfig& b);
// Same curvature after the complex gauge g = h^{1/2}: Hermitian coefficient.
FormField unitary_curvature(const BundleConfig& b);

// d = dbar_A + Phi on Endomorphism- or Section-valued forms.
FormField dolbeault_d(const BundleConfig& b, const FormField& f);
// Flat (unweighted, metric-free) adjoint of dolbeault_d.
FormField dolbeault_d_flat_adjoint(const BundleConfig& b, const FormField& f);
// dbar_A on a 0-form (dzbar coefficient only), and its flat adjoint.
FormField dbar_a(const BundleConfig& b, const FormField& f);

// ||dbar_A Phi|| / max(||Phi||, 1).
double check_higgs(const BundleConfig& b);
// (i/2pi) integral of Tr R.
double first_chern_number(const BundleConfig& b);

// Project Phi onto the numerical kernel of dbar_A on (1,0)-forms.
FormField project_holomorphic(const BundleConfig& b, const FormField& phi, double threshold = 1e-8);

struct RandomBundleOptions {
  double amplitude = 0.05;
  bool with_higgs = true;
};
BundleConfig random_bundle(std::uint64_t seed, const TorusGrid& grid, int rank, int degree, double roughness,
                           const RandomBundleOptions& opts = {});

// Smooth random Endomorphism coefficient array with bandwidth set by roughness in [0,1].
Eigen::VectorXcd random_smooth_end(const Background& bg, std::uint64_t seed, double roughness, double amplitude,
                                   bool hermitian);

nlohmann::json bundle_sidecar(const BundleConfig& b);
void save_bundle(const BundleConfig& b, const std::string& dir, const std::string& stem);

}  // namespace higgs
