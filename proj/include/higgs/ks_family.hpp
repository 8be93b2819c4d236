#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "higgs/fd.hpp"
#include "higgs/he_solver.hpp"

namespace higgs {

// One monomial s^powers of the family data, with Endomorphism coefficient fields
// (a01 part p01, phi part p10).
struct FamilyTerm {
  std::vector<int> powers;
  FormField a01;
  FormField phi;
};

struct FamilyOptions {
  double he_tol = 1e-12;
  double fd_step = 1e-3;  // relative to radius
  double radius = 1.0;
  FlowOptions flow;
  HodgeOptions hodge;
  // Optional s-dependent rescaling h_s -> exp(f(s)) h_s of the solved metrics
  // (f evaluated at family coordinates). The HE condition fixes h_s only up to such a factor.
  std::function<double(const SVec&)> log_scale;
};

class FiberError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EtaCacheEntry {
  FormField eta;
  double fd_error = 0.0;
};

// Holomorphic family t -> (dbar_A(s(t)), Phi(s(t))) with HE metrics solved per fiber.
// The chart coordinate t maps to family coordinates through s = s0 + t + gamma(t, t)/2,
// which is the identity map unless the chart was reparametrized.
class FamilyChart {
 public:
  FamilyChart(std::string name, BackgroundPtr bg, int m, std::vector<FamilyTerm> terms, FamilyOptions opts = {});

  const std::string& name() const { return name_; }
  int dim() const { return m_; }
  const TorusGrid& grid() const { return bg_->grid(); }
  const BackgroundPtr& background() const { return bg_; }
  const FamilyOptions& options() const { return opts_; }
  FamilyOptions& options() { return opts_; }
  double fd_step() const { return opts_.fd_step * opts_.radius; }
  const std::vector<FamilyTerm>& terms() const { return terms_; }

  SVec to_family(const SVec& t) const;
  // ds_p / dt_i
  Eigen::MatrixXcd jacobian(const SVec& t) const;
  bool reparametrized() const { return !maps_.empty(); }

  // Quadratic holomorphic change x = origin + y + gamma(y, y)/2, gamma[p](i, k) symmetric.
  struct QuadMap {
    SVec origin;
    std::vector<Eigen::MatrixXcd> gamma;
    SVec apply(const SVec& y) const;
    Eigen::MatrixXcd jacobian(const SVec& y) const;
  };
  // New chart whose coordinate y maps to this chart's t = origin + y + gamma(y,y)/2.
  FamilyChart reparametrize(QuadMap map) const;

  // Family data at chart point t, metric set to the identity.
  BundleConfig data(const SVec& t) const;
  // d/dt_i of a01 (p01 part) and phi (p10 part), analytic.
  FormField d_data(const SVec& t, int i) const;
  // Solved fiber; cached by family coordinates and warm-started from the nearest cached fiber.
  const BundleConfig& fiber(const SVec& t);
  std::size_t solves() const { return cache_->solves; }
  const std::vector<FlowTrace>& traces() const { return cache_->traces; }

  const EtaCacheEntry* cached_eta(const SVec& t, int i) const;
  void store_eta(const SVec& t, int i, EtaCacheEntry e);

  nlohmann::json to_json() const;

 private:
  struct Cache {
    std::map<std::vector<double>, BundleConfig> fibers;  // as solved, mean log det h = 0
    std::map<std::vector<double>, BundleConfig> scaled;
    std::size_t solves = 0;
    std::vector<FlowTrace> traces;
  };
  const BundleConfig& scaled_fiber(const std::vector<double>& key, const SVec& s, const BundleConfig& solved);
  // a01 (p01) and phi (p10) at family point s; deriv >= 0 differentiates in s_deriv.
  FormField data_at_family(const SVec& s, int deriv) const;

  std::string name_;
  BackgroundPtr bg_;
  int m_;
  std::vector<FamilyTerm> terms_;
  FamilyOptions opts_;
  std::vector<QuadMap> maps_;  // outermost first
  std::shared_ptr<Cache> cache_;
  std::map<std::pair<std::vector<double>, int>, EtaCacheEntry> etas_;  // per chart, keyed by t
};

// Shipped families.
// F-ab: rank 1, degree 0, a01 = s1 dzbar, Phi = s2 dz, flat metric.
FamilyChart family_abelian(const TorusGrid& grid, FamilyOptions opts = {});
// F-st: rank 2, degree 1 (stable), a01 = A0 + s1 (Id + eps B), Phi = (c0 + s2) Id with B traceless smooth.
struct StableFamilyParams {
  double base_amplitude = 0.05;
  double eps = 0.3;
  cplx c0{0.5, 0.2};
  std::uint64_t seed = 17;
};
FamilyChart family_stable(const TorusGrid& grid, const StableFamilyParams& p = {}, FamilyOptions opts = {});
// F-di: the bundle-modulus slice of F-st at Phi = 0 (m = 1); H^0 of every fiber is one-dimensional.
FamilyChart family_direct_image(const TorusGrid& grid, const StableFamilyParams& p = {}, FamilyOptions opts = {});
// F-syn: rank 2, degree 1 with a non-holomorphic, non-central Phi; operator-level use only.
FamilyChart family_synthetic(const TorusGrid& grid, std::uint64_t seed = 23, FamilyOptions opts = {});

// Family description file: rank, degree, grid, seed, and per-monomial Weyl-mode
// coefficients for a01 and Phi.
FamilyChart family_from_json(const nlohmann::json& j, FamilyOptions opts = {});

// theta_i = h^{-1} dh/dt_i by finite differences (Richardson once).
FdValue<FormField> connection_form(FamilyChart& fam, const SVec& t, int i);

// eta_i = d/dt_i (a01 + Phi) - d theta_i, a harmonic Kodaira-Spencer representative.
struct EtaResult {
  FormField eta;
  double fd_error = 0.0;
  double d_residual = 0.0;      // ||d eta|| / ||eta||
  double dstar_residual = 0.0;  // ||d^dagger eta|| / ||eta||
};
EtaResult eta(FamilyChart& fam, const SVec& t, int i);
FormField eta_field(FamilyChart& fam, const SVec& t, int i);

// R_{i jbar} = h^{-1}(dbar_j h) h^{-1}(d_i h) - h^{-1} d_i dbar_j h.
FdValue<FormField> mixed_curvature_Rij(FamilyChart& fam, const SVec& t, int i, int j);

// Covariant s-derivative of an Endomorphism field path: nabla_i = d_i + [theta_i, .],
// nabla_ibar = d_ibar.
using FieldPath = std::function<FormField(const SVec&)>;
FdValue<FormField> covariant_s_derivative(FamilyChart& fam, const SVec& t, int i, bool conj, const FieldPath& path);

// WP metric <eta_i, eta_j>.
Eigen::MatrixXcd wp_metric(FamilyChart& fam, const SVec& t);

// Chart in WP-normal coordinates centred at t0 (first derivatives of G^WP vanish there).
FamilyChart normal_coordinates(FamilyChart& fam, const SVec& t0);
// max |dG^WP/dt_k| at t0 with its FD error.
FdValue<double> wp_first_derivative(FamilyChart& fam, const SVec& t0);

struct Lemma21Residuals {
  std::array<double, 5> residual{};  // relative
  std::array<double, 5> absolute{};
};
Lemma21Residuals check_lemma21(FamilyChart& fam, const SVec& t);

// ||d[H(xi), G(H(xi)^dagger H(xi))]||, ||d^dagger[...]|| normalized by ||H||^3.
std::pair<double, double> check_rel_harmonic(FamilyChart& fam, const SVec& t, const SVec& xi);

// Hodge engine for the End complex of the solved fiber at t.
HodgeEngine fiber_engine(FamilyChart& fam, const SVec& t, Coeff c = Coeff::Endomorphism);

}  // namespace higgs
