#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "higgs/ks_family.hpp"

namespace higgs {

// Dense complex 4-tensor, flattened i-major (then j, k, l).
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int n0, int n1, int n2, int n3)
      : dims_{n0, n1, n2, n3}, v_(static_cast<std::size_t>(n0) * n1 * n2 * n3, cplx(0.0)) {}
  static Tensor4 cube(int m) { return Tensor4(m, m, m, m); }

  const std::array<int, 4>& dims() const { return dims_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  cplx& operator()(int i, int j, int k, int l) { return v_[index(i, j, k, l)]; }
  cplx operator()(int i, int j, int k, int l) const { return v_[index(i, j, k, l)]; }
  const std::vector<cplx>& values() const { return v_; }

  Tensor4& operator+=(const Tensor4& o);
  Tensor4 scaled(cplx c) const;
  double max_abs() const;

  nlohmann::json to_json() const;
  // One row per entry: i,j,k,l,re,im.
  std::string to_csv() const;

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k) * dims_[3] + l;
  }
  std::array<int, 4> dims_{0, 0, 0, 0};
  std::vector<cplx> v_;
};

Tensor4 operator-(const Tensor4& a, const Tensor4& b);

// Integral of Tr(A B) over X for Endomorphism 0-forms (bilinear, no adjoint).
cplx trace_pairing(const FormField& a, const FormField& b);

struct WpCurvature {
  Tensor4 tensor;  // R_{i jbar k lbar}
  Tensor4 first;   // integral Tr(R_{i jbar} box R_{k lbar}), symmetrized in the two factors
  Tensor4 second;  // integral Tr(R_{i lbar} box R_{k jbar})
  // The [eta ^ eta] G [eta* ^ eta*] term carries omega^{n-2}; it vanishes identically at n = 1.
  bool bracket_term_structural_zero = true;
  // <[eta_i ^ eta_k], G[eta_j ^ eta_l]>, the same pairing read as a 2-form pairing; diagnostic only.
  Tensor4 bracket_pairing;
  double fd_error = 0.0;  // bound on the tensor error from the FD of R_{i jbar}
  double symmetry_residual = 0.0;  // all Kaehler symmetries, relative
  double swap_residual = 0.0;      // R_{i jbar k lbar} = R_{k jbar i lbar} = R_{i lbar k jbar} only
};
WpCurvature wp_curvature_formula(FamilyChart& fam, const SVec& t);

// Holomorphic sectional values 2 integral Tr(R_{i ibar} box R_{i ibar}), one per direction.
std::vector<double> wp_sectional_values(const WpCurvature& c);

// Harmonic basis of Section-valued degree-d fields of d = dbar_A + Phi.
HarmonicBasis dimage_basis(const BundleConfig& b, int d, const HodgeOptions& opts = {});
// Gram matrix H_{a bbar} = <t_a, t_b> of the given fields.
Eigen::MatrixXcd dimage_metric(const BundleConfig& b, const std::vector<FormField>& frame);
Eigen::MatrixXcd dimage_metric(const HarmonicBasis& basis, const BundleConfig& b);

class DimensionJump : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DimageCurvature {
  int degree = 0;
  int dimension = 0;
  Eigen::MatrixXcd H;      // Gram of the harmonic basis (orthonormal: identity)
  Eigen::MatrixXcd trace;  // c_{i jbar}
  // Individual terms, indexed (a, b, i, j).
  Tensor4 trace_term, adjoint_term, endo_term, wedge_term;
  Tensor4 tensor;
  bool adjoint_term_structural_zero = false;  // d = 0
  double symmetry_residual = 0.0;
  // max over (i, j, a, b) of |c H + endo - <R_{i jbar} t_a, t_b>|, relative
  double ricci_residual = 0.0;
};
DimageCurvature dimage_curvature(FamilyChart& fam, const SVec& t, int d);

// c_{i jbar} = (1 / (r Vol)) integral Tr R_{i jbar}.
Eigen::MatrixXcd trace_term_coefficients(FamilyChart& fam, const SVec& t);

struct ChernScalar {
  Eigen::MatrixXcd formula;  // sum_ab (r H^{-1})
  Eigen::MatrixXcd fd;       // -d_i dbar_j log det H in a holomorphic frame
  Eigen::MatrixXcd fd_error;
  double relative_gap = 0.0;
  bool empty = false;
};
// Degree-0 only: the holomorphic frame is the oblique projection of the base-point kernel.
ChernScalar chern_scalar_check(FamilyChart& fam, const SVec& t0, int d, double fd_step);

struct RecoveryCheck {
  Tensor4 template_tensor;  // curvature template on the End complex with t_a = eta_a
  Tensor4 formula_tensor;
  double deviation = 0.0;   // max |diff| / max |formula|, or absolute when both vanish
  double scale = 0.0;
  std::vector<double> principal_angles;  // span{eta_i} vs harmonic End 1-forms (radians)
  double wedge_term = 0.0;  // max |<G[eta_i ^ eta_a], [eta_j ^ eta_b]>|
};
RecoveryCheck recover_bs_check(FamilyChart& fam, const SVec& t);
// Same with perturbed eta fields (negative control).
RecoveryCheck recover_bs_check(FamilyChart& fam, const SVec& t, const std::vector<FormField>& etas);

struct CurvatureReport {
  std::string family;
  int grid_n = 0;
  Eigen::MatrixXcd wp_metric;
  WpCurvature wp_curvature;
  std::map<int, DimageCurvature> dimage;
  std::map<std::string, double> residuals;
  nlohmann::json provenance;
  nlohmann::json oracles = nlohmann::json::object();

  nlohmann::json to_json() const;
  void write(const std::string& dir) const;  // report.json plus one CSV per tensor
};

nlohmann::json matrix_to_json(const Eigen::MatrixXcd& m);

}  // namespace higgs
