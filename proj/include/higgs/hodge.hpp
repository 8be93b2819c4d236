#pragma once

#include <Eigen/Sparse>
#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "higgs/bundle.hpp"

namespace higgs {

struct HodgeOptions {
  double harmonic_rel_threshold = 1e-6;  // relative to the largest eigenvalue estimate
  double gap_factor = 10.0;
  double green_rtol = 1e-10;
  int initial_block = 8;
  std::uint64_t seed = 12345;
};

struct HarmonicBasis {
  int degree = 0;
  Coeff coeff = Coeff::Endomorphism;
  std::vector<FormField> fields;  // orthonormal in the global inner product
  Eigen::MatrixXcd gram;
  std::vector<double> eigenvalues;  // Rayleigh quotients of the retained fields
  double threshold = 0.0;
  double lambda_max = 0.0;
  double first_nonzero = 0.0;  // smallest eigenvalue above threshold
  bool reliable = true;
  int iterations = 0;
  std::size_t dim() const { return fields.size(); }
};

struct GreenStats {
  int iterations = 0;
  double residual = 0.0;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

// Discrete Hodge theory of d = dbar_A + Phi on one coefficient bundle.
// Operators in flat coordinates are conjugated by S = sqrt(w m_k) J^{1/2}
// (J the metric action), so the assembled Laplacian is Hermitian.
class HodgeEngine {
 public:
  HodgeEngine(BundleConfig b, Coeff coeff, HodgeOptions opts = {});
  ~HodgeEngine();
  HodgeEngine(HodgeEngine&&) noexcept;
  HodgeEngine& operator=(HodgeEngine&&) noexcept;

  const BundleConfig& bundle() const { return b_; }
  Coeff coeff() const { return coeff_; }
  const HermitianMetric& metric() const { return metric_; }
  const HodgeOptions& options() const { return opts_; }

  FormField zero(int degree) const { return b_.zero_field(coeff_, degree); }
  cplx inner(const FormField& a, const FormField& b) const { return global_inner_product(a, b, metric_); }
  double norm(const FormField& a) const { return std::sqrt(std::max(0.0, inner(a, a).real())); }

  FormField d(const FormField& f) const;
  FormField d_adjoint(const FormField& f) const;
  FormField laplacian(const FormField& f) const;

  const HarmonicBasis& harmonic_basis(int degree);
  FormField project(const FormField& f);
  FormField green(const FormField& f, GreenStats* stats = nullptr);

  // Flat-coordinate helpers (exposed for the oracle and tests).
  Eigen::VectorXcd to_flat(const FormField& f) const;
  FormField from_flat(const Eigen::VectorXcd& y, int degree) const;
  const Eigen::SparseMatrix<cplx>& assembled_laplacian(int degree);

 private:
  struct DegreeCache;
  DegreeCache& cache(int degree);
  void assemble(int degree);
  void factor(int degree);
  void compute_basis(int degree);

  BundleConfig b_;
  Coeff coeff_;
  HodgeOptions opts_;
  HermitianMetric metric_;
  std::array<std::unique_ptr<DegreeCache>, 3> caches_;
};

// Free-function forms; each builds a throwaway engine.
FormField d_adjoint(const BundleConfig& b, const FormField& f);
FormField laplacian(const BundleConfig& b, const FormField& f);
HarmonicBasis harmonic_basis(const BundleConfig& b, int degree, Coeff coeff, const HodgeOptions& opts = {});
FormField green(const BundleConfig& b, const FormField& f, const HodgeOptions& opts = {});
FormField harmonic_project(const BundleConfig& b, const FormField& f, const HodgeOptions& opts = {});

// Lambda [A^* ^ B] with the sign split -i Lambda[alpha^* ^ .] + i Lambda[beta^* ^ .];
// equals (ad A)^dagger B.
FormField lambda_bracket_pairing(const FormField& A, const FormField& B, const HermitianMetric& h);

// Pointwise wedge action of an Endomorphism 1-form eta on a field of either tag:
// [eta ^ X] for Endomorphisms, eta ^ t for sections; and its exact adjoint.
FormField wedge_act(const FormField& eta, const FormField& x);
FormField wedge_act_adjoint(const FormField& eta, const FormField& y, const HermitianMetric& h);

}  // namespace higgs
