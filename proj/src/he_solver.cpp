#include "higgs/he_solver.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace higgs {

nlohmann::json FlowTrace::to_json() const {
  return nlohmann::json{{"residuals", residuals},
                        {"steps", steps},
                        {"lambda", lambda},
                        {"converged", converged},
                        {"rejected", rejected}};
}

double einstein_constant(const BundleConfig& b) {
  const FormField k = he_operator_unitary(b);
  cplx tr = 0.0;
  for (std::size_t s = 0; s < k.sites(); ++s) tr += k.mat(Part::p00, s).trace();
  return tr.real() / (static_cast<double>(b.rank()) * static_cast<double>(k.sites()));
}

FormField he_operator_unitary(const BundleConfig& b) {
  const FormField F = unitary_curvature(b);
  const HermitianMetric hm = b.metric();
  const double gi = b.grid().g_inv();
  FormField k(b.grid(), Coeff::Endomorphism, b.rank(), 0, 0);
  for (std::size_t s = 0; s < k.sites(); ++s) {
    const Mat phi = hm.is_identity() ? Mat(b.phi.mat(Part::p10, s))
                                     : Mat(hm.sqrt(s) * b.phi.mat(Part::p10, s) * hm.sqrt_inv(s));
    const Mat pd = phi.adjoint();
    Mat K = gi * (F.mat(Part::p11, s) + phi * pd - pd * phi);
    k.mat(Part::p00, s) = 0.5 * (K + K.adjoint());
  }
  return k;
}

FormField he_operator(const BundleConfig& b) {
  FormField k = he_operator_unitary(b);
  const HermitianMetric hm = b.metric();
  if (hm.is_identity()) return k;
  for (std::size_t s = 0; s < k.sites(); ++s) {
    const Mat K = k.mat(Part::p00, s);
    k.mat(Part::p00, s) = hm.sqrt_inv(s) * K * hm.sqrt(s);
  }
  return k;
}

namespace {

double residual_of(const FormField& k, double lambda, int rank) {
  double num = 0.0;
  for (std::size_t s = 0; s < k.sites(); ++s) {
    Mat D = k.mat(Part::p00, s);
    D.diagonal().array() -= lambda;
    num += D.squaredNorm();
  }
  num = std::sqrt(num / static_cast<double>(k.sites()));
  const double den = std::abs(lambda) * std::sqrt(static_cast<double>(rank));
  return den > 0.0 ? num / den : num;
}

double mean_log_det(const FormField& h) {
  double acc = 0.0;
  for (std::size_t s = 0; s < h.sites(); ++s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.mat(Part::p00, s), Eigen::EigenvaluesOnly);
    acc += es.eigenvalues().array().log().sum();
  }
  return acc / static_cast<double>(h.sites());
}

}  // namespace

double he_residual(const BundleConfig& b) {
  return residual_of(he_operator_unitary(b), einstein_constant(b), b.rank());
}

std::pair<BundleConfig, FlowTrace> donaldson_flow(const BundleConfig& b0, const FlowOptions& opts) {
  BundleConfig b = b0;
  FlowTrace trace;
  const TorusGrid& grid = b.grid();
  const int r = b.rank();
  const double lambda = einstein_constant(b);
  trace.lambda = lambda;
  const double target_ld = mean_log_det(b.h);

  const WeylFourier wf(b.background);
  const double h = grid.spacing();
  const cplx cu = grid.dbar_cu(), cv = grid.dbar_cv();
  const double gi = grid.g_inv();
  const double low = gi * std::pow(2.0 * kPi * std::min(std::abs(cu), std::abs(cv)), 2);
  const double mu = opts.shift * low;
  auto precond = [&](double ku, double kv) {
    const cplx sig = (cu * I * std::sin(ku) + cv * I * std::sin(kv)) / h;
    return 1.0 / (gi * std::norm(sig) + mu);
  };

  FormField K = he_operator_unitary(b);
  double res = residual_of(K, lambda, r);
  trace.residuals.push_back(res);
  double eps = opts.initial_step;
  for (int step = 0; step < opts.max_steps && res > opts.tol; ++step) {
    FormField dev = K;
    for (std::size_t s = 0; s < dev.sites(); ++s) dev.mat(Part::p00, s).diagonal().array() -= lambda;
    const Eigen::VectorXcd xi = wf.apply_multiplier(dev.data(Part::p00), precond);
    const HermitianMetric hm = b.metric();

    bool accepted = false;
    while (!accepted) {
      BundleConfig trial = b;
      for (std::size_t s = 0; s < grid.sites(); ++s) {
        Eigen::Map<const Eigen::MatrixXcd> X(xi.data() + s * static_cast<std::size_t>(r * r), r, r);
        const Mat Xh = 0.5 * (X + X.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Xh);
        const Mat E = es.eigenvectors() * (-eps * es.eigenvalues().array()).exp().matrix().asDiagonal() *
                      es.eigenvectors().adjoint();
        const Mat H = hm.sqrt(s) * E * hm.sqrt(s);
        trial.h.mat(Part::p00, s) = 0.5 * (H + H.adjoint());
      }
      const double shift = std::exp(-(mean_log_det(trial.h) - target_ld) / r);
      trial.h *= shift;
      FormField Kt = he_operator_unitary(trial);
      const double rt = residual_of(Kt, lambda, r);
      if (std::isfinite(rt) && rt < res) {
        b = std::move(trial);
        K = std::move(Kt);
        res = rt;
        trace.residuals.push_back(res);
        trace.steps.push_back(eps);
        eps = std::min(opts.max_step, 1.5 * eps);
        accepted = true;
      } else {
        ++trace.rejected;
        eps *= 0.5;
        if (eps < 1e-12) throw FlowFailure("donaldson_flow: step size underflow", trace);
      }
    }
  }
  trace.converged = res <= opts.tol;
  if (!trace.converged) throw FlowFailure("donaldson_flow: step budget exhausted", trace);
  return {std::move(b), std::move(trace)};
}

Simplicity check_simple(const BundleConfig& b, const HodgeOptions& opts) {
  HodgeEngine e(b, Coeff::Endomorphism, opts);
  const HarmonicBasis& hb = e.harmonic_basis(0);
  const FormField id = identity_field(b.grid(), b.rank());
  const double rq = e.inner(e.laplacian(id), id).real() / e.inner(id, id).real();
  Simplicity out;
  out.dimension = hb.dim();
  out.reliable = hb.reliable;
  out.simple = hb.dim() == 1 && rq < hb.threshold;
  return out;
}

}  // namespace higgs
