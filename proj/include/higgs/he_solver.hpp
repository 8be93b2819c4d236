#pragma once

#include <json.hpp>
#include <utility>
#include <vector>

#include "higgs/hodge.hpp"

namespace higgs {

struct FlowOptions {
  double tol = 1e-8;
  int max_steps = 400;
  double initial_step = 1.0;
  double max_step = 1.0;
  // shift of the spectral preconditioner, relative to its lowest nonzero symbol
  double shift = 1e-2;
};

struct FlowTrace {
  std::vector<double> residuals;
  std::vector<double> steps;
  double lambda = 0.0;
  bool converged = false;
  int rejected = 0;

  nlohmann::json to_json() const;
};

class FlowFailure : public std::runtime_error {
 public:
  FlowFailure(const std::string& what, FlowTrace t) : std::runtime_error(what), trace_(std::move(t)) {}
  const FlowTrace& trace() const { return trace_; }

 private:
  FlowTrace trace_;
};

// (1/(r Vol)) * integral of Tr(i Lambda(R + [Phi, Phi^*])).
double einstein_constant(const BundleConfig& b);

// i Lambda(R + [Phi, Phi^*]) in the unitary frame g = h^{1/2}; a Hermitian 0-form.
FormField he_operator_unitary(const BundleConfig& b);
// The same operator in the h-frame.
FormField he_operator(const BundleConfig& b);

// ||K - lambda Id|| / ||lambda Id|| (absolute when lambda = 0).
double he_residual(const BundleConfig& b);

// Preconditioned Donaldson heat flow h <- g exp(-eps M^{-1}(K - lambda)) g with
// adaptive eps; mean log det h is held at its initial value.
std::pair<BundleConfig, FlowTrace> donaldson_flow(const BundleConfig& b, const FlowOptions& opts = {});

struct Simplicity {
  bool simple = false;
  std::size_t dimension = 0;
  bool reliable = true;
};
Simplicity check_simple(const BundleConfig& b, const HodgeOptions& opts = {});

}  // namespace higgs
