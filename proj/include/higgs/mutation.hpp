#pragma once

#include <string>
#include <vector>

namespace higgs {

// Canned single sign flips in the curvature formulas, used by the mutation guard.
enum class Mutation {
  none,
  eq1_first,       // first R box R term of the WP curvature
  eq1_second,      // second R box R term
  thm33_trace,     // c_{i jbar} H term of the direct-image curvature
  thm33_adjoint,   // <G(eta_j^dagger t_a), eta_i^dagger t_b>
  thm33_endo,      // <G(eta_j^dagger eta_i) t_a, t_b>
  thm33_wedge,     // <G(eta_i t_a), eta_j t_b>
  thm45_leading,   // 2a(2<eta^dagger eta, G eta^dagger eta> - f) term
  thm45_x1,        // 5 X1
  thm45_z,         // 4 Z
  thm45_e,         // kappa^2 E term
};

void set_mutation(Mutation m);
Mutation active_mutation();
// -1 when m is the active mutation, +1 otherwise.
double mutation_sign(Mutation m);

const std::vector<Mutation>& canned_mutations();
std::string mutation_name(Mutation m);

}  // namespace higgs
