#include "higgs/mutation.hpp"

namespace higgs {

namespace {
Mutation g_active = Mutation::none;
}

void set_mutation(Mutation m) { g_active = m; }
Mutation active_mutation() { return g_active; }
double mutation_sign(Mutation m) { return m == g_active ? -1.0 : 1.0; }

const std::vector<Mutation>& canned_mutations() {
  static const std::vector<Mutation> all = {Mutation::eq1_first,    Mutation::eq1_second,  Mutation::thm33_trace,
                                            Mutation::thm33_adjoint, Mutation::thm33_endo,  Mutation::thm33_wedge,
                                            Mutation::thm45_leading, Mutation::thm45_x1,    Mutation::thm45_z,
                                            Mutation::thm45_e};
  return all;
}

std::string mutation_name(Mutation m) {
  switch (m) {
    case Mutation::none: return "none";
    case Mutation::eq1_first: return "wp-first-term";
    case Mutation::eq1_second: return "wp-second-term";
    case Mutation::thm33_trace: return "dimage-trace-term";
    case Mutation::thm33_adjoint: return "dimage-adjoint-term";
    case Mutation::thm33_endo: return "dimage-endomorphism-term";
    case Mutation::thm33_wedge: return "dimage-wedge-term";
    case Mutation::thm45_leading: return "finsler-leading-term";
    case Mutation::thm45_x1: return "finsler-x1-term";
    case Mutation::thm45_z: return "finsler-z-term";
    case Mutation::thm45_e: return "finsler-e-term";
  }
  return "unknown";
}

}  // namespace higgs
