#include "higgs/torus_grid.hpp"

#include <cmath>

namespace higgs {

TorusGrid::TorusGrid(int n, cplx tau, double scale) : n_(n), tau_(tau), scale_(scale) {
  if (n < 8) throw std::invalid_argument("TorusGrid: N must be at least 8");
  if (!(tau.imag() > 0.0)) throw std::invalid_argument("TorusGrid: Im(tau) must be positive");
  if (!(scale > 0.0)) throw std::invalid_argument("TorusGrid: scale must be positive");
}

TorusGrid build_torus(int n, cplx tau, double scale) { return TorusGrid(n, tau, scale); }

}  // namespace higgs
