#pragma once

#include <random>

#include "higgs/hodge.hpp"

namespace higgs::test {

inline FormField random_field(const FormField& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  FormField f = FormField::zeros_like(shape);
  for (int s = 0; s < f.num_parts(); ++s)
    for (auto& v : f.slot_data(s)) v = cplx(normal(rng), normal(rng));
  return f;
}

inline double rel_diff(cplx a, cplx b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace higgs::test
