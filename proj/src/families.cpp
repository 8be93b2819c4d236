#include <cmath>
#include <random>

#include "higgs/ks_family.hpp"

namespace higgs {

namespace {

FormField zero_one_form(const Background& bg) { return FormField(bg.grid(), Coeff::Endomorphism, bg.rank(), 0, 1); }

FormField as_part(const Background& bg, const Eigen::VectorXcd& coef, Part p) {
  FormField f = zero_one_form(bg);
  f.data(p) = coef;
  return f;
}

Eigen::VectorXcd identity_coef(const Background& bg) {
  return identity_field(bg.grid(), bg.rank()).data(Part::p00);
}

// Random field built from the lowest quasi-periodic Weyl modes only (|n + theta| <= 1/2).
Eigen::VectorXcd smooth_end(const Background& bg, std::uint64_t seed, double amplitude, bool traceless) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int r = bg.rank();
  std::vector<WeylFourier::Mode> modes;
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) {
      if (traceless && a == 0 && b == 0) continue;
      const bool hu = bg.weyl_theta_u(a, b) != 0.0, hv = bg.weyl_theta_v(a, b) != 0.0;
      for (int nu = hu ? -1 : 0; nu <= 0; ++nu)
        for (int nv = hv ? -1 : 0; nv <= 0; ++nv) {
          const double re = normal(rng), im = normal(rng);
          modes.push_back({a, b, nu, nv, amplitude * cplx(re, im)});
        }
    }
  return WeylFourier(std::make_shared<const Background>(bg)).synthesize(modes);
}

}  // namespace

FamilyChart family_abelian(const TorusGrid& grid, FamilyOptions opts) {
  auto bg = std::make_shared<const Background>(grid, 1, 0);
  const Eigen::VectorXcd one = identity_coef(*bg);
  std::vector<FamilyTerm> terms;
  terms.push_back({{1, 0}, as_part(*bg, one, Part::p01), zero_one_form(*bg)});
  terms.push_back({{0, 1}, zero_one_form(*bg), as_part(*bg, one, Part::p10)});
  return FamilyChart("F-ab", bg, 2, std::move(terms), opts);
}

FamilyChart family_stable(const TorusGrid& grid, const StableFamilyParams& p, FamilyOptions opts) {
  auto bg = std::make_shared<const Background>(grid, 2, 1);
  const Eigen::VectorXcd one = identity_coef(*bg);
  std::vector<FamilyTerm> terms;
  terms.push_back({{0, 0},
                   as_part(*bg, smooth_end(*bg, p.seed, p.base_amplitude, false), Part::p01),
                   as_part(*bg, p.c0 * one, Part::p10)});
  Eigen::VectorXcd B = smooth_end(*bg, p.seed + 1, 1.0, true);
  B /= std::max(B.cwiseAbs().maxCoeff(), 1e-300);
  terms.push_back({{1, 0}, as_part(*bg, one + p.eps * B, Part::p01), zero_one_form(*bg)});
  terms.push_back({{0, 1}, zero_one_form(*bg), as_part(*bg, one, Part::p10)});
  return FamilyChart("F-st", bg, 2, std::move(terms), opts);
}

FamilyChart family_direct_image(const TorusGrid& grid, const StableFamilyParams& p, FamilyOptions opts) {
  auto bg = std::make_shared<const Background>(grid, 2, 1);
  const Eigen::VectorXcd one = identity_coef(*bg);
  std::vector<FamilyTerm> terms;
  terms.push_back({{0}, as_part(*bg, smooth_end(*bg, p.seed, p.base_amplitude, false), Part::p01), zero_one_form(*bg)});
  Eigen::VectorXcd B = smooth_end(*bg, p.seed + 1, 1.0, true);
  B /= std::max(B.cwiseAbs().maxCoeff(), 1e-300);
  terms.push_back({{1}, as_part(*bg, one + p.eps * B, Part::p01), zero_one_form(*bg)});
  return FamilyChart("F-di", bg, 1, std::move(terms), opts);
}

FamilyChart family_synthetic(const TorusGrid& grid, std::uint64_t seed, FamilyOptions opts) {
  auto bg = std::make_shared<const Background>(grid, 2, 1);
  const Eigen::VectorXcd one = identity_coef(*bg);
  std::vector<FamilyTerm> terms;
  terms.push_back({{0, 0},
                   as_part(*bg, smooth_end(*bg, seed, 0.05, false), Part::p01),
                   as_part(*bg, cplx(0.4, 0.1) * one + smooth_end(*bg, seed + 1, 0.2, true), Part::p10)});
  terms.push_back({{1, 0}, as_part(*bg, one + smooth_end(*bg, seed + 2, 0.3, true), Part::p01),
                   as_part(*bg, smooth_end(*bg, seed + 3, 0.2, true), Part::p10)});
  terms.push_back({{0, 1}, as_part(*bg, smooth_end(*bg, seed + 4, 0.2, true), Part::p01),
                   as_part(*bg, one + smooth_end(*bg, seed + 5, 0.3, true), Part::p10)});
  return FamilyChart("F-syn", bg, 2, std::move(terms), opts);
}

namespace {

Eigen::VectorXcd modes_from_json(const WeylFourier& wf, const nlohmann::json& arr) {
  std::vector<WeylFourier::Mode> modes;
  for (const auto& e : arr) {
    WeylFourier::Mode md;
    md.a = e.value("a", 0);
    md.b = e.value("b", 0);
    md.nu = e.value("nu", 0);
    md.nv = e.value("nv", 0);
    md.c = cplx(e.value("re", 0.0), e.value("im", 0.0));
    modes.push_back(md);
  }
  return wf.synthesize(modes);
}

}  // namespace

FamilyChart family_from_json(const nlohmann::json& j, FamilyOptions opts) {
  const int rank = j.at("rank").get<int>();
  const int degree = j.at("degree").get<int>();
  const auto tau = j.at("tau").get<std::vector<double>>();
  if (tau.size() != 2) throw std::invalid_argument("family file: tau must be [re, im]");
  const TorusGrid grid(j.at("N").get<int>(), cplx(tau[0], tau[1]), j.value("scale", 1.0));
  auto bg = std::make_shared<const Background>(grid, rank, degree);
  const WeylFourier wf(bg);
  const int m = j.at("m").get<int>();
  std::vector<FamilyTerm> terms;
  for (const auto& t : j.at("terms")) {
    FamilyTerm term;
    term.powers = t.at("powers").get<std::vector<int>>();
    term.a01 = as_part(*bg, modes_from_json(wf, t.value("a01", nlohmann::json::array())), Part::p01);
    term.phi = as_part(*bg, modes_from_json(wf, t.value("phi", nlohmann::json::array())), Part::p10);
    terms.push_back(std::move(term));
  }
  if (j.contains("radius")) opts.radius = j["radius"].get<double>();
  if (j.contains("fd_step")) opts.fd_step = j["fd_step"].get<double>();
  return FamilyChart(j.value("name", std::string("file")), bg, m, std::move(terms), opts);
}

}  // namespace higgs
