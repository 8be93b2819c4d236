#include "higgs/scenario.hpp"

#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <random>

#include "higgs/finsler.hpp"
#include "higgs/oracle_fd.hpp"
#include "higgs/wp_curvature.hpp"

namespace higgs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::pair<Stage, std::string>> kStages = {
    {Stage::identities, "identities"}, {Stage::he, "he"},           {Stage::wp, "wp"},
    {Stage::wp_curvature, "wp-curvature"}, {Stage::direct_image, "direct-image"},
    {Stage::finsler, "finsler"},       {Stage::oracles, "oracles"}};

Stage stage_from_name(const std::string& s) {
  for (const auto& [st, name] : kStages)
    if (name == s) return st;
  throw ConfigError("stages", "unknown stage '" + s + "'");
}

template <class T>
T field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

std::string stage_name(Stage s) {
  for (const auto& [st, name] : kStages)
    if (st == s) return name;
  return "unknown";
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  ScenarioConfig c;
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    c.N = field(g, "N", c.N);
    const auto tau = field(g, "tau", std::vector<double>{c.tau.real(), c.tau.imag()});
    if (tau.size() != 2) throw ConfigError("grid.tau", "expected [re, im]");
    c.tau = cplx(tau[0], tau[1]);
    c.scale = field(g, "scale", c.scale);
  }
  c.family = field(j, "family", c.family);
  c.point = field(j, "point", c.point);
  c.he_tol = field(j, "he_tol", c.he_tol);
  c.green_rtol = field(j, "green_rtol", c.green_rtol);
  c.fd_step = field(j, "fd_step", c.fd_step);
  c.kappas = field(j, "kappas", c.kappas);
  c.dimage_degrees = field(j, "dimage_degrees", c.dimage_degrees);
  for (const auto& s : field(j, "stages", std::vector<std::string>{})) c.stages.insert(stage_from_name(s));
  c.seed = field(j, "seed", c.seed);
  c.out = field(j, "out", c.out);
  c.threads = field(j, "threads", c.threads);
  c.validate();
  return c;
}

json ScenarioConfig::to_json() const {
  std::vector<std::string> st;
  for (Stage s : stages) st.push_back(stage_name(s));
  return {{"grid", {{"N", N}, {"tau", {tau.real(), tau.imag()}}, {"scale", scale}}},
          {"family", family},
          {"point", point},
          {"he_tol", he_tol},
          {"green_rtol", green_rtol},
          {"fd_step", fd_step},
          {"kappas", kappas},
          {"dimage_degrees", dimage_degrees},
          {"stages", st},
          {"seed", seed},
          {"threads", threads}};
}

void ScenarioConfig::validate() const {
  if (N < 4) throw ConfigError("grid.N", "must be at least 4");
  if (tau.imag() <= 0.0) throw ConfigError("grid.tau", "imaginary part must be positive");
  if (scale <= 0.0) throw ConfigError("grid.scale", "must be positive");
  if (he_tol <= 0.0) throw ConfigError("he_tol", "must be positive");
  if (green_rtol <= 0.0) throw ConfigError("green_rtol", "must be positive");
  if (fd_step <= 0.0) throw ConfigError("fd_step", "must be positive");
  for (double k : kappas)
    if (!(k >= 0.0)) throw ConfigError("kappas", "kappa must be nonnegative");
  for (int d : dimage_degrees)
    if (d < 0 || d > 2) throw ConfigError("dimage_degrees", "degrees must lie in 0..2");
  if (point.size() % 2 != 0) throw ConfigError("point", "expected interleaved real and imaginary parts");
  if (threads < 1) throw ConfigError("threads", "must be at least 1");
  if (family.empty()) throw ConfigError("family", "empty selector");
}

bool ScenarioResult::hard_passed() const {
  for (const auto& c : contracts)
    if (c.hard && !c.passed) return false;
  return true;
}

FamilyChart make_family(const ScenarioConfig& cfg) {
  FamilyOptions opts;
  opts.he_tol = cfg.he_tol;
  opts.fd_step = cfg.fd_step;
  opts.hodge.green_rtol = cfg.green_rtol;
  opts.hodge.seed = cfg.seed;
  const TorusGrid grid(cfg.N, cfg.tau, cfg.scale);
  const StableFamilyParams p;
  if (cfg.family == "F-ab") return family_abelian(grid, opts);
  if (cfg.family == "F-st") return family_stable(grid, p, opts);
  if (cfg.family == "F-di") {
    opts.log_scale = [](const SVec& s) { return 0.3 * s.squaredNorm(); };
    return family_direct_image(grid, p, opts);
  }
  if (cfg.family == "F-syn") return family_synthetic(grid, 23, opts);
  std::ifstream in(cfg.family);
  if (!in) throw ConfigError("family", "not a shipped family and not a readable file: " + cfg.family);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("family", e.what());
  }
  return family_from_json(j, opts);
}

namespace {

struct Runner {
  const ScenarioConfig& cfg;
  FamilyChart fam;
  SVec t;
  ScenarioResult res;
  std::optional<WpCurvature> wpc;
  CurvatureReport curv;

  void contract(const std::string& name, bool hard, double value, double tol, bool passed) {
    res.contracts.push_back({name, hard, passed, value, tol});
  }
  void upper(const std::string& name, bool hard, double value, double tol) {
    contract(name, hard, value, tol, value <= tol);
  }

  const WpCurvature& curvature() {
    if (!wpc) wpc = wp_curvature_formula(fam, t);
    return *wpc;
  }

  void identities() {
    const Lemma21Residuals r = check_lemma21(fam, t);
    res.report["identities"] = {{"relative", r.residual}, {"absolute", r.absolute}};
    if (fam.name() == "F-ab") {
      double worst = 0.0;
      for (double a : r.absolute) worst = std::max(worst, a);
      upper("identities.abelian_exact", true, worst, 1e-10);
    }
  }

  void he() {
    const BundleConfig& b = fam.fiber(t);
    const double r = he_residual(b);
    json j = {{"he_residual", r}, {"einstein_constant", einstein_constant(b)}, {"solves", fam.solves()}};
    if (!fam.traces().empty()) j["flow"] = fam.traces().back().to_json();
    res.report["he"] = j;
    upper("he.residual", true, r, std::max(1e-8, cfg.he_tol));
    write_snapshot(b.h, (fs::path(cfg.out) / "fiber_h.bin").string());
    write_snapshot(b.a01, (fs::path(cfg.out) / "fiber_a01.bin").string());
    write_snapshot(b.phi, (fs::path(cfg.out) / "fiber_phi.bin").string());
  }

  void wp() {
    curv.wp_metric = wp_metric(fam, t);
    const FdValue<double> d1 = wp_first_derivative(fam, t);
    res.report["wp"] = {{"metric", matrix_to_json(curv.wp_metric)},
                        {"first_derivative_max", d1.value},
                        {"first_derivative_fd_error", d1.error}};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(curv.wp_metric);
    contract("wp.positive_definite", true, es.eigenvalues().minCoeff(), 0.0, es.eigenvalues().minCoeff() > 0.0);
  }

  void wp_curvature() {
    const WpCurvature& w = curvature();
    curv.wp_curvature = w;
    upper("wp_curvature.kaehler_symmetry", true, w.symmetry_residual, 1e-8);
    double lowest = std::numeric_limits<double>::infinity();
    for (double v : wp_sectional_values(w)) lowest = std::min(lowest, v);
    contract("wp_curvature.semipositive", true, lowest, -1e-10, lowest >= -1e-10);
    if (fam.name() == "F-ab") upper("wp_curvature.abelian_zero", true, w.tensor.max_abs(), 1e-8);
  }

  void direct_image() {
    for (int d : cfg.dimage_degrees) {
      try {
        const DimageCurvature dc = dimage_curvature(fam, t, d);
        curv.dimage[d] = dc;
        if (dc.dimension > 0 && d < 2) upper("direct_image.ricci_identity_" + std::to_string(d), false, dc.ricci_residual, 1e-3);
        if (d == 0 && dc.dimension > 0) {
          contract("direct_image.adjoint_term_zero", true, dc.adjoint_term.max_abs(), 0.0,
                   dc.adjoint_term.max_abs() == 0.0);
          const ChernScalar cs = chern_scalar_check(fam, t, 0, cfg.fd_step);
          res.report["oracles"]["chern_scalar"] = {{"formula", matrix_to_json(cs.formula)},
                                                   {"fd", matrix_to_json(cs.fd)},
                                                   {"fd_error", matrix_to_json(cs.fd_error)},
                                                   {"relative_gap", cs.relative_gap}};
          upper("direct_image.chern_scalar", false, cs.relative_gap, 0.05);
        }
      } catch (const DimensionJump& e) {
        throw StageError(Stage::direct_image, e.what(), "move the base point away from the jumping locus");
      }
    }
  }

  void finsler() {
    const int m = fam.dim();
    const FinslerPoint fp(fam, t);
    HodgeEngine endo = fiber_engine(fam, t);
    json rows = json::array();
    std::ofstream csv(fs::path(cfg.out) / "kappa_sweep.csv");
    csv << "i,kappa,F1,F2,Fk,hsc,hsc_err,oracle,oracle_err\n";
    double levi_gap = 0.0, bound_slack = 1e300, assembly = 0.0, oracle_gap = 0.0;
    for (int i = 0; i < m; ++i) {
      SVec e = SVec::Zero(m);
      e[i] = 1.0;
      if (fp.value(e, 0.0).F1 < 1e-10) continue;
      const Lemma44Closed lc = lemma44_closed(endo, fp.etas()[static_cast<std::size_t>(i)]);
      const Lemma44Terms lt = terms_lemma44(fam, t, i);
      json terms;
      const char* names = "ABCDE";
      for (int k = 0; k < 5; ++k)
        terms[std::string(1, names[k])] = {{"definitional", lt.definitional[k]},
                                           {"definitional_fd_error", lt.fd_error[k]},
                                           {"closed_form", lt.closed_form[k]}};
      terms["B_projection"] = lt.b_projection;
      for (double kappa : cfg.kappas) {
        const FinslerValue v = fp.value(e, kappa);
        const Eigen::MatrixXcd L = fp.levi(e, kappa);
        levi_gap = std::max(levi_gap, (L - fp.levi_fd(e, kappa, cfg.fd_step)).norm() / L.norm());
        const auto b = fp.diagonal_bound(e, kappa, i);
        bound_slack = std::min(bound_slack, b.levi - b.bound);
        const double k = finsler_hsc(lc, kappa);
        assembly = std::max(assembly, std::abs(k - finsler_hsc_from_terms(lc, kappa)) / std::max(std::abs(k), 1e-300));
        const GaussOracle g = fd_gauss_oracle(fam, t, i, kappa, cfg.fd_step);
        const double gap = std::max(0.0, std::abs(k - g.value) - g.error) / std::max({std::abs(k), std::abs(g.value), 1e-300});
        oracle_gap = std::max(oracle_gap, gap);
        rows.push_back({{"i", i}, {"kappa", kappa}, {"F1", v.F1}, {"F2", v.F2}, {"Fk", v.Fk}, {"hsc", k},
                        {"hsc_assembly_gap", std::abs(k - finsler_hsc_from_terms(lc, kappa))},
                        {"oracle", g.value}, {"oracle_fd_error", g.error}, {"pullback_gap", g.pullback_gap},
                        {"lemma44", terms}});
        csv << i << ',' << kappa << ',' << v.F1 << ',' << v.F2 << ',' << v.Fk << ',' << k << ",0," << g.value << ','
            << g.error << '\n';
      }
    }
    res.report["finsler"] = rows;
    upper("finsler.levi_vs_fd", true, levi_gap, 1e-4);
    contract("finsler.diagonal_bound", true, bound_slack, -1e-10, bound_slack >= -1e-10);
    upper("finsler.assembly_consistency", true, assembly, 1e-10);
    upper("finsler.hsc_vs_gauss_oracle", false, oracle_gap, 0.05);
  }

  void oracles() {
    const WpCurvature& w = curvature();
    const FdTensor fdt = fd_kahler_curvature([&](const SVec& s) { return Eigen::MatrixXcd(wp_metric(fam, s)); }, t,
                                             cfg.fd_step * fam.options().radius);
    const double diff = (w.tensor - fdt.value).max_abs();
    const double scale = std::max(w.tensor.max_abs(), fdt.value.max_abs());
    const double gap = scale <= 1e-8 && diff <= 1e-8 ? 0.0 : std::max(0.0, diff - fdt.error - w.fd_error) / std::max(scale, 1e-300);
    res.report["oracles"]["wp_curvature_fd"] = {{"max_abs_diff", diff}, {"fd_error", fdt.error},
                                                {"formula_fd_error", w.fd_error}, {"relative_gap", gap}};
    upper("oracles.wp_curvature_fd", false, gap, 0.05);
    const RecoveryCheck rc = recover_bs_check(fam, t);
    res.report["oracles"]["recovery"] = {{"deviation", rc.deviation}, {"scale", rc.scale},
                                         {"wedge_term", rc.wedge_term}, {"principal_angles", rc.principal_angles}};
    upper("oracles.recovery", false, rc.deviation, 0.02);
    if (cfg.N <= DenseHodgeOracle::max_grid) {
      const DenseHodgeOracle dense(fam.fiber(t), Coeff::Endomorphism);
      HodgeEngine eng = fiber_engine(fam, t);
      double worst = 0.0;
      for (int k = 0; k < 3; ++k) {
        FormField f = eng.zero(k);
        std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(k));
        std::normal_distribution<double> nd;
        for (int s = 0; s < f.num_parts(); ++s)
          for (auto& v : f.slot_data(s)) v = cplx(nd(rng), nd(rng));
        const auto r = dense.apply(f);
        worst = std::max(worst, eng.norm(eng.green(f) - r.green) / std::max(eng.norm(r.green), 1e-300));
      }
      upper("oracles.dense_hodge", true, worst, 1e-8);
    }
    for (int i = 0; i < fam.dim(); ++i) {
      const double g = curv.wp_metric.size() ? curv.wp_metric(i, i).real() : wp_metric(fam, t)(i, i).real();
      const double wp_hsc = 2.0 * w.tensor(i, i, i, i).real() / (g * g);
      HodgeEngine endo = fiber_engine(fam, t);
      const double k0 = finsler_hsc(lemma44_closed(endo, eta_field(fam, t, i)), 0.0);
      const double gap = std::abs(k0 - wp_hsc) / std::max({std::abs(k0), std::abs(wp_hsc), 1e-300});
      res.report["oracles"]["kappa0_reduction"].push_back({{"i", i}, {"finsler", k0}, {"wp", wp_hsc}, {"relative_gap", gap}});
      if (std::abs(k0) + std::abs(wp_hsc) > 0.0) upper("oracles.kappa0_reduction_" + std::to_string(i), false, gap, 0.02);
    }
  }
};

void flush(const ScenarioConfig& cfg, Runner& r) {
  fs::create_directories(cfg.out);
  json j = r.curv.to_json();
  j.update(r.res.report);
  j["schema_version"] = kSchemaVersion;
  j["config"] = cfg.to_json();
  j["provenance"] = {{"config_hash", std::to_string(std::hash<std::string>{}(cfg.to_json().dump()))},
                     {"grid_n", cfg.N},
                     {"he_tol", cfg.he_tol},
                     {"green_rtol", cfg.green_rtol},
                     {"fd_step", cfg.fd_step}};
  json cs = json::array();
  for (const auto& c : r.res.contracts)
    cs.push_back({{"name", c.name}, {"hard", c.hard}, {"passed", c.passed}, {"value", c.value}, {"tolerance", c.tolerance}});
  j["contracts"] = cs;
  r.res.report = j;
  std::ofstream(fs::path(cfg.out) / "report.json") << j.dump(2) << '\n';
  if (!r.curv.wp_curvature.tensor.empty())
    std::ofstream(fs::path(cfg.out) / "wp_curvature.csv") << r.curv.wp_curvature.tensor.to_csv();
  for (const auto& [d, c] : r.curv.dimage)
    std::ofstream(fs::path(cfg.out) / ("dimage_curvature_" + std::to_string(d) + ".csv")) << c.tensor.to_csv();
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Eigen::setNbThreads(cfg.threads);
  fs::create_directories(cfg.out);
  Runner r{cfg, make_family(cfg), SVec::Zero(0), {}, std::nullopt, {}};
  r.t = SVec::Zero(r.fam.dim());
  for (std::size_t k = 0; k + 1 < cfg.point.size() && static_cast<Eigen::Index>(k / 2) < r.t.size(); k += 2)
    r.t[static_cast<Eigen::Index>(k / 2)] = cplx(cfg.point[k], cfg.point[k + 1]);
  r.curv.family = r.fam.name();
  r.curv.grid_n = cfg.N;
  const std::vector<std::pair<Stage, std::function<void()>>> plan = {
      {Stage::identities, [&] { r.identities(); }}, {Stage::he, [&] { r.he(); }},
      {Stage::wp, [&] { r.wp(); }},                 {Stage::wp_curvature, [&] { r.wp_curvature(); }},
      {Stage::direct_image, [&] { r.direct_image(); }}, {Stage::finsler, [&] { r.finsler(); }},
      {Stage::oracles, [&] { r.oracles(); }}};
  for (const auto& [stage, run] : plan) {
    if (!cfg.stages.count(stage)) continue;
    try {
      run();
    } catch (const StageError& e) {
      r.res.report["error"] = {{"stage", stage_name(e.stage())}, {"message", e.what()}, {"hint", e.hint()}};
      flush(cfg, r);
      throw;
    } catch (const std::exception& e) {
      r.res.report["error"] = {{"stage", stage_name(stage)}, {"message", e.what()},
                               {"hint", "check solver tolerances and the family selector"}};
      flush(cfg, r);
      throw StageError(stage, e.what(), "check solver tolerances and the family selector");
    }
  }
  flush(cfg, r);
  return r.res;
}

}  // namespace higgs
