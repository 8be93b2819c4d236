#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "higgs/mutation.hpp"
#include "higgs/scenario.hpp"

using namespace higgs;

namespace {

const std::vector<std::pair<std::string, std::vector<Stage>>> kCommands = {
    {"check-identities", {Stage::identities}},
    {"solve-he", {Stage::he}},
    {"wp", {Stage::wp}},
    {"wp-curvature", {Stage::wp, Stage::wp_curvature}},
    {"direct-image", {Stage::direct_image}},
    {"finsler", {Stage::finsler}},
    {"oracle-compare", {Stage::wp, Stage::wp_curvature, Stage::oracles}},
    {"all",
     {Stage::identities, Stage::he, Stage::wp, Stage::wp_curvature, Stage::direct_image, Stage::finsler,
      Stage::oracles}}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Higgs bundle moduli curvature toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out, family, mutation;
  std::uint64_t seed = 0;
  int threads = 0, grid_n = 0;
  app.add_option("--config", config_path, "JSON scenario file")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads (1 = deterministic)");
  app.add_option("--family", family, "F-ab | F-st | F-di | F-syn | family JSON path");
  app.add_option("-N,--grid", grid_n, "grid size");
  app.add_option("--mutation", mutation, "inject a canned sign flip (testing)");
  for (const auto& [name, stages] : kCommands) app.add_subcommand(name, "run the " + name + " pipeline");
  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) std::ifstream(config_path) >> j;
    if (const char* env = std::getenv("HIGGS_OUT"); env && out.empty()) j["out"] = env;
    if (!out.empty()) j["out"] = out;
    if (seed) j["seed"] = seed;
    if (threads) j["threads"] = threads;
    if (!family.empty()) j["family"] = family;
    if (grid_n) j["grid"]["N"] = grid_n;
    ScenarioConfig cfg = ScenarioConfig::from_json(j);
    for (const auto& [name, stages] : kCommands)
      if (app.got_subcommand(name)) cfg.stages.insert(stages.begin(), stages.end());
    if (!mutation.empty()) {
      bool found = false;
      for (Mutation m : canned_mutations())
        if (mutation_name(m) == mutation) set_mutation(m), found = true;
      if (!found) throw ConfigError("mutation", "unknown mutation '" + mutation + "'");
    }
    const ScenarioResult res = run_scenario(cfg);
    for (const auto& c : res.contracts)
      std::cout << (c.passed ? "ok   " : (c.hard ? "FAIL " : "warn ")) << c.name << " value=" << c.value
                << " tol=" << c.tolerance << '\n';
    std::cout << "report: " << cfg.out << "/report.json\n";
    return res.hard_passed() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const StageError& e) {
    std::cerr << "stage error: " << e.what() << "\nhint: " << e.hint() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
