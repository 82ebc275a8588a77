// Command-line driver: cle <subcommand> --config PATH [--seed S] [--workers N] [--out DIR]

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cle/experiment.hpp"

namespace {

cle::ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = cle::read_file(path);
  } catch (const std::exception& e) {
    throw cle::ExperimentError("io", e.what());
  }
  cle::ConfigParse parsed = cle::parse_config(text);
  if (!parsed.ok()) {
    std::vector<std::string> details;
    for (const cle::ConfigError& e : parsed.errors) details.push_back(e.to_string());
    throw cle::ExperimentError("config", "invalid configuration '" + path + "'", details);
  }
  return *parsed.config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice conformal loop ensembles, carpets and first-passage metrics"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  for (const std::string& name : cle::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 1024));
    sub->add_option("--out", out, "output directory");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    cle::ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (out) cfg.out_dir = *out;
    const cle::RunResult res = cle::run_experiment(cfg, sub);
    std::cout << res.manifest.to_json().dump(2) << '\n';
    if (!res.checks_passed) {
      std::cerr << cle::ExperimentError("check", "property suite failed; see check.csv").to_json() << '\n';
      return 5;
    }
    return 0;
  } catch (const cle::ExperimentError& e) {
    std::cerr << e.to_json() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << cle::ExperimentError("internal", e.what()).to_json() << '\n';
    return 1;
  }
}
