#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "config.hpp"
#include "experiments.hpp"

namespace {

std::optional<unsigned> env_threads() {
  const char* raw = std::getenv("DIRICHLET_LAB_THREADS");
  if (!raw || !*raw) return std::nullopt;
  try {
    const long v = std::stol(raw);
    if (v >= 1) return static_cast<unsigned>(v);
  } catch (const std::exception&) {
  }
  std::cerr << "ignoring invalid DIRICHLET_LAB_THREADS='" << raw << "'\n";
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace dlab::lab;
  CLI::App app{"dirichlet-lab: experiments on non-symmetric Dirichlet forms over weighted graphs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads (falls back to DIRICHLET_LAB_THREADS)")
        ->check(CLI::PositiveNumber);
  };
  for (const auto& name : experiment_kind_names()) {
    add_common(app.add_subcommand(name, "run the " + name + " experiment"));
  }
  auto* check_cfg = app.add_subcommand("check-config", "validate a config and print it normalized");
  check_cfg->add_option("--config", config_path, "experiment config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  if (sub == check_cfg) {
    const ConfigResult res = load_config(config_path);
    if (!res.ok()) {
      for (const auto& e : res.errors) std::cerr << "error: " << e << '\n';
      return 2;
    }
    std::cout << canonical_dump(res.normalized) << '\n';
    return 0;
  }

  const auto kind = parse_experiment_kind(sub->get_name());
  ConfigResult res = load_config(config_path, kind);
  if (!res.ok()) {
    for (const auto& e : res.errors) std::cerr << "error: " << e << '\n';
    return 2;
  }
  dlab::Json cfg = res.normalized;
  if (seed) cfg["seed"] = *seed;
  if (!threads) threads = env_threads();
  if (threads) cfg["threads"] = *threads;
  if (!out_dir.empty()) cfg["out"] = out_dir;

  const RunOutcome outcome = run_experiment(cfg, cfg.at("out").get<std::string>(), std::cout);
  if (!outcome.failed_stage.empty()) {
    std::cerr << "dirichlet-lab: stage '" << outcome.failed_stage << "' failed: " << outcome.error
              << '\n';
  }
  return outcome.exit_code;
}
