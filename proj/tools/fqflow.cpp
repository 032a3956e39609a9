#include <CLI11.hpp>

#include <array>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fqf/pipeline/config.hpp"
#include "fqf/pipeline/run.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> budget;
  std::optional<std::string> out;
  std::vector<std::string> stages;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_stages) {
  cmd->add_option("--config", args.config, "Run configuration JSON file")->required();
  cmd->add_option("--seed", args.seed, "Override the global seed");
  cmd->add_option("--memory-budget-bytes", args.budget,
                  "Override the echo-synthesis and reconstruction memory budgets");
  cmd->add_option("--out", args.out, "Override the output directory");
  if (with_stages) {
    cmd->add_option("--stages", args.stages,
                    "Comma-separated subset of stages to run (default: all)")
        ->delimiter(',');
  }
}

int execute(const CommonArgs& args, std::vector<std::string> stages) {
  fqf::pipeline::RunOptions opts;
  opts.stages = std::move(stages);
  opts.seed = args.seed;
  if (args.budget) opts.memory_budget_bytes = static_cast<std::size_t>(*args.budget);
  opts.output_dir = args.out;
  try {
    fqf::pipeline::RunResult result = fqf::pipeline::run_pipeline(args.config, opts);
    for (const fqf::pipeline::StageManifest& m : result.manifests) {
      std::cout << m.stage << ": " << (m.cached ? "cached" : "ran") << " (" << m.duration_s
                << " s, " << m.outputs.size() << " outputs)\n";
    }
    std::cout << "outputs in " << result.output_dir << "\n";
    return 0;
  } catch (const fqf::pipeline::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int run_validate(const std::string& config_path) {
  try {
    fqf::pipeline::RunConfig cfg = fqf::pipeline::load_config(config_path);
    fqf::pipeline::ValidationReport report = fqf::pipeline::validate_config(cfg);
    for (const std::string& e : report.errors) std::cout << "error: " << e << "\n";
    for (const std::string& w : report.warnings) std::cout << "warning: " << w << "\n";
    if (report.errors.empty() && report.warnings.empty()) {
      std::cout << "configuration ok\n";
    }
    return report.errors.empty() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cout << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultrafast Doppler flow-phantom simulation pipeline"};
  app.require_subcommand(1);

  CommonArgs run_args;
  CLI::App* cmd_run = app.add_subcommand("run", "Run the pipeline (all stages, or --stages)");
  add_common(cmd_run, run_args, true);

  std::string validate_config_path;
  CLI::App* cmd_validate =
      app.add_subcommand("validate", "Check a configuration and report problems");
  cmd_validate->add_option("--config", validate_config_path, "Run configuration JSON file")
      ->required();

  // One alias per stage; each is the pipeline restricted to that stage, so
  // cached upstream results are reused and manifests stay consistent.
  struct StageAlias {
    const char* cli_name;
    const char* stage;
    const char* blurb;
    CLI::App* cmd = nullptr;
    CommonArgs args;
  };
  std::array<StageAlias, 8> aliases{{
      {"gen-vessel", "vessel", "Generate the vessel tree and surface mesh", nullptr, {}},
      {"gen-flow", "flow", "Produce the flow field (analytic or imported)", nullptr, {}},
      {"trace", "particles", "Trace blood tracers through the flow field", nullptr, {}},
      {"gen-tissue", "tissue", "Generate the static tissue scatterer cloud", nullptr, {}},
      {"sim-rf", "rf", "Synthesize the received echo frames", nullptr, {}},
      {"beamform", "beamform", "Reconstruct IQ volumes from the echo frames", nullptr, {}},
      {"post", "post", "Clutter-filter and render the Doppler images", nullptr, {}},
      {"metrics", "metrics", "Score the Doppler image against its reference", nullptr, {}},
  }};
  for (StageAlias& alias : aliases) {
    alias.cmd = app.add_subcommand(alias.cli_name, alias.blurb);
    add_common(alias.cmd, alias.args, false);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*cmd_validate) return run_validate(validate_config_path);
  if (*cmd_run) return execute(run_args, run_args.stages);
  for (const StageAlias& alias : aliases) {
    if (*alias.cmd) return execute(alias.args, {alias.stage});
  }
  std::cerr << "no subcommand given\n";
  return 2;
}
