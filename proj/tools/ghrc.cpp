#include <CLI11.hpp>

#include "ghrc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"GHRC geometric processing pipeline"};
  app.require_subcommand(1, 1);
  std::string config;
  std::string out;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "simulate a scan: frames, telemetry, truth log, GCPs"},
      {"georef", "georeference every frame onto the LCC grid"},
      {"bbr", "estimate and correct band-to-band misregistration"},
      {"calibrate", "fit the EW/NS reference angles to the GCPs"},
      {"mosaic", "select references, resect and stitch the frames"},
      {"eval", "compare the run report with the truth log"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "YAML run config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->required();
    sub->add_option("--threads", threads, "worker threads (default: hardware count)");
    sub->add_option("--seed", seed, "override the config seed");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ghrc::cli::kExitInvalid;
  }
  return ghrc::cli::run_command(app.get_subcommands().front()->get_name(), config, out, threads,
                                seed);
}
