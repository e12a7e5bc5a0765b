#include "pwlrom/pipeline.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
  using namespace pwlrom;
  CLI::App app{"pwlrom: data-driven reduced-order models for piecewise-linear structural dynamics"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Run one pipeline stage (or all) from a config file");

  std::string config_path, stage_name = "all", format = "csv";
  std::optional<std::string> out;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  bool force = false;
  run->add_option("-c,--config", config_path, "Pipeline config (INI)")->required();
  run->add_option("-s,--stage", stage_name, "model|snapshot|dmd|rom|sweep|compare|bench|all")
      ->check(CLI::IsMember({"model", "snapshot", "dmd", "rom", "sweep", "compare", "bench", "all"}));
  run->add_option("-o,--out", out, "Output directory (overrides PWLROM_OUT and [output] dir)");
  run->add_option("-j,--threads", threads, "Worker threads for sweeps and pseudo-stability")->check(CLI::Range(1u, 1024u));
  run->add_option("--seed", seed, "Seed recorded in the manifest");
  run->add_option("--format", format, "Matrix and trajectory format")->check(CLI::IsMember({"csv", "binary"}));
  run->add_flag("--force", force, "Recompute even if the manifest says the stage is current");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pipeline::kConfigError;
  }

  return pipeline::run_guarded([&] {
    auto cfg = io::load_config(config_path);
    pipeline::RunOptions opt;
    if (out) opt.out = *out;
    opt.threads = threads;
    opt.seed = seed;
    opt.format = format == "binary" ? io::MatrixFormat::binary : io::MatrixFormat::text;
    opt.force = force;
    pipeline::Pipeline p(std::move(cfg), opt);
    p.run(pipeline::stage_from_string(stage_name));
  });
}
