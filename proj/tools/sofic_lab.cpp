#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sofic/commands.hpp"
#include "sofic/parallel.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string mode = "top";
};

void add_common(CLI::App* sub, Flags& flags, bool config_required) {
  auto* c = sub->add_option("--config", flags.config, "experiment config (YAML)");
  if (config_required) c->required();
  sub->add_option("--out", flags.out, "output directory");
  sub->add_option("--seed", flags.seed, "seed override");
  sub->add_option("--workers", flags.workers, "worker threads (default: SOFIC_WORKERS or 1)")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sofic-lab: microstate entropy experiments"};
  app.require_subcommand(1);
  Flags flags;

  auto* build = app.add_subcommand("build-model", "summarize a finite model");
  add_common(build, flags, true);
  auto* estimate = app.add_subcommand("estimate", "entropy estimates over a schedule");
  add_common(estimate, flags, true);
  estimate->add_option("--mode", flags.mode, "top, avg, measure, mp or relA")
      ->check(CLI::IsMember({"top", "avg", "measure", "mp", "relA"}));
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  add_common(verify, flags, false);
  auto* scan = app.add_subcommand("scan-variational", "measure-entropy scan over a grid");
  add_common(scan, flags, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? sofic::kExitOk : sofic::kExitConfig;
  }

  try {
    const auto cfg = flags.config.empty() ? sofic::parse_config("", flags.seed) : sofic::load_config(flags.config, flags.seed);
    sofic::CommandContext ctx;
    ctx.workers = sofic::resolve_workers(flags.workers);
    if (!flags.out.empty()) ctx.out_dir = flags.out;
    if (build->parsed()) return sofic::cmd_build_model(cfg, ctx);
    if (estimate->parsed()) return sofic::cmd_estimate(cfg, flags.mode, ctx);
    if (verify->parsed()) return sofic::cmd_verify(cfg, ctx);
    return sofic::cmd_scan_variational(cfg, ctx);
  } catch (const sofic::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return sofic::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sofic::kExitInvariant;
  }
}
