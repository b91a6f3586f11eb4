#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sofic/config.hpp"

namespace sofic {

enum ExitCode : int { kExitOk = 0, kExitInvariant = 1, kExitConfig = 2 };

struct CommandContext {
  int workers = 1;
  std::optional<std::string> out_dir;
  std::ostream* out = nullptr;
};

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Invariant suite behind `verify`, sized by cfg.verify.
std::vector<CheckOutcome> run_invariant_suite(const ExperimentConfig& cfg);

// Each command writes its files under the output directory and returns an
// exit code. ConfigError propagates to the caller.
int cmd_build_model(const ExperimentConfig& cfg, const CommandContext& ctx);
int cmd_estimate(const ExperimentConfig& cfg, const std::string& mode, const CommandContext& ctx);
int cmd_verify(const ExperimentConfig& cfg, const CommandContext& ctx);
int cmd_scan_variational(const ExperimentConfig& cfg, const CommandContext& ctx);

}  // namespace sofic
