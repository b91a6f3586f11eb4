#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sofic/entropy.hpp"

namespace sofic {

// Messages carry the offending line ("line 7: ...") when one is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VerifyConfig {
  std::size_t trials = 200;
  bool corrupt_action_table = false;
};

struct ExperimentConfig {
  std::string text;
  std::uint64_t seed = 0;
  GroupModel group = GroupModel::integer_lattice(1);
  ModelFamily family;
  std::optional<std::size_t> model_size;
  std::vector<double> quality_radii;
  std::optional<ShiftSystem> system;
  std::optional<InvariantMeasure> measure;
  std::vector<MarginalBox> boxes;
  std::vector<Engine> engines{Engine::strict, Engine::soft};
  std::optional<Schedule> schedule;
  std::optional<MeasureGrid> grid;
  VerifyConfig verify;
  std::string output_dir = "out";

  // SHA-256 over the config text and the effective seed.
  std::string hash() const;
};

// A seed given here replaces the one in the text.
ExperimentConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed = std::nullopt);
ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace sofic
