#pragma once

#include <string>

#include "json.hpp"
#include "sofic/entropy.hpp"

namespace sofic {

inline constexpr const char* kVersion = "0.1.0";

// Counts are decimal strings; -infinity is null with "empty": true.
nlohmann::json to_json(const EntropyCell& cell);
nlohmann::json to_json(const EntropyReport& report);
nlohmann::json to_json(const VariationalResult& result);

// One row per cell: n,U_radius,delta,epsilon,eta,engine,log_count_density,empty
std::string to_csv(const EntropyReport& report);

// Wraps a payload with the config hash and artifact version.
nlohmann::json envelope(const std::string& config_hash, const std::string& key, nlohmann::json payload);

}  // namespace sofic
