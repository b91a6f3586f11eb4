#include "sofic/report.hpp"

#include <fmt/format.h>

namespace sofic {

namespace {

nlohmann::json optional_number(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::string csv_number(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

}  // namespace

nlohmann::json to_json(const EntropyCell& cell) {
  nlohmann::json j;
  j["n"] = cell.n;
  j["volume"] = cell.volume;
  j["U_radius"] = cell.U_radius;
  j["delta"] = cell.delta;
  j["epsilon"] = cell.epsilon;
  j["eta"] = optional_number(cell.eta);
  j["engine"] = to_string(cell.engine);
  j["count"] = cell.count.str();
  j["sep"] = cell.sep.str();
  j["sep_method"] = to_string(cell.method);
  j["value"] = optional_number(cell.value);
  j["empty"] = !cell.value.has_value();
  if (cell.oracle_agrees) {
    j["oracle"] = *cell.oracle_agrees ? "agrees" : "disagrees";
  } else {
    j["oracle"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const EntropyReport& report) {
  nlohmann::json j;
  j["mode"] = report.mode;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells) j["cells"].push_back(to_json(c));
  j["limsup"] = nlohmann::json::array();
  for (const auto& c : report.limsup) j["limsup"].push_back(to_json(c));
  j["estimates"] = nlohmann::json::array();
  for (const auto& e : report.estimates) {
    j["estimates"].push_back({{"engine", to_string(e.engine)},
                              {"value", optional_number(e.value)},
                              {"empty", !e.value.has_value()},
                              {"U_radius", e.U_radius},
                              {"delta", e.delta},
                              {"eta", optional_number(e.eta)}});
  }
  j["monotonicity_violations"] = report.monotonicity;
  if (!report.quantization.empty()) {
    j["quantization"] = nlohmann::json::array();
    for (const auto& q : report.quantization) {
      nlohmann::json counts = nlohmann::json::array();
      for (const auto& [pattern, count] : q.named) counts.push_back({{"pattern", pattern}, {"count", count}});
      j["quantization"].push_back({{"n", q.n}, {"counts", counts}, {"tv_to_target", q.tv_to_target}});
    }
  }
  j["oracle"] = {{"checked", report.oracle_checked}, {"agreed", report.oracle_agreed}};
  return j;
}

nlohmann::json to_json(const VariationalResult& result) {
  nlohmann::json j;
  j["points"] = nlohmann::json::array();
  for (const auto& p : result.points) {
    j["points"].push_back({{"params", p.params}, {"estimate", optional_number(p.estimate)}, {"empty", !p.estimate}});
  }
  j["sup"] = optional_number(result.sup);
  j["argmax"] = result.argmax;
  j["top"] = optional_number(result.top);
  j["gap"] = optional_number(result.gap);
  return j;
}

std::string to_csv(const EntropyReport& report) {
  std::string out = "n,U_radius,delta,epsilon,eta,engine,log_count_density,empty\n";
  for (const auto& c : report.cells) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", c.n, c.U_radius, c.delta, c.epsilon, csv_number(c.eta),
                       to_string(c.engine), csv_number(c.value), c.value ? 0 : 1);
  }
  return out;
}

nlohmann::json envelope(const std::string& config_hash, const std::string& key, nlohmann::json payload) {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["version"] = kVersion;
  j[key] = std::move(payload);
  return j;
}

}  // namespace sofic
