#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "sofic/commands.hpp"
#include "sofic/report.hpp"

using namespace sofic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "sofic_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

int run_lab(const std::string& args) {
  const auto status = std::system((std::string(SOFIC_LAB_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json build_model(const std::string& text, const fs::path& dir) {
  std::ostringstream out;
  CommandContext ctx;
  ctx.out_dir = dir.string();
  ctx.out = &out;
  REQUIRE(cmd_build_model(parse_config(text), ctx) == kExitOk);
  return nlohmann::json::parse(out.str())["model"];
}

nlohmann::json estimate(const std::string& text, const std::string& mode, const fs::path& dir) {
  std::ostringstream out;
  CommandContext ctx;
  ctx.out_dir = dir.string();
  ctx.out = &out;
  REQUIRE(cmd_estimate(parse_config(text), mode, ctx) == kExitOk);
  return nlohmann::json::parse(slurp(dir / "report.json"));
}

std::optional<double> final_estimate(const nlohmann::json& report, const std::string& engine) {
  for (const auto& e : report["report"]["estimates"]) {
    if (e["engine"] == engine) return e["value"].is_null() ? std::nullopt : std::optional<double>(e["value"].get<double>());
  }
  return std::nullopt;
}

const std::string golden_top = R"(seed: 3
group: {kind: lattice, dim: 1}
model: {kind: cyclic}
system: {preset: golden_mean}
schedule:
  sizes: [8, 12, 16]
  radii: [1]
  deltas: [0.1, 0.0]
  epsilons: [0.5, 0.03125]
)";

}  // namespace

TEST_CASE("config errors name the offending line") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("group: {kind: lattice, dim: 1}\nmodel:\n  kind: cyclic\n  colour: red\n").rfind("line 4:", 0) == 0);
  CHECK(message("group: {kind: lattice, dim: 1}\nmodel: {kind: donut}\n").rfind("line 2:", 0) == 0);
  CHECK(message("group: {kind: free, rank: 2}\nmodel: {kind: cyclic}\n").rfind("line 2:", 0) == 0);
  CHECK(message("model: [1, 2\n").rfind("line ", 0) == 0);
  CHECK(message("system: {preset: golden_mean}\nmeasure: {kind: bernoulli, p: [0.2, 0.3, 0.5]}\n").rfind("line 2:", 0) ==
        0);
  CHECK(message("schedule:\n  sizes: [8, 4]\n  radii: [1]\n  deltas: [0]\n  epsilons: [0.1]\n").rfind("line ", 0) == 0);
}

TEST_CASE("the config hash follows the text and the effective seed") {
  const auto a = parse_config("seed: 1\n");
  CHECK(a.hash() == parse_config("seed: 1\n").hash());
  CHECK(a.hash() != parse_config("seed: 2\n").hash());
  CHECK(a.hash() != parse_config("seed: 1\n", 5).hash());
  CHECK(a.hash().size() == 64);
}

TEST_CASE("build-model summaries") {
  const auto dir = scratch("build");
  auto quality = [](const nlohmann::json& m) {
    std::vector<double> q;
    for (const auto& e : m["quality"]) q.push_back(e["value"]);
    return q;
  };
  const auto c8 = build_model("model: {kind: cyclic, size: 8, radii: [1, 2, 3]}\n", dir);
  CHECK(c8["n"] == 8);
  CHECK(quality(c8) == std::vector<double>{1, 1, 1});
  const auto c4 = build_model("model: {kind: cyclic, size: 4, radii: [1, 2, 3]}\n", dir);
  CHECK(quality(c4) == std::vector<double>{1, 0, 0});
  const auto circle = build_model("group: {kind: real, step: 0.125}\nmodel: {kind: circle, size: 8}\n", dir);
  CHECK(circle["n"] == 8);
  CHECK(circle["volume"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fs::exists(dir / "model.json"));
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("estimate examples") {
  const auto full = estimate(R"(group: {kind: lattice, dim: 1}
model: {kind: cyclic}
system: {preset: full_shift, alphabet: 2}
spec: {engines: [strict]}
schedule: {sizes: [8, 16], radii: [1], deltas: [0.0], epsilons: [0.03125]}
)",
                             "top", scratch("full"));
  CHECK(std::abs(*final_estimate(full, "strict") - std::log(2.0)) < 1e-9);

  const auto golden = estimate(golden_top, "top", scratch("golden"));
  CHECK(std::abs(*final_estimate(golden, "strict") - std::log(double(oracle::lucas(16))) / 16) < 1e-12);
  CHECK(golden["report"]["oracle"]["checked"] == golden["report"]["oracle"]["agreed"]);

  const auto bern = estimate(R"(group: {kind: lattice, dim: 1}
model: {kind: cyclic}
system: {preset: full_shift, alphabet: 2}
measure: {kind: bernoulli, p: [0.75, 0.25]}
spec: {engines: [strict]}
schedule: {sizes: [32, 64], radii: [1], deltas: [0.0], epsilons: [0.01], etas: [0.0], window: [0]}
)",
                             "measure", scratch("bernoulli"));
  const double binomial = (std::lgamma(65.0) - std::lgamma(17.0) - std::lgamma(49.0)) / 64;
  CHECK(std::abs(*final_estimate(bern, "strict") - binomial) < 1e-9);
}

TEST_CASE("report files carry the hash, oracle summary and fixed CSV schema") {
  const auto dir = scratch("files");
  const auto cfg = parse_config(golden_top);
  const auto report = estimate(golden_top, "top", dir);
  CHECK(report["config_hash"] == cfg.hash());
  CHECK(report["version"] == kVersion);
  const auto csv = slurp(dir / "report.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "n,U_radius,delta,epsilon,eta,engine,log_count_density,empty");
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["config_hash"] == cfg.hash());
  CHECK(manifest["oracle"]["checked"].get<int>() > 0);
  CHECK(manifest["timings_seconds"].contains("estimate"));
}

TEST_CASE("missing blocks are config errors") {
  CommandContext ctx;
  std::ostringstream sink;
  ctx.out = &sink;
  ctx.out_dir = scratch("missing").string();
  const auto cfg = parse_config(golden_top);
  CHECK_THROWS_AS(cmd_estimate(cfg, "measure", ctx), ConfigError);
  CHECK_THROWS_AS(cmd_estimate(cfg, "mp", ctx), ConfigError);
  CHECK_THROWS_AS(cmd_estimate(cfg, "relA", ctx), ConfigError);
  CHECK_THROWS_AS(cmd_scan_variational(cfg, ctx), ConfigError);
  CHECK_THROWS_AS(cmd_build_model(cfg, ctx), ConfigError);
  CHECK_THROWS_AS(cmd_estimate(parse_config("model: {kind: cyclic}\n"), "top", ctx), ConfigError);
}

TEST_CASE("the invariant suite passes by default and catches a corrupted action table") {
  ExperimentConfig cfg = parse_config("verify: {trials: 30}\n");
  for (const auto& o : run_invariant_suite(cfg)) {
    INFO(o.name << ": " << o.detail);
    CHECK(o.passed);
  }
  cfg.verify.corrupt_action_table = true;
  for (const auto& o : run_invariant_suite(cfg)) CHECK(o.passed == (o.name != "local_measure_preservation"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  write(dir / "good.yaml", golden_top);
  write(dir / "corrupt.yaml", "verify: {trials: 20, corrupt_action_table: true}\n");
  write(dir / "broken.yaml", "model:\n  kind: cyclic\n  colour: red\n");
  const auto out = " --out " + (dir / "out").string();
  CHECK(run_lab("estimate --config " + (dir / "good.yaml").string() + out) == 0);
  CHECK(run_lab("verify --config " + (dir / "good.yaml").string() + out) == 0);
  CHECK(run_lab("verify --config " + (dir / "corrupt.yaml").string() + out) == 1);
  CHECK(run_lab("estimate --mode measure --config " + (dir / "good.yaml").string() + out) == 2);
  CHECK(run_lab("build-model --config " + (dir / "broken.yaml").string() + out) == 2);
  CHECK(run_lab("estimate --config " + (dir / "absent.yaml").string() + out) == 2);
  CHECK(run_lab("estimate --mode sideways --config " + (dir / "good.yaml").string() + out) == 2);
  CHECK(run_lab("") == 2);
}

TEST_CASE("worker count does not change report bytes") {
  const auto dir = scratch("workers");
  write(dir / "c.yaml", golden_top);
  const auto config = " --config " + (dir / "c.yaml").string();
  REQUIRE(run_lab("estimate --workers 1 --out " + (dir / "w1").string() + config) == 0);
  REQUIRE(run_lab("estimate --workers 4 --out " + (dir / "w4").string() + config) == 0);
  CHECK(slurp(dir / "w1" / "report.json") == slurp(dir / "w4" / "report.json"));
  CHECK(slurp(dir / "w1" / "report.csv") == slurp(dir / "w4" / "report.csv"));
  CHECK(!slurp(dir / "w1" / "report.json").empty());

  REQUIRE(std::system(("SOFIC_WORKERS=3 " + std::string(SOFIC_LAB_PATH) + " estimate --out " +
                       (dir / "env").string() + config + " > /dev/null")
                          .c_str()) == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "env" / "manifest.json"))["workers"] == 3);
  CHECK(slurp(dir / "w1" / "report.json") == slurp(dir / "env" / "report.json"));
}

TEST_CASE("a seed flag overrides the config seed and enters the hash") {
  const auto dir = scratch("seed");
  write(dir / "c.yaml", golden_top);
  REQUIRE(run_lab("estimate --seed 11 --out " + (dir / "s").string() + " --config " + (dir / "c.yaml").string()) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "s" / "report.json"));
  CHECK(report["config_hash"] == parse_config(golden_top, 11).hash());
}
