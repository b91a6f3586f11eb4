#include "sofic/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "sofic/packing.hpp"
#include "sofic/report.hpp"

namespace sofic {

namespace {

using Clock = std::chrono::steady_clock;

class Timings {
 public:
  template <class F>
  auto time(const std::string& name, F&& f) {
    const auto start = Clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(name, start);
    } else {
      auto result = f();
      record(name, start);
      return result;
    }
  }
  nlohmann::json json() const { return seconds_; }

 private:
  void record(const std::string& name, Clock::time_point start) {
    seconds_[name] = std::chrono::duration<double>(Clock::now() - start).count();
  }
  nlohmann::json seconds_ = nlohmann::json::object();
};

std::ostream& out(const CommandContext& ctx) { return ctx.out ? *ctx.out : std::cout; }

std::filesystem::path output_dir(const ExperimentConfig& cfg, const CommandContext& ctx) {
  std::filesystem::path dir = ctx.out_dir ? *ctx.out_dir : cfg.output_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  f << text;
}

void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg, const CommandContext& ctx,
                    const std::string& command, const Timings& timings, nlohmann::json oracle) {
  nlohmann::json m;
  m["config_hash"] = cfg.hash();
  m["version"] = kVersion;
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["workers"] = ctx.workers;
  m["timings_seconds"] = timings.json();
  m["oracle"] = std::move(oracle);
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

const ShiftSystem& need_system(const ExperimentConfig& cfg) {
  if (!cfg.system) throw ConfigError("this command needs a system block");
  return *cfg.system;
}

const Schedule& need_schedule(const ExperimentConfig& cfg) {
  if (!cfg.schedule) throw ConfigError("this command needs a schedule block");
  return *cfg.schedule;
}

EstimateOptions estimate_options(const ExperimentConfig& cfg, const CommandContext& ctx) {
  EstimateOptions o;
  o.engines = cfg.engines;
  o.workers = ctx.workers;
  o.seed = cfg.seed;
  return o;
}

// Rethrows argument errors raised while instantiating config blocks as
// config errors.
template <class F>
auto as_config(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string show(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "-inf"; }

// --- invariant suite ------------------------------------------------------

CheckOutcome check_ball_product(std::mt19937_64& rng, std::size_t trials) {
  const auto Z = GroupModel::integer_lattice(1);
  std::size_t applicable = 0;
  std::size_t violations = 0;
  std::size_t instances = 0;
  auto record = [&](const BallProductVerdict& v) {
    ++instances;
    if (v.hypotheses_hold) {
      ++applicable;
      if (!v.conclusion_holds) ++violations;
    }
  };
  for (int r2 = 3; r2 <= 8; ++r2) {
    for (int r0 = 1; r0 < r2; ++r0) {
      for (int r1 = r0 + 1; r1 < r2; ++r1) {
        for (double delta : {0.01, 0.05, 0.1, 0.2}) {
          record(check_ball_product(Z, r0, r1, r2, delta, Z.ball(r0), Z.ball(r2)));
        }
      }
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    const int r2 = 3 + static_cast<int>(rng() % 6);
    const int r0 = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(r2 - 2));
    const int r1 = r0 + 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(r2 - r0 - 1));
    const double delta = 0.01 + 0.3 * unit(rng);
    auto thin = [&](int r, double keep) {
      WeightedElementSet w;
      const auto ball = Z.ball(r);
      for (const auto& e : ball.entries()) {
        if (unit(rng) < keep) w.insert(e.element, e.weight);
      }
      return w;
    };
    record(check_ball_product(Z, r0, r1, r2, delta, thin(r0, 0.9), thin(r2, 0.95)));
  }
  return {"ball_product", violations == 0,
          fmt::format("{} instances, {} with hypotheses, {} violations", instances, applicable, violations)};
}

CheckOutcome check_chain(std::mt19937_64& rng, std::size_t trials) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng() % 12;
    const std::size_t dim = 1 + rng() % 3;
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts) {
      for (auto& x : p) x = unit(rng);
    }
    const FiniteMetricFamily family(n, [&](std::size_t i, std::size_t j) {
      double d = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d = std::max(d, std::abs(pts[i][k] - pts[j][k]));
      return d;
    });
    const double eps = 0.02 + 0.5 * unit(rng);
    const auto sep = sep_exact(family, eps);
    const auto span = span_exact(family, eps);
    const bool ok = cov_exact(family, 2 * eps) <= span && span <= sep && sep <= cov_exact(family, eps);
    violations += ok ? 0 : 1;
  }
  return {"chain_inequality", violations == 0, fmt::format("{} families, {} violations", trials, violations)};
}

CheckOutcome check_map_inclusion() {
  const auto Z = GroupModel::integer_lattice(1);
  const auto gm = ShiftSystem::golden_mean(Z);
  std::size_t violations = 0;
  std::size_t members = 0;
  for (const auto& M : {cyclic_quotient(10), interval_space(10)}) {
    for (double delta : {0.0, 0.1, 0.3}) {
      for (Engine engine : {Engine::strict, Engine::soft}) {
        MapSpaceSpec strict;
        strict.U = Z.ball(2);
        strict.delta = delta;
        strict.engine = engine;
        auto avg = strict;
        avg.mode = MapMode::averaged;
        const MicrostateRules a(M, gm, strict);
        const MicrostateRules b(M, gm, avg);
        Labeling omega(M.size(), 0);
        for (std::uint32_t code = 0; code < (1U << M.size()); ++code) {
          for (std::size_t p = 0; p < M.size(); ++p) omega[p] = static_cast<int>((code >> p) & 1U);
          if (a.accepts(omega)) {
            ++members;
            if (!b.accepts(omega)) ++violations;
          }
        }
      }
    }
  }
  return {"map_in_map_avg", violations == 0, fmt::format("{} strict members, {} outside Map_avg", members, violations)};
}

CheckOutcome check_transport(std::mt19937_64& rng, std::size_t trials) {
  std::size_t violations = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 5 + rng() % 36;
    const int A = 2 + static_cast<int>(rng() % 2);
    const auto M = cyclic_quotient(n);
    Labeling omega(n);
    for (auto& s : omega) s = static_cast<int>(rng() % static_cast<std::uint64_t>(A));
    std::vector<std::int64_t> target(static_cast<std::size_t>(A), 0);
    for (std::size_t p = 0; p < n; ++p) ++target[rng() % static_cast<std::uint64_t>(A)];
    const auto result = transport_to_target(M, omega, target);
    std::vector<std::int64_t> got(static_cast<std::size_t>(A), 0);
    std::vector<std::int64_t> had(static_cast<std::size_t>(A), 0);
    for (auto s : result.labels) ++got[static_cast<std::size_t>(s)];
    for (auto s : omega) ++had[static_cast<std::size_t>(s)];
    std::int64_t excess = 0;
    for (std::size_t a = 0; a < had.size(); ++a) excess += std::max<std::int64_t>(0, had[a] - target[a]);
    if (got != target || result.relabeled != excess) ++violations;
  }
  return {"transport_exactness", violations == 0, fmt::format("{} pairs, {} violations", trials, violations)};
}

CheckOutcome check_local_mp_suite(const ExperimentConfig& cfg) {
  auto M = cfg.family.build(cfg.model_size.value_or(16));
  if (cfg.verify.corrupt_action_table) M = corrupt_action_table(M, 0, 1, 2);
  const auto& G = M.group();
  const auto U = G.ball(G.is_discrete() ? 2.0 : 2.0 * G.step());
  std::size_t failures = 0;
  for (const auto& e : U.entries()) {
    std::vector<std::size_t> K;
    for (std::size_t p = 0; p < M.size(); ++p) {
      if (M.act(e.element, p)) K.push_back(p);
    }
    if (!check_local_mp(M, e.element, K)) ++failures;
  }
  return {"local_measure_preservation", failures == 0,
          fmt::format("{} elements of U on a {}-point {} model, {} failures", U.size(), M.size(),
                      to_string(cfg.family.kind), failures)};
}

CheckOutcome check_relabeling() {
  const auto Z = GroupModel::integer_lattice(1);
  const auto gm = ShiftSystem::golden_mean(Z);
  Eigen::MatrixXd P(2, 2);
  P << 0.6, 0.4, 1.0, 0.0;
  const auto mu = InvariantMeasure::markov(P);
  Schedule s;
  s.sizes = {6, 8};
  s.radii = {1};
  s.deltas = {0.1, 0.0};
  s.epsilons = {0.3, 0.05};
  s.etas = {0.3};
  s.window = {Z.lattice({0}), Z.lattice({1})};
  const ModelFamily cyclic{ModelKind::cyclic};
  const bool top = to_json(h_top_estimate(cyclic, gm, s)).dump() ==
                   to_json(h_top_estimate(cyclic, gm.relabeled({1, 0}), s)).dump();
  const bool meas = to_json(h_meas_estimate(cyclic, gm, mu, s)).dump() ==
                    to_json(h_meas_estimate(cyclic, gm.relabeled({1, 0}), mu.relabeled({1, 0}), s)).dump();
  return {"relabeling_invariance", top && meas,
          fmt::format("topological report {}, measure report {}", top ? "identical" : "differs",
                      meas ? "identical" : "differs")};
}

CheckOutcome check_equidistribution(std::uint64_t seed, std::size_t trials) {
  const auto F2 = GroupModel::free_group(2);
  const auto M = random_schreier_space(200, 2, seed);
  MapSpaceSpec spec;
  spec.U = F2.ball(1);
  spec.delta = 0.01;
  const double kappa = 1.0 - sofic_quality(M, F2.ball(2));
  const double bound = spec.delta + kappa + 0.02;
  const double worst = equidistribution_check(M, ShiftSystem::full_shift(F2, 2), spec, {F2.identity()},
                                              std::min<std::size_t>(trials, 100), seed);
  return {"equidistribution", worst <= bound, fmt::format("max TV {:.6f}, bound {:.6f}", worst, bound)};
}

CheckOutcome check_transfer_matrix() {
  const auto Z = GroupModel::integer_lattice(1);
  const auto gm = ShiftSystem::golden_mean(Z);
  std::size_t mismatches = 0;
  for (std::size_t n = 3; n <= 16; ++n) {
    MapSpaceSpec spec;
    spec.U = Z.ball(1);
    if (count_microstates(cyclic_quotient(n), spec, gm).lower != transfer_matrix_count(gm, n)) ++mismatches;
  }
  return {"transfer_matrix", mismatches == 0, fmt::format("n = 3..16, {} mismatches", mismatches)};
}

}  // namespace

std::vector<CheckOutcome> run_invariant_suite(const ExperimentConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  const auto trials = cfg.verify.trials;
  return {check_ball_product(rng, trials),
          check_chain(rng, trials),
          check_map_inclusion(),
          check_transport(rng, trials),
          check_local_mp_suite(cfg),
          check_relabeling(),
          check_equidistribution(cfg.seed, trials),
          check_transfer_matrix()};
}

int cmd_build_model(const ExperimentConfig& cfg, const CommandContext& ctx) {
  if (!cfg.model_size) throw ConfigError("build-model needs model.size");
  Timings timings;
  const auto M = timings.time("build", [&] { return cfg.family.build(*cfg.model_size); });
  const auto radii = cfg.quality_radii.empty() ? std::vector<double>{1, 2, 3} : cfg.quality_radii;
  nlohmann::json summary;
  summary["kind"] = to_string(cfg.family.kind);
  summary["n"] = M.size();
  summary["volume"] = M.volume();
  summary["axioms"] = timings.time("axioms", [&] { return M.check_axioms(); });
  summary["quality"] = nlohmann::json::array();
  timings.time("quality", [&] {
    for (double r : radii) summary["quality"].push_back({{"radius", r}, {"value", sofic_quality(M, M.group().ball(r))}});
  });
  const auto dir = output_dir(cfg, ctx);
  const auto text = envelope(cfg.hash(), "model", summary).dump(2) + "\n";
  write_file(dir / "model.json", text);
  write_manifest(dir, cfg, ctx, "build-model", timings, nullptr);
  out(ctx) << text;
  return summary["axioms"].get<bool>() ? kExitOk : kExitInvariant;
}

int cmd_estimate(const ExperimentConfig& cfg, const std::string& mode, const CommandContext& ctx) {
  const auto& system = need_system(cfg);
  const auto& schedule = need_schedule(cfg);
  const auto options = estimate_options(cfg, ctx);
  auto need_measure = [&]() -> const InvariantMeasure& {
    if (!cfg.measure) throw ConfigError(fmt::format("mode '{}' needs a measure block", mode));
    return *cfg.measure;
  };
  Timings timings;
  const auto report = timings.time("estimate", [&] {
    return as_config([&] {
      if (mode == "top") return h_top_estimate(cfg.family, system, schedule, options);
      if (mode == "avg") return h_avg_estimate(cfg.family, system, schedule, options);
      if (mode == "measure") return h_meas_estimate(cfg.family, system, need_measure(), schedule, options);
      if (mode == "mp") return h_meas_mp_estimate(cfg.family, system, need_measure(), schedule, options);
      if (mode == "relA") {
        if (cfg.boxes.empty()) throw ConfigError("mode 'relA' needs a relative block with boxes");
        return h_rel_A_estimate(cfg.family, system, cfg.boxes, schedule, options);
      }
      throw ConfigError(fmt::format("mode '{}' is not one of top, avg, measure, mp, relA", mode));
    });
  });
  const auto dir = output_dir(cfg, ctx);
  write_file(dir / "report.json", envelope(cfg.hash(), "report", to_json(report)).dump(2) + "\n");
  write_file(dir / "report.csv", to_csv(report));
  write_manifest(dir, cfg, ctx, "estimate " + mode, timings,
                 {{"checked", report.oracle_checked}, {"agreed", report.oracle_agreed}});
  for (const auto& e : report.estimates) {
    out(ctx) << fmt::format("{} {}: {} (n={}, U={}, delta={})\n", mode, to_string(e.engine), show(e.value),
                            schedule.sizes.back(), e.U_radius, e.delta);
  }
  if (!report.monotonicity.empty()) {
    out(ctx) << fmt::format("{} monotonicity violations recorded in the report\n", report.monotonicity.size());
  }
  return report.oracle_agreed == report.oracle_checked ? kExitOk : kExitInvariant;
}

int cmd_verify(const ExperimentConfig& cfg, const CommandContext& ctx) {
  Timings timings;
  const auto outcomes = timings.time("suite", [&] { return run_invariant_suite(cfg); });
  bool all = true;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& o : outcomes) {
    out(ctx) << fmt::format("{} {:<28} {}\n", o.passed ? "PASS" : "FAIL", o.name, o.detail);
    table.push_back({{"check", o.name}, {"passed", o.passed}, {"detail", o.detail}});
    all = all && o.passed;
  }
  const auto dir = output_dir(cfg, ctx);
  write_file(dir / "verify.json", envelope(cfg.hash(), "checks", table).dump(2) + "\n");
  write_manifest(dir, cfg, ctx, "verify", timings, nullptr);
  return all ? kExitOk : kExitInvariant;
}

int cmd_scan_variational(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto& system = need_system(cfg);
  const auto& schedule = need_schedule(cfg);
  if (!cfg.grid) throw ConfigError("scan-variational needs a scan block");
  Timings timings;
  const auto result = timings.time("scan", [&] {
    return as_config([&] { return variational_scan(cfg.family, system, *cfg.grid, schedule, estimate_options(cfg, ctx)); });
  });
  const auto dir = output_dir(cfg, ctx);
  write_file(dir / "scan.json", envelope(cfg.hash(), "scan", to_json(result)).dump(2) + "\n");
  write_manifest(dir, cfg, ctx, "scan-variational", timings, nullptr);
  std::string argmax;
  for (double p : result.argmax) argmax += fmt::format("{}{}", argmax.empty() ? "" : ",", p);
  out(ctx) << fmt::format("sup {} at ({}), top {}, gap {}\n", show(result.sup), argmax, show(result.top), show(result.gap));
  return kExitOk;
}

}  // namespace sofic
