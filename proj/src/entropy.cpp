#include "sofic/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "sofic/packing.hpp"
#include "sofic/parallel.hpp"

namespace sofic {

namespace {

constexpr double kTolerance = 1e-12;
constexpr std::size_t kGreedyEnumerate = std::size_t{1} << 15;
constexpr std::size_t kGreedySamples = std::size_t{1} << 12;
constexpr std::uint64_t kSepBudget = 200'000;

template <class T>
void require_strictly(const std::vector<T>& values, bool increasing, const char* what) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    const bool ok = increasing ? values[i] > values[i - 1] : values[i] < values[i - 1];
    if (!ok) throw std::invalid_argument(fmt::format("schedule {} must be strictly {}", what, increasing ? "increasing" : "decreasing"));
  }
}

struct Plan {
  std::string mode;
  MapMode map_mode = MapMode::strict;
  bool uses_eta = false;
  std::function<std::optional<MeasureConstraint>(std::size_t n, std::optional<double> eta)> constraint;
};

struct Job {
  std::size_t size_index;
  Engine engine;
  double radius;
  double delta;
  std::optional<double> eta;
};

// -infinity sorts below every finite value.
bool below(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a) return b.has_value();
  if (!b) return false;
  return *a < *b - kTolerance;
}

std::string show(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "-inf"; }

std::size_t hamming(const Labeling& a, const Labeling& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i] ? 1 : 0;
  return d;
}

// First-fit separated set, scanning the given microstates in order.
std::size_t streaming_greedy_sep(const std::vector<Labeling>& states, double eps, double n) {
  std::vector<const Labeling*> kept;
  for (const auto& s : states) {
    const bool far = std::all_of(kept.begin(), kept.end(),
                                 [&](const Labeling* k) { return static_cast<double>(hamming(s, *k)) / n > eps; });
    if (far) kept.push_back(&s);
  }
  return kept.size();
}

std::optional<Count> oracle_count(const LocalGSpace& M, const ShiftSystem& system, const MapSpaceSpec& spec,
                                  const ModelFamily& family) {
  if (spec.constraint) return std::nullopt;
  const MicrostateRules rules(M, system, spec);
  const auto allowance = rules.defect_allowance();
  if (allowance < 0) return Count(0);
  if (system.is_full_shift()) return boost::multiprecision::pow(Count(system.alphabet().size()), static_cast<unsigned>(M.size()));
  if (family.kind == ModelKind::cyclic && system.is_nearest_neighbor_z() && allowance == 0) {
    return transfer_matrix_count(system, M.size());
  }
  return std::nullopt;
}

std::vector<EntropyCell> run_job(const Job& job, const LocalGSpace& M, const ModelFamily& family,
                                 const ShiftSystem& system, const Schedule& schedule, const Plan& plan,
                                 const EstimateOptions& options, int inner_workers) {
  const auto& G = M.group();
  MapSpaceSpec spec;
  spec.U = G.ball(job.radius);
  spec.delta = job.delta;
  spec.mode = plan.map_mode;
  spec.engine = job.engine;
  spec.constraint = plan.constraint ? plan.constraint(M.size(), job.eta) : std::nullopt;

  CountOptions count_options;
  count_options.workers = inner_workers;
  count_options.node_limit = options.node_limit;
  const auto counted = count_microstates(M, spec, system, count_options);

  std::optional<bool> agrees;
  if (const auto expected = oracle_count(M, system, spec, family)) agrees = *expected == counted.lower;

  const double n = static_cast<double>(M.size());
  std::vector<Labeling> states;
  bool exact_states = false;
  const bool needs_states = std::any_of(schedule.epsilons.begin(), schedule.epsilons.end(),
                                        [&](double eps) { return eps * n >= 1.0 - kTolerance; });
  if (needs_states && counted.lower > 0) {
    if (counted.lower <= kGreedyEnumerate) {
      states = enumerate_microstates(M, spec, system, kGreedyEnumerate, count_options);
      exact_states = states.size() <= FiniteMetricFamily::kExactLimit;
    } else {
      std::mt19937_64 rng(options.seed ^ (0x9e3779b97f4a7c15ULL * (job.size_index + 1)));
      states = sample_microstates(M, spec, system, kGreedySamples, rng, count_options);
    }
  }
  std::optional<FiniteMetricFamily> metric;
  if (exact_states) {
    metric.emplace(states.size(), [&](std::size_t i, std::size_t j) {
      return static_cast<double>(hamming(states[i], states[j])) / n;
    });
  }

  std::vector<EntropyCell> cells;
  for (double eps : schedule.epsilons) {
    EntropyCell cell;
    cell.n = M.size();
    cell.volume = M.volume();
    cell.U_radius = job.radius;
    cell.delta = job.delta;
    cell.epsilon = eps;
    cell.eta = job.eta;
    cell.engine = job.engine;
    cell.count = counted.lower;
    cell.oracle_agrees = agrees;
    if (counted.lower == 0) {
      cell.sep = 0;
    } else if (eps * n < 1.0 - kTolerance) {
      // distinct labelings are at least 1/n apart
      cell.sep = counted.lower;
      cell.method = SepMethod::count;
    } else if (metric) {
      const auto bound = sep_budgeted(*metric, eps, kSepBudget);
      cell.sep = bound.value;
      cell.method = bound.exact ? SepMethod::exact : SepMethod::greedy;
    } else {
      cell.sep = streaming_greedy_sep(states, eps, n);
      cell.method = SepMethod::greedy;
    }
    if (cell.sep > 0) cell.value = log_count(cell.sep) / cell.volume;
    cells.push_back(std::move(cell));
  }
  return cells;
}

void monotonicity_scan(EntropyReport& report, const Schedule& schedule, std::size_t engines, std::size_t etas) {
  const std::size_t R = schedule.radii.size();
  const std::size_t D = schedule.deltas.size();
  const std::size_t P = schedule.epsilons.size();
  auto at = [&](std::size_t ni, std::size_t e, std::size_t r, std::size_t d, std::size_t h, std::size_t p) -> const EntropyCell& {
    return report.cells[((((ni * engines + e) * R + r) * D + d) * etas + h) * P + p];
  };
  auto complain = [&](const EntropyCell& from, const EntropyCell& to, const char* what) {
    report.monotonicity.push_back(fmt::format("n={} engine={} U={} delta={} eps={}: value moves {} -> {} as {}",
                                              to.n, to_string(to.engine), to.U_radius, to.delta, to.epsilon,
                                              show(from.value), show(to.value), what));
  };
  for (std::size_t ni = 0; ni < schedule.sizes.size(); ++ni) {
    for (std::size_t e = 0; e < engines; ++e) {
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t d = 0; d < D; ++d) {
          for (std::size_t h = 0; h < etas; ++h) {
            for (std::size_t p = 0; p < P; ++p) {
              const auto& c = at(ni, e, r, d, h, p);
              if (r + 1 < R && below(c.value, at(ni, e, r + 1, d, h, p).value)) {
                complain(c, at(ni, e, r + 1, d, h, p), "U grows");
              }
              if (d + 1 < D && below(c.value, at(ni, e, r, d + 1, h, p).value)) {
                complain(c, at(ni, e, r, d + 1, h, p), "delta shrinks");
              }
              if (h + 1 < etas && below(c.value, at(ni, e, r, d, h + 1, p).value)) {
                complain(c, at(ni, e, r, d, h + 1, p), "eta shrinks");
              }
              if (p + 1 < P && below(at(ni, e, r, d, h, p + 1).value, c.value)) {
                complain(c, at(ni, e, r, d, h, p + 1), "epsilon shrinks");
              }
            }
          }
        }
      }
    }
  }
}

EntropyReport run_plan(const ModelFamily& family, const ShiftSystem& system, const Schedule& schedule,
                       const EstimateOptions& options, const Plan& plan) {
  schedule.validate(plan.constraint != nullptr);
  if (!(family.group() == system.group())) {
    throw std::invalid_argument("model family and shift system act by different groups");
  }
  if (options.engines.empty()) throw std::invalid_argument("no engines requested");

  std::vector<LocalGSpace> models;
  for (auto size : schedule.sizes) models.push_back(family.build(size));

  std::vector<std::optional<double>> etas;
  if (plan.uses_eta) {
    if (schedule.etas.empty()) throw std::invalid_argument("this estimate needs an eta list");
    etas.assign(schedule.etas.begin(), schedule.etas.end());
  } else {
    etas.push_back(std::nullopt);
  }

  std::vector<Job> jobs;
  for (std::size_t ni = 0; ni < models.size(); ++ni) {
    for (auto engine : options.engines) {
      for (double r : schedule.radii) {
        for (double d : schedule.deltas) {
          for (const auto& eta : etas) jobs.push_back({ni, engine, r, d, eta});
        }
      }
    }
  }

  const int workers = std::max(1, options.workers);
  const int outer = jobs.size() >= static_cast<std::size_t>(workers) ? workers : 1;
  const int inner = outer == 1 ? workers : 1;
  std::vector<std::vector<EntropyCell>> results(jobs.size());
  parallel_for(jobs.size(), outer, [&](std::size_t i) {
    const auto& job = jobs[i];
    results[i] = run_job(job, models[job.size_index], family, system, schedule, plan, options, inner);
  });

  EntropyReport report;
  report.mode = plan.mode;
  for (auto& cells : results) {
    for (auto& c : cells) {
      if (c.oracle_agrees) {
        ++report.oracle_checked;
        report.oracle_agreed += *c.oracle_agrees ? 1 : 0;
      }
      report.cells.push_back(std::move(c));
    }
  }
  const std::size_t largest = schedule.sizes.back();
  for (const auto& c : report.cells) {
    if (c.n == largest) report.limsup.push_back(c);
  }
  for (auto engine : options.engines) {
    std::optional<EngineEstimate> best;
    for (const auto& c : report.limsup) {
      if (c.engine != engine || c.epsilon != schedule.epsilons.back()) continue;
      if (!best || below(c.value, best->value)) best = EngineEstimate{engine, c.value, c.U_radius, c.delta, c.eta};
    }
    report.estimates.push_back(*best);
  }
  monotonicity_scan(report, schedule, options.engines.size(), etas.size());
  return report;
}

void require_measure_fits(const ShiftSystem& system, const InvariantMeasure& mu) {
  if (mu.alphabet_size() != system.alphabet().size()) {
    throw std::invalid_argument("measure and system use different alphabets");
  }
  if (!mu.supported_on(system)) throw std::invalid_argument("measure charges forbidden patterns");
}

}  // namespace

void Schedule::validate(bool needs_window) const {
  if (sizes.empty() || radii.empty() || deltas.empty() || epsilons.empty()) {
    throw std::invalid_argument("schedule needs sizes, radii, deltas and epsilons");
  }
  require_strictly(sizes, true, "sizes");
  require_strictly(radii, true, "radii");
  require_strictly(deltas, false, "deltas");
  require_strictly(epsilons, false, "epsilons");
  require_strictly(etas, false, "etas");
  if (sizes.front() == 0) throw std::invalid_argument("model sizes must be positive");
  if (radii.front() < 0.0 || deltas.back() < 0.0) throw std::invalid_argument("radii and deltas must be nonnegative");
  if (!(epsilons.back() > 0.0)) throw std::invalid_argument("epsilons must be positive");
  if (!etas.empty() && etas.back() < 0.0) throw std::invalid_argument("etas must be nonnegative");
  if (needs_window && window.empty()) throw std::invalid_argument("schedule window is empty");
}

const EngineEstimate& EntropyReport::estimate(Engine engine) const {
  for (const auto& e : estimates) {
    if (e.engine == engine) return e;
  }
  throw std::out_of_range(fmt::format("report has no {} engine", to_string(engine)));
}

EntropyReport h_top_estimate(const ModelFamily& family, const ShiftSystem& system, const Schedule& schedule,
                             const EstimateOptions& options) {
  return run_plan(family, system, schedule, options, {"top", MapMode::strict, false, nullptr});
}

EntropyReport h_avg_estimate(const ModelFamily& family, const ShiftSystem& system, const Schedule& schedule,
                             const EstimateOptions& options) {
  return run_plan(family, system, schedule, options, {"avg", MapMode::averaged, false, nullptr});
}

EntropyReport h_meas_estimate(const ModelFamily& family, const ShiftSystem& system, const InvariantMeasure& mu,
                              const Schedule& schedule, const EstimateOptions& options) {
  require_measure_fits(system, mu);
  const auto center = mu.marginal(system.group(), schedule.window);
  Plan plan{"measure", MapMode::strict, true, [&](std::size_t, std::optional<double> eta) {
              return std::optional(MeasureConstraint::tv_ball(schedule.window, center, *eta));
            }};
  return run_plan(family, system, schedule, options, plan);
}

EntropyReport h_meas_mp_estimate(const ModelFamily& family, const ShiftSystem& system, const InvariantMeasure& mu,
                                 const Schedule& schedule, const EstimateOptions& options) {
  require_measure_fits(system, mu);
  const auto center = mu.marginal(system.group(), schedule.window);
  std::vector<QuantizationNote> notes;
  for (auto n : schedule.sizes) {
    QuantizationNote note;
    note.n = n;
    note.counts = quantize_marginal(center.mass, static_cast<std::int64_t>(n));
    std::vector<std::pair<std::string, std::size_t>> by_name;
    for (std::size_t c = 0; c < note.counts.size(); ++c) {
      std::string name;
      for (int s : pattern_symbols(static_cast<std::int64_t>(c), schedule.window.size(), system.alphabet().size())) {
        name += (name.empty() ? "" : " ") + system.alphabet().names()[static_cast<std::size_t>(s)];
      }
      by_name.emplace_back(std::move(name), c);
    }
    std::sort(by_name.begin(), by_name.end());
    double sum = 0.0;
    for (const auto& [name, c] : by_name) {
      note.named.emplace_back(name, note.counts[c]);
      sum += std::abs(static_cast<double>(note.counts[c]) / static_cast<double>(n) - center.mass[c]);
    }
    note.tv_to_target = 0.5 * sum;
    notes.push_back(std::move(note));
  }
  Plan plan{"mp", MapMode::measure_preserving, false, [&](std::size_t n, std::optional<double>) {
              const auto it = std::find_if(notes.begin(), notes.end(), [&](const QuantizationNote& q) { return q.n == n; });
              return std::optional(MeasureConstraint::exact(schedule.window, it->counts));
            }};
  auto report = run_plan(family, system, schedule, options, plan);
  report.quantization = std::move(notes);
  return report;
}

EntropyReport h_rel_A_estimate(const ModelFamily& family, const ShiftSystem& system,
                               const std::vector<MarginalBox>& boxes, const Schedule& schedule,
                               const EstimateOptions& options) {
  if (boxes.empty()) throw std::invalid_argument("relative estimate needs at least one box");
  std::size_t patterns = 1;
  for (std::size_t i = 0; i < schedule.window.size(); ++i) patterns *= static_cast<std::size_t>(system.alphabet().size());
  for (const auto& b : boxes) {
    if (b.lower.size() != patterns || b.upper.size() != patterns) {
      throw std::invalid_argument(fmt::format("boxes must have {} coordinates for this window", patterns));
    }
    for (std::size_t c = 0; c < patterns; ++c) {
      if (b.lower[c] < 0.0 || b.upper[c] > 1.0) throw std::invalid_argument("box bounds must lie in [0, 1]");
    }
  }
  Plan plan{"relA", MapMode::strict, false, [&](std::size_t, std::optional<double>) {
              return std::optional(MeasureConstraint::box_union(schedule.window, boxes));
            }};
  return run_plan(family, system, schedule, options, plan);
}

double equidistribution_check(const LocalGSpace& M, const ShiftSystem& system, const MapSpaceSpec& spec,
                              const std::vector<GroupElement>& window, std::size_t samples, std::uint64_t seed) {
  if (spec.mode != MapMode::strict) throw std::invalid_argument("equidistribution check needs strict membership");
  if (window.empty()) throw std::invalid_argument("equidistribution check needs a window");
  const MicrostateRules rules(M, system, spec);
  const int A = system.alphabet().size();
  std::mt19937_64 rng(seed);

  std::vector<Labeling> accepted;
  const std::size_t cap = 64 * samples;
  std::uniform_int_distribution<int> symbol(0, A - 1);
  for (std::size_t draw = 0; draw < cap && accepted.size() < samples; ++draw) {
    Labeling omega(M.size());
    for (auto& s : omega) s = symbol(rng);
    if (rules.accepts(omega)) accepted.push_back(std::move(omega));
  }
  if (accepted.size() < samples) {
    auto rest = sample_microstates(M, spec, system, samples - accepted.size(), rng);
    accepted.insert(accepted.end(), rest.begin(), rest.end());
  }

  const auto& G = M.group();
  double worst = 0.0;
  for (const auto& omega : accepted) {
    const auto base = empirical_measure(M, omega, window, A).distribution();
    for (int i = 0; i < G.generator_count(); ++i) {
      const auto ginv = G.inverse(G.generator(i));
      std::vector<GroupElement> shifted;
      for (const auto& f : window) shifted.push_back(G.multiply(ginv, f));
      worst = std::max(worst, tv_distance(base, empirical_measure(M, omega, shifted, A).distribution()));
    }
  }
  return worst;
}

std::vector<MeasureGrid::Point> MeasureGrid::build(const ShiftSystem& system) const {
  if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("grid step must lie in (0, 1]");
  if (system.alphabet().size() != 2) throw std::invalid_argument("measure grids need a two-letter alphabet");
  const auto K = static_cast<int>(std::lround(1.0 / step));
  if (std::abs(K * step - 1.0) > 1e-9) throw std::invalid_argument("grid step must divide 1");
  std::vector<double> ticks;
  for (int k = 0; k <= K; ++k) ticks.push_back(k == K ? 1.0 : k * step);

  std::vector<Point> points;
  if (kind == Kind::bernoulli) {
    for (double p : ticks) {
      auto mu = InvariantMeasure::bernoulli({1.0 - p, p});
      if (mu.supported_on(system)) points.push_back({{p}, std::move(mu)});
    }
    return points;
  }
  if (!system.is_nearest_neighbor_z()) throw std::invalid_argument("Markov grids need a nearest-neighbor Z-system");
  const auto T = system.transfer_matrix();
  std::vector<int> free_rows;
  for (int a = 0; a < 2; ++a) {
    const int allowed = T[a][0] + T[a][1];
    if (allowed == 2) free_rows.push_back(a);
  }
  std::vector<std::size_t> index(free_rows.size(), 0);
  while (true) {
    Eigen::MatrixXd P(2, 2);
    std::vector<double> params;
    std::size_t f = 0;
    bool usable = true;
    for (int a = 0; a < 2; ++a) {
      if (f < free_rows.size() && free_rows[f] == a) {
        const double p = ticks[index[f++]];
        P(a, 0) = 1.0 - p;
        P(a, 1) = p;
        params.push_back(p);
      } else if (T[a][0] + T[a][1] == 1) {
        P(a, 0) = T[a][0];
        P(a, 1) = T[a][1];
      } else {
        usable = false;
      }
    }
    if (usable) {
      try {
        points.push_back({params, InvariantMeasure::markov(P)});
      } catch (const std::invalid_argument&) {
        // several stationary vectors: not a single measure
      }
    }
    std::size_t i = 0;
    while (i < index.size() && index[i] + 1 == ticks.size()) index[i++] = 0;
    if (i == index.size()) break;
    ++index[i];
  }
  return points;
}

VariationalResult variational_scan(const ModelFamily& family, const ShiftSystem& system, const MeasureGrid& grid,
                                   const Schedule& schedule, const EstimateOptions& options) {
  EstimateOptions single = options;
  single.engines = {options.engines.empty() ? Engine::strict : options.engines.front()};
  const Engine engine = single.engines.front();

  VariationalResult result;
  for (auto& point : grid.build(system)) {
    const auto report = h_meas_estimate(family, system, point.measure, schedule, single);
    const auto value = report.estimate(engine).value;
    if (value && (!result.sup || *value > *result.sup + kTolerance)) {
      result.sup = value;
      result.argmax = point.params;
    }
    result.points.push_back({std::move(point.params), value});
  }
  result.top = h_top_estimate(family, system, schedule, single).estimate(engine).value;
  if (result.top && result.sup) result.gap = *result.top - *result.sup;
  return result;
}

std::string to_string(SepMethod method) {
  switch (method) {
    case SepMethod::count:
      return "count";
    case SepMethod::exact:
      return "exact";
    case SepMethod::greedy:
      return "greedy";
  }
  return "unknown";
}

}  // namespace sofic
