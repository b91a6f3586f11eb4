#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sofic/counting.hpp"
#include "sofic/measure.hpp"
#include "sofic/microstates.hpp"
#include "sofic/model_space.hpp"

namespace sofic {

// Finite stand-in for the iterated limits: model sizes grow, U grows,
// delta, epsilon and eta shrink.
struct Schedule {
  std::vector<std::size_t> sizes;
  std::vector<double> radii;
  std::vector<double> deltas;
  std::vector<double> epsilons;
  std::vector<double> etas;
  std::vector<GroupElement> window;

  // Throws std::invalid_argument on broken monotonicity or signs.
  void validate(bool needs_window) const;
};

struct EstimateOptions {
  std::vector<Engine> engines{Engine::strict, Engine::soft};
  int workers = 1;
  std::uint64_t seed = 0;
  std::uint64_t node_limit = 400'000'000;
};

enum class SepMethod { count, exact, greedy };

struct EntropyCell {
  std::size_t n = 0;
  double volume = 0.0;
  double U_radius = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  std::optional<double> eta;
  Engine engine = Engine::strict;
  Count count = 0;
  Count sep = 0;
  SepMethod method = SepMethod::count;
  // log(sep) / vol(M); empty means -infinity
  std::optional<double> value;
  // set when an independent closed form was available for the count
  std::optional<bool> oracle_agrees;
};

struct EngineEstimate {
  Engine engine = Engine::strict;
  std::optional<double> value;
  // parameters of the infimizing cell
  double U_radius = 0.0;
  double delta = 0.0;
  std::optional<double> eta;
};

struct QuantizationNote {
  std::size_t n = 0;
  std::vector<std::int64_t> counts;  // by pattern code
  std::vector<std::pair<std::string, std::int64_t>> named;  // by pattern name
  double tv_to_target = 0.0;
};

struct EntropyReport {
  std::string mode;
  std::vector<EntropyCell> cells;
  // value at the largest n for every (engine, U, delta, epsilon, eta)
  std::vector<EntropyCell> limsup;
  std::vector<EngineEstimate> estimates;
  std::vector<std::string> monotonicity;
  std::vector<QuantizationNote> quantization;
  std::size_t oracle_checked = 0;
  std::size_t oracle_agreed = 0;

  const EngineEstimate& estimate(Engine engine) const;
};

EntropyReport h_top_estimate(const ModelFamily& family, const ShiftSystem& system,
                             const Schedule& schedule, const EstimateOptions& options = {});
EntropyReport h_avg_estimate(const ModelFamily& family, const ShiftSystem& system,
                             const Schedule& schedule, const EstimateOptions& options = {});
EntropyReport h_meas_estimate(const ModelFamily& family, const ShiftSystem& system,
                              const InvariantMeasure& mu, const Schedule& schedule,
                              const EstimateOptions& options = {});
// Exact-count microstates against the largest-remainder quantization of the
// window marginal of mu.
EntropyReport h_meas_mp_estimate(const ModelFamily& family, const ShiftSystem& system,
                                 const InvariantMeasure& mu, const Schedule& schedule,
                                 const EstimateOptions& options = {});
EntropyReport h_rel_A_estimate(const ModelFamily& family, const ShiftSystem& system,
                               const std::vector<MarginalBox>& boxes, const Schedule& schedule,
                               const EstimateOptions& options = {});

// Largest TV distance between the empirical window marginal and its shift by
// a generator, over generators and sampled accepted microstates.
double equidistribution_check(const LocalGSpace& M, const ShiftSystem& system, const MapSpaceSpec& spec,
                              const std::vector<GroupElement>& window, std::size_t samples,
                              std::uint64_t seed);

struct MeasureGrid {
  enum class Kind { bernoulli, markov };
  Kind kind = Kind::bernoulli;
  double step = 0.05;

  struct Point {
    std::vector<double> params;
    InvariantMeasure measure;
  };
  // Bernoulli: P(1) = k * step. Markov: P(a -> 1) = k * step for every row
  // with a choice; rows with a single allowed successor are fixed.
  std::vector<Point> build(const ShiftSystem& system) const;
};

struct VariationalPoint {
  std::vector<double> params;
  std::optional<double> estimate;
};

struct VariationalResult {
  std::vector<VariationalPoint> points;
  std::optional<double> sup;
  std::vector<double> argmax;
  std::optional<double> top;
  std::optional<double> gap;
};

VariationalResult variational_scan(const ModelFamily& family, const ShiftSystem& system,
                                   const MeasureGrid& grid, const Schedule& schedule,
                                   const EstimateOptions& options = {});

std::string to_string(SepMethod method);

}  // namespace sofic
