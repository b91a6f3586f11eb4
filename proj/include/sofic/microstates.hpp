#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sofic/group.hpp"
#include "sofic/measure.hpp"
#include "sofic/model_space.hpp"
#include "sofic/shift.hpp"

namespace sofic {

// omega: M -> A. The induced map is phi(p)(h) = omega(h^-1.p).
using Labeling = std::vector<int>;

enum class MapMode { strict, averaged, measure_preserving };
enum class Engine { strict, soft };

struct MarginalBox {
  std::vector<double> lower;
  std::vector<double> upper;
};

// Restriction on the empirical F-marginal of a microstate.
struct MeasureConstraint {
  enum class Kind { tv_ball, exact_counts, boxes };

  Kind kind = Kind::tv_ball;
  std::vector<GroupElement> window;
  PatternDistribution center;
  double eta = 0.0;
  std::vector<std::int64_t> counts;
  std::vector<MarginalBox> boxes;

  static MeasureConstraint tv_ball(std::vector<GroupElement> window, PatternDistribution center,
                                   double eta);
  static MeasureConstraint exact(std::vector<GroupElement> window, std::vector<std::int64_t> counts);
  static MeasureConstraint box_union(std::vector<GroupElement> window, std::vector<MarginalBox> boxes);
};

struct MapSpaceSpec {
  WeightedElementSet U;
  double delta = 0.0;
  MapMode mode = MapMode::strict;
  Engine engine = Engine::strict;
  std::optional<MeasureConstraint> constraint;
};

struct EmpiricalCounts {
  int alphabet_size = 2;
  std::size_t window_size = 1;
  std::vector<std::int64_t> counts;
  std::int64_t undefined = 0;
  std::int64_t total = 0;

  PatternDistribution distribution() const;
};

double equivariance_defect(const LocalGSpace& M, const Labeling& omega, const GroupElement& g);
double sft_defect(const LocalGSpace& M, const Labeling& omega, const ShiftSystem& system);
bool is_member(const LocalGSpace& M, const Labeling& omega, const MapSpaceSpec& spec,
               const ShiftSystem& system);
EmpiricalCounts empirical_measure(const LocalGSpace& M, const Labeling& omega,
                                  const std::vector<GroupElement>& window, int alphabet_size);
double rho_M_distance(const LocalGSpace& M, const Labeling& a, const Labeling& b);

// Largest-remainder rounding of a probability vector to counts summing to n.
// Tied remainders are rounded up together when the whole tie fits.
std::vector<std::int64_t> quantize_marginal(const std::vector<double>& mass, std::int64_t n);

struct TransportResult {
  Labeling labels;
  std::int64_t relabeled = 0;
};

// Relabel the fewest points so the symbol counts become `target`.
TransportResult transport_to_target(const LocalGSpace& M, const Labeling& omega,
                                    const std::vector<std::int64_t>& target);

// sqrt(eps) + eps + kappa; the modulus-of-continuity term is zero for the
// identity-coordinate metric.
double perturbation_stability_bound(double kappa, double epsilon);

// Everything the membership test and the enumeration engines need, compiled
// once per (model, system, spec).
class MicrostateRules {
 public:
  struct Check {
    std::size_t point;
    std::vector<std::size_t> cells;
    std::vector<int> symbols;
  };

  MicrostateRules(const LocalGSpace& M, const ShiftSystem& system, const MapSpaceSpec& spec);

  const LocalGSpace& model() const { return *model_; }
  int alphabet_size() const { return alphabet_size_; }
  const std::vector<Check>& checks() const { return checks_; }
  // Points whose forbidden-pattern cells leave the domain.
  const std::vector<bool>& certain_defects() const { return certain_; }
  // Cells of the constraint window at each point, empty when undefined.
  const std::vector<std::vector<std::size_t>>& window_cells() const { return window_cells_; }
  std::int64_t undefined_windows() const { return undefined_windows_; }
  const std::optional<MeasureConstraint>& constraint() const { return constraint_; }

  // Number of defective points tolerated; negative when nothing is accepted.
  std::int64_t defect_allowance() const { return allowance_; }
  // Equivariance term in point units (max or Haar mean over U).
  double equivariance_units() const { return eq_units_; }

  std::int64_t defective_points(const Labeling& omega) const;
  std::vector<std::int64_t> window_counts(const Labeling& omega) const;
  bool constraint_holds(const std::vector<std::int64_t>& counts) const;
  bool accepts(const Labeling& omega) const;

 private:
  const LocalGSpace* model_;
  int alphabet_size_;
  std::vector<Check> checks_;
  std::vector<bool> certain_;
  std::vector<std::vector<std::size_t>> window_cells_;
  std::int64_t undefined_windows_ = 0;
  std::optional<MeasureConstraint> constraint_;
  std::int64_t allowance_ = 0;
  double eq_units_ = 0.0;
};

std::string to_string(MapMode mode);
std::string to_string(Engine engine);

}  // namespace sofic
