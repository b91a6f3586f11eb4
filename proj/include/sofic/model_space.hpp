#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sofic/group.hpp"

namespace sofic {

enum class ModelKind { cyclic, torus, schreier, circle, interval };

// Image table of one group element: entry p is g.p, or kNoPoint if undefined.
using ActionMap = std::vector<std::int64_t>;
inline constexpr std::int64_t kNoPoint = -1;

// Finite local G-space with uniform point weights.
//
// The action is stored as one forward and one backward table per generator.
// Words are evaluated right to left, so (g1 g2).p = g1.(g2.p), and lattice
// vectors v act as the word e_1^{v_1} ... e_d^{v_d}.
class LocalGSpace {
 public:
  static LocalGSpace from_tables(GroupModel group, ModelKind kind, double weight,
                                 std::vector<ActionMap> forward, std::vector<ActionMap> backward,
                                 std::string label, std::vector<std::int64_t> dims = {},
                                 bool validate = true);

  const GroupModel& group() const { return group_; }
  ModelKind kind() const { return kind_; }
  std::size_t size() const { return size_; }
  double weight() const { return weight_; }
  double volume() const { return weight_ * static_cast<double>(size_); }
  const std::string& label() const { return label_; }
  const std::vector<std::int64_t>& dims() const { return dims_; }

  std::optional<std::size_t> act(const GroupElement& g, std::size_t p) const;
  ActionMap action_map(const GroupElement& g) const;
  // Forward table of generator i (backward = true for its inverse).
  const ActionMap& generator_table(int i, bool backward = false) const;

  // Order used by the enumeration engines: index order, or breadth-first
  // over the generators for Schreier spaces.
  std::vector<std::size_t> traversal_order() const;

  // Circle spaces: index of the cell containing x (taken mod L), and cell centre.
  std::size_t circle_point(double x) const;
  double circle_position(std::size_t p) const;
  // Torus spaces: mixed-radix index with the first coordinate most significant.
  std::size_t torus_point(const std::vector<std::int64_t>& coords) const;

  // Distance from t to the grid used by circle spaces.
  double quantization_error(double t) const;

  // Every table entry satisfies the identity and inverse axioms.
  bool check_axioms() const;

  const std::vector<ActionMap>& forward_tables() const { return forward_; }

 private:
  LocalGSpace(GroupModel group) : group_(std::move(group)) {}

  std::optional<std::size_t> step(int generator, bool inverse, std::size_t p) const;

  GroupModel group_;
  ModelKind kind_ = ModelKind::cyclic;
  std::size_t size_ = 0;
  double weight_ = 1.0;
  std::vector<ActionMap> forward_;
  std::vector<ActionMap> backward_;
  std::vector<std::int64_t> dims_;
  std::string label_;
};

LocalGSpace cyclic_quotient(std::size_t n);
LocalGSpace torus_quotient(const std::vector<std::int64_t>& dims);
LocalGSpace schreier_space(const std::vector<std::vector<std::size_t>>& perms);
LocalGSpace random_schreier_space(std::size_t n, int rank, std::uint64_t seed);
LocalGSpace circle_space(double L, double h);
// Z acting on {0, ..., n-1} by translation where the result stays inside.
LocalGSpace interval_space(std::size_t n);

// Copy of M whose generator table has g.p redirected to g.q, breaking
// injectivity. Used to exercise the measure-preservation check.
LocalGSpace corrupt_action_table(const LocalGSpace& M, int generator, std::size_t p,
                                 std::size_t q);

std::vector<std::size_t> good_points(const LocalGSpace& M, const WeightedElementSet& U);
double sofic_quality(const LocalGSpace& M, const WeightedElementSet& U);
bool check_local_mp(const LocalGSpace& M, const GroupElement& g, const std::vector<std::size_t>& K);
bool is_atomless(const LocalGSpace& M);

// Recipe for a family of models indexed by size (the i of a sofic sequence).
struct ModelFamily {
  ModelKind kind = ModelKind::cyclic;
  int dim = 1;              // torus dimension
  int rank = 2;             // Schreier rank
  double step = 0.0;        // circle cell width
  std::uint64_t perm_seed = 0;

  GroupModel group() const;
  // size = number of points (per side for tori).
  LocalGSpace build(std::size_t size) const;
};

class SoficApproximation {
 public:
  struct Entry {
    LocalGSpace model;
    double U_radius;
    double epsilon;
  };

  void add(LocalGSpace model, double U_radius, double epsilon);
  const std::vector<Entry>& entries() const { return entries_; }
  // Measured quality of every entry against its certificate.
  std::vector<double> qualities() const;
  bool certified() const;

 private:
  std::vector<Entry> entries_;
};

std::string to_string(ModelKind kind);

}  // namespace sofic
