#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace sofic {

enum class GroupKind { integer_lattice, free_group, real_line };

struct LatticeVector {
  std::vector<std::int64_t> coords;
  auto operator<=>(const LatticeVector&) const = default;
};

// Reduced word. Letter k > 0 is generator k (1-based), -k is its inverse.
struct FreeWord {
  std::vector<int> letters;
  auto operator<=>(const FreeWord&) const = default;
};

// Integer multiple of the quadrature step of a real-line model.
struct GridReal {
  std::int64_t steps = 0;
  auto operator<=>(const GridReal&) const = default;
};

using GroupElement = std::variant<LatticeVector, FreeWord, GridReal>;

class WeightedElementSet;

// The acting group: Z^d, the free group F_r, or R on a uniform grid.
//
// Balls are closed in the word metric for the discrete groups (l-infinity on
// Z^d, word length on F_r) and open on the real line, where they are sampled
// at the grid points with weight equal to the step.
class GroupModel {
 public:
  static GroupModel integer_lattice(int dim);
  static GroupModel free_group(int rank);
  static GroupModel real_line(double step);

  GroupKind kind() const { return kind_; }
  int dim() const;
  int rank() const;
  double step() const;
  int generator_count() const;
  bool is_discrete() const { return kind_ != GroupKind::real_line; }

  GroupElement identity() const;
  GroupElement generator(int index) const;
  GroupElement multiply(const GroupElement& g, const GroupElement& h) const;
  GroupElement inverse(const GroupElement& g) const;
  bool contains(const GroupElement& g) const;
  bool is_identity(const GroupElement& g) const;

  // Distance to the identity in the ball convention of this model.
  double length(const GroupElement& g) const;
  WeightedElementSet ball(double radius) const;
  // Haar weight carried by a single element (1 on discrete groups).
  double point_weight() const;

  GroupElement lattice(std::vector<std::int64_t> coords) const;
  GroupElement word(std::string_view text) const;
  // Exact grid value; throws if value is not a multiple of the step.
  GroupElement real(double value) const;
  // Nearest grid element together with the absolute quantization error.
  std::pair<GroupElement, double> quantize(double value) const;
  double real_value(const GroupElement& g) const;

  std::string format(const GroupElement& g) const;

  bool operator==(const GroupModel&) const = default;

 private:
  GroupModel(GroupKind kind, int dim, double step) : kind_(kind), dim_(dim), step_(step) {}
  void require(const GroupElement& g) const;

  GroupKind kind_;
  int dim_ = 0;
  double step_ = 0.0;
};

// Finite set of group elements with nonnegative Haar weights.
class WeightedElementSet {
 public:
  struct Entry {
    GroupElement element;
    double weight;
  };

  void insert(GroupElement element, double weight);
  bool contains(const GroupElement& g) const { return index_.contains(g); }
  std::span<const Entry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::vector<GroupElement> elements() const;

 private:
  std::vector<Entry> entries_;
  std::map<GroupElement, std::size_t> index_;
};

double haar(const WeightedElementSet& set);

struct BallProductVerdict {
  bool hypotheses_hold = false;
  bool conclusion_holds = false;
  double haar_b0 = 0.0;
  double haar_b1 = 0.0;
  double haar_b2 = 0.0;
  double haar_w0 = 0.0;
  double haar_w2 = 0.0;
};

// Evaluates the ball-product property on concrete sets: if r0 + r1 < r2,
// delta * Haar(B(r2)) < (1 - delta) * Haar(B(r0)) and W_i is a large subset
// of B(r_i) for i = 0, 2, then W0 * W2 contains B(r1). The conclusion is
// always computed by enumerating the product set.
BallProductVerdict check_ball_product(const GroupModel& group, double r0, double r1, double r2,
                                      double delta, const WeightedElementSet& w0,
                                      const WeightedElementSet& w2);

}  // namespace sofic
