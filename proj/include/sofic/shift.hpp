#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sofic/group.hpp"

namespace sofic {

class Alphabet {
 public:
  explicit Alphabet(std::vector<std::string> names);
  static Alphabet of_size(int size);

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  bool operator==(const Alphabet&) const = default;

 private:
  std::vector<std::string> names_;
};

// Symbols placed on a finite window of group elements.
struct Pattern {
  std::vector<GroupElement> window;
  std::vector<int> symbols;

  bool operator==(const Pattern&) const = default;
};

// Index of a symbol tuple in A^k, first entry most significant.
std::int64_t pattern_code(const std::vector<int>& symbols, int alphabet_size);
std::vector<int> pattern_symbols(std::int64_t code, std::size_t length, int alphabet_size);

// Full shift or subshift of finite type over a finite alphabet.
//
// Shift convention: (g.x)(h) = x(g^-1 h). A forbidden pattern q occurs in x
// at the origin when x(f) = q(f) for every f in its window.
class ShiftSystem {
 public:
  ShiftSystem(GroupModel group, Alphabet alphabet, std::vector<Pattern> forbidden,
              std::string name = "sft");

  static ShiftSystem full_shift(const GroupModel& group, int alphabet_size);
  // No two 1s adjacent along any generator.
  static ShiftSystem golden_mean(const GroupModel& group);
  // Real-line flow with exactly one marker per `period` cells: translation
  // acts on the marker phase as an isometry.
  static ShiftSystem rotation(const GroupModel& group, int period);

  const GroupModel& group() const { return group_; }
  const Alphabet& alphabet() const { return alphabet_; }
  const std::vector<Pattern>& forbidden() const { return forbidden_; }
  const std::string& name() const { return name_; }
  bool is_full_shift() const { return forbidden_.empty(); }

  // Apply the symbol permutation perm (old symbol s becomes perm[s]).
  ShiftSystem relabeled(const std::vector<int>& perm) const;

  // Z-systems whose constraints involve at most two consecutive sites.
  bool is_nearest_neighbor_z() const;
  // Allowed transitions a -> b, i.e. x(k) = a, x(k+1) = b permitted.
  std::vector<std::vector<int>> transfer_matrix() const;

  // For Z-systems: whether some periodic configuration exists.
  std::optional<bool> z_nonempty() const;

 private:
  GroupModel group_;
  Alphabet alphabet_;
  std::vector<Pattern> forbidden_;
  std::string name_;
};

std::vector<int> inverse_permutation(const std::vector<int>& perm);

// rho_f(x, y) = sum_g f(g) [x(g^-1) != y(g^-1)] * Haar weight of g, the
// identity-coordinate metric averaged over translates.
class MollifiedMetric {
 public:
  MollifiedMetric(GroupModel group, WeightedElementSet density);

  double operator()(const Pattern& x, const Pattern& y) const;
  const WeightedElementSet& density() const { return density_; }

 private:
  GroupModel group_;
  WeightedElementSet density_;
};

MollifiedMetric mollify(const GroupModel& group, const WeightedElementSet& density);

// Uniform density on a finite set (normalized against the Haar weights).
WeightedElementSet uniform_density(const GroupModel& group, const WeightedElementSet& set);

}  // namespace sofic
