#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sofic/group.hpp"
#include "sofic/shift.hpp"

namespace sofic {

// Distribution over A^F indexed by pattern_code, plus the mass of points
// whose window was not fully defined.
struct PatternDistribution {
  int alphabet_size = 2;
  std::size_t window_size = 1;
  std::vector<double> mass;
  double undefined = 0.0;

  double total() const;
};

double tv_distance(const PatternDistribution& a, const PatternDistribution& b);

enum class MeasureKind { bernoulli, markov };

class InvariantMeasure {
 public:
  static InvariantMeasure bernoulli(std::vector<double> p);
  // Stationary vector computed from P; P must have a unique one.
  static InvariantMeasure markov(const Eigen::MatrixXd& P);
  static InvariantMeasure markov(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi);

  MeasureKind kind() const { return kind_; }
  int alphabet_size() const;
  const std::vector<double>& probabilities() const { return p_; }
  const Eigen::MatrixXd& transition() const { return P_; }
  const Eigen::VectorXd& stationary() const { return pi_; }

  // Cylinder probability. Markov measures need a Z-window of consecutive sites.
  double pattern_probability(const GroupModel& group, const Pattern& q) const;
  PatternDistribution marginal(const GroupModel& group, const std::vector<GroupElement>& window) const;

  InvariantMeasure relabeled(const std::vector<int>& perm) const;
  // Markov transitions only use allowed pairs of a nearest-neighbor system.
  bool supported_on(const ShiftSystem& system) const;

 private:
  MeasureKind kind_ = MeasureKind::bernoulli;
  std::vector<double> p_;
  Eigen::MatrixXd P_;
  Eigen::VectorXd pi_;
};

// Measure of maximal entropy of an irreducible nearest-neighbor Z-system.
InvariantMeasure parry_measure(const ShiftSystem& system);

}  // namespace sofic
