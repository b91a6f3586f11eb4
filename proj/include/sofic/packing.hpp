#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace sofic {

// Finite pseudo-metric space given by its distance matrix.
class FiniteMetricFamily {
 public:
  static constexpr std::size_t kExactLimit = 4096;

  FiniteMetricFamily(std::size_t size, const std::function<double(std::size_t, std::size_t)>& distance);
  explicit FiniteMetricFamily(std::vector<std::vector<double>> distances);

  std::size_t size() const { return d_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return d_[i][j]; }
  // Symmetry, zero diagonal, nonnegativity and the triangle inequality.
  bool is_pseudo_metric(double tolerance = 1e-12) const;

 private:
  std::vector<std::vector<double>> d_;
};

// Separated: distance > eps. Spanning: every element within distance < eps of
// the subset. Cover sets have diameter < eps.
std::size_t sep_exact(const FiniteMetricFamily& family, double eps);
std::size_t span_exact(const FiniteMetricFamily& family, double eps);
std::size_t cov_exact(const FiniteMetricFamily& family, double eps);
struct SepBound {
  std::size_t value = 0;
  bool exact = false;
};

// Branch and bound stopped after node_budget search nodes; the best
// separated set found by then (never worse than greedy) is returned.
SepBound sep_budgeted(const FiniteMetricFamily& family, double eps, std::uint64_t node_budget);
std::size_t greedy_sep_lower(const FiniteMetricFamily& family, double eps);
std::size_t greedy_cov_upper(const FiniteMetricFamily& family, double eps);

}  // namespace sofic
