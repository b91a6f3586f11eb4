#include "sofic/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace sofic {

namespace {

constexpr double kProbTolerance = 1e-9;

void require_probability_vector(const std::vector<double>& p) {
  if (p.empty()) throw std::invalid_argument("probability vector is empty");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument("probabilities must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > kProbTolerance) {
    throw std::invalid_argument(fmt::format("probabilities sum to {}, not 1", total));
  }
}

void require_stochastic(const Eigen::MatrixXd& P) {
  if (P.rows() == 0 || P.rows() != P.cols()) throw std::invalid_argument("transition matrix must be square");
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(P.cols()));
    for (Eigen::Index j = 0; j < P.cols(); ++j) row[static_cast<std::size_t>(j)] = P(i, j);
    require_probability_vector(row);
  }
}

}  // namespace

double PatternDistribution::total() const {
  return std::accumulate(mass.begin(), mass.end(), 0.0) + undefined;
}

double tv_distance(const PatternDistribution& a, const PatternDistribution& b) {
  if (a.alphabet_size != b.alphabet_size || a.window_size != b.window_size ||
      a.mass.size() != b.mass.size()) {
    throw std::invalid_argument("distributions live on different pattern universes");
  }
  double sum = std::abs(a.undefined - b.undefined);
  for (std::size_t i = 0; i < a.mass.size(); ++i) sum += std::abs(a.mass[i] - b.mass[i]);
  return 0.5 * sum;
}

InvariantMeasure InvariantMeasure::bernoulli(std::vector<double> p) {
  require_probability_vector(p);
  InvariantMeasure m;
  m.kind_ = MeasureKind::bernoulli;
  m.p_ = std::move(p);
  return m;
}

InvariantMeasure InvariantMeasure::markov(const Eigen::MatrixXd& P) {
  require_stochastic(P);
  const Eigen::Index k = P.rows();
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(k, k);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd kernel = lu.kernel();
  if (kernel.cols() != 1) throw std::invalid_argument("transition matrix has no unique stationary vector");
  Eigen::VectorXd pi = kernel.col(0);
  pi /= pi.sum();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (pi(i) < -kProbTolerance) throw std::invalid_argument("stationary vector has negative entries");
    pi(i) = std::max(0.0, pi(i));
  }
  pi /= pi.sum();
  return markov(P, pi);
}

InvariantMeasure InvariantMeasure::markov(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi) {
  require_stochastic(P);
  if (pi.size() != P.rows()) throw std::invalid_argument("stationary vector has the wrong size");
  std::vector<double> pv(pi.data(), pi.data() + pi.size());
  require_probability_vector(pv);
  const Eigen::RowVectorXd moved = pi.transpose() * P;
  if ((moved - pi.transpose()).cwiseAbs().maxCoeff() > kProbTolerance) {
    throw std::invalid_argument("vector is not stationary for the transition matrix");
  }
  InvariantMeasure m;
  m.kind_ = MeasureKind::markov;
  m.P_ = P;
  m.pi_ = pi;
  m.p_ = pv;
  return m;
}

int InvariantMeasure::alphabet_size() const { return static_cast<int>(p_.size()); }

double InvariantMeasure::pattern_probability(const GroupModel& group, const Pattern& q) const {
  if (q.window.size() != q.symbols.size()) throw std::invalid_argument("malformed pattern");
  for (int s : q.symbols) {
    if (s < 0 || s >= alphabet_size()) throw std::invalid_argument("pattern symbol outside the alphabet");
  }
  if (kind_ == MeasureKind::bernoulli) {
    double prob = 1.0;
    for (int s : q.symbols) prob *= p_[static_cast<std::size_t>(s)];
    return prob;
  }
  if (group.kind() != GroupKind::integer_lattice || group.dim() != 1) {
    throw std::invalid_argument("Markov measures live on Z-systems");
  }
  std::vector<std::pair<std::int64_t, int>> cells;
  for (std::size_t i = 0; i < q.window.size(); ++i) {
    cells.emplace_back(std::get<LatticeVector>(q.window[i]).coords.at(0), q.symbols[i]);
  }
  std::sort(cells.begin(), cells.end());
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (cells[i].first != cells[i - 1].first + 1) {
      throw std::invalid_argument("Markov cylinder needs an interval window");
    }
  }
  if (cells.empty()) return 1.0;
  double prob = pi_(cells[0].second);
  for (std::size_t i = 1; i < cells.size(); ++i) prob *= P_(cells[i - 1].second, cells[i].second);
  return prob;
}

PatternDistribution InvariantMeasure::marginal(const GroupModel& group,
                                               const std::vector<GroupElement>& window) const {
  const int A = alphabet_size();
  const double universe = std::pow(static_cast<double>(A), static_cast<double>(window.size()));
  if (universe > 1 << 22) throw std::invalid_argument("marginal window is too large");
  PatternDistribution out;
  out.alphabet_size = A;
  out.window_size = window.size();
  out.mass.resize(static_cast<std::size_t>(universe));
  for (std::size_t c = 0; c < out.mass.size(); ++c) {
    Pattern q{window, pattern_symbols(static_cast<std::int64_t>(c), window.size(), A)};
    out.mass[c] = pattern_probability(group, q);
  }
  return out;
}

InvariantMeasure InvariantMeasure::relabeled(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != alphabet_size()) {
    throw std::invalid_argument("permutation size differs from the alphabet size");
  }
  inverse_permutation(perm);
  if (kind_ == MeasureKind::bernoulli) {
    std::vector<double> p(p_.size());
    for (std::size_t s = 0; s < p_.size(); ++s) p[static_cast<std::size_t>(perm[s])] = p_[s];
    return bernoulli(std::move(p));
  }
  const auto k = P_.rows();
  Eigen::MatrixXd P(k, k);
  Eigen::VectorXd pi(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    pi(perm[static_cast<std::size_t>(a)]) = pi_(a);
    for (Eigen::Index b = 0; b < k; ++b) {
      P(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]) = P_(a, b);
    }
  }
  return markov(P, pi);
}

bool InvariantMeasure::supported_on(const ShiftSystem& system) const {
  if (system.alphabet().size() != alphabet_size()) return false;
  for (const auto& q : system.forbidden()) {
    try {
      if (pattern_probability(system.group(), q) > 1e-15) return false;
    } catch (const std::invalid_argument&) {
      return false;
    }
  }
  return true;
}

InvariantMeasure parry_measure(const ShiftSystem& system) {
  const auto T = system.transfer_matrix();
  const auto k = static_cast<Eigen::Index>(T.size());
  Eigen::MatrixXd M(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) M(i, j) = T[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  auto perron = [](const Eigen::MatrixXd& A, double& lambda) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(A);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < A.rows(); ++i) {
      if (solver.eigenvalues()(i).real() > solver.eigenvalues()(best).real()) best = i;
    }
    lambda = solver.eigenvalues()(best).real();
    Eigen::VectorXd v = solver.eigenvectors().col(best).real().cwiseAbs();
    return Eigen::VectorXd(v / v.sum());
  };
  double lambda = 0.0;
  double lambda_left = 0.0;
  const Eigen::VectorXd r = perron(M, lambda);
  const Eigen::VectorXd l = perron(M.transpose(), lambda_left);
  if (!(lambda > 0.0) || r.minCoeff() <= 1e-12 || l.minCoeff() <= 1e-12) {
    throw std::invalid_argument("Parry measure needs an irreducible transition matrix");
  }
  Eigen::MatrixXd P(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) P(i, j) = M(i, j) * r(j) / (lambda * r(i));
    P.row(i) /= P.row(i).sum();
  }
  Eigen::VectorXd pi = l.cwiseProduct(r);
  pi /= pi.sum();
  return InvariantMeasure::markov(P, pi);
}

}  // namespace sofic
