#include "sofic/microstates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace sofic {

namespace {

constexpr double kSlack = 1e-9;

class MapCache {
 public:
  explicit MapCache(const LocalGSpace& M) : M_(M) {}

  // Table of p -> (f^-1).p, the cell read by window element f.
  const ActionMap& cells_for(const GroupElement& f) {
    auto it = maps_.find(f);
    if (it == maps_.end()) it = maps_.emplace(f, M_.action_map(M_.group().inverse(f))).first;
    return it->second;
  }

 private:
  const LocalGSpace& M_;
  std::map<GroupElement, ActionMap> maps_;
};

std::int64_t universe_size(int alphabet_size, std::size_t window_size) {
  const double u = std::pow(static_cast<double>(alphabet_size), static_cast<double>(window_size));
  if (u > 1 << 22) throw std::invalid_argument("constraint window is too large");
  return static_cast<std::int64_t>(u);
}

int label_at(const Labeling& omega, std::int64_t p) { return omega[static_cast<std::size_t>(p)]; }

}  // namespace

MeasureConstraint MeasureConstraint::tv_ball(std::vector<GroupElement> window,
                                             PatternDistribution center, double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be nonnegative");
  if (center.window_size != window.size()) throw std::invalid_argument("center does not match the window");
  MeasureConstraint c;
  c.kind = Kind::tv_ball;
  c.window = std::move(window);
  c.center = std::move(center);
  c.eta = eta;
  return c;
}

MeasureConstraint MeasureConstraint::exact(std::vector<GroupElement> window,
                                           std::vector<std::int64_t> counts) {
  for (auto v : counts) {
    if (v < 0) throw std::invalid_argument("target counts must be nonnegative");
  }
  MeasureConstraint c;
  c.kind = Kind::exact_counts;
  c.window = std::move(window);
  c.counts = std::move(counts);
  return c;
}

MeasureConstraint MeasureConstraint::box_union(std::vector<GroupElement> window,
                                               std::vector<MarginalBox> boxes) {
  for (const auto& b : boxes) {
    if (b.lower.size() != b.upper.size()) throw std::invalid_argument("box bounds differ in size");
    for (std::size_t i = 0; i < b.lower.size(); ++i) {
      if (b.lower[i] > b.upper[i]) throw std::invalid_argument("box has lower bound above upper bound");
    }
  }
  MeasureConstraint c;
  c.kind = Kind::boxes;
  c.window = std::move(window);
  c.boxes = std::move(boxes);
  return c;
}

PatternDistribution EmpiricalCounts::distribution() const {
  PatternDistribution d;
  d.alphabet_size = alphabet_size;
  d.window_size = window_size;
  d.mass.resize(counts.size());
  const auto n = static_cast<double>(total);
  for (std::size_t i = 0; i < counts.size(); ++i) d.mass[i] = static_cast<double>(counts[i]) / n;
  d.undefined = static_cast<double>(undefined) / n;
  return d;
}

MicrostateRules::MicrostateRules(const LocalGSpace& M, const ShiftSystem& system,
                                 const MapSpaceSpec& spec)
    : model_(&M), alphabet_size_(system.alphabet().size()), constraint_(spec.constraint) {
  if (!(M.group() == system.group())) throw std::invalid_argument("model and system use different groups");
  if (!(spec.delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");
  if (!spec.U.contains(M.group().identity())) throw std::invalid_argument("U must contain the identity");

  const std::size_t n = M.size();
  MapCache cache(M);
  certain_.assign(n, false);
  for (const auto& q : system.forbidden()) {
    for (std::size_t p = 0; p < n; ++p) {
      Check check{p, {}, q.symbols};
      for (const auto& f : q.window) {
        const auto cell = cache.cells_for(f)[p];
        if (cell == kNoPoint) {
          certain_[p] = true;
          break;
        }
        check.cells.push_back(static_cast<std::size_t>(cell));
      }
      if (check.cells.size() == q.window.size()) checks_.push_back(std::move(check));
    }
  }

  if (constraint_) {
    const auto universe = universe_size(alphabet_size_, constraint_->window.size());
    switch (constraint_->kind) {
      case MeasureConstraint::Kind::tv_ball:
        if (constraint_->center.alphabet_size != alphabet_size_ ||
            static_cast<std::int64_t>(constraint_->center.mass.size()) != universe) {
          throw std::invalid_argument("constraint centre lives on a different pattern universe");
        }
        break;
      case MeasureConstraint::Kind::exact_counts:
        if (static_cast<std::int64_t>(constraint_->counts.size()) != universe) {
          throw std::invalid_argument("target counts live on a different pattern universe");
        }
        break;
      case MeasureConstraint::Kind::boxes:
        for (const auto& b : constraint_->boxes) {
          if (static_cast<std::int64_t>(b.lower.size()) != universe) {
            throw std::invalid_argument("box lives on a different pattern universe");
          }
        }
        break;
    }
    window_cells_.assign(n, {});
    for (const auto& f : constraint_->window) cache.cells_for(f);
    for (std::size_t p = 0; p < n; ++p) {
      std::vector<std::size_t> cells;
      for (const auto& f : constraint_->window) {
        const auto cell = cache.cells_for(f)[p];
        if (cell == kNoPoint) break;
        cells.push_back(static_cast<std::size_t>(cell));
      }
      if (cells.size() == constraint_->window.size()) {
        window_cells_[p] = std::move(cells);
      } else {
        ++undefined_windows_;
      }
    }
  }

  // phi(g.p)(e) and (g.phi(p))(e) = phi(p)(g^-1) both read omega(g.p), so the
  // equivariance defect is the mass where g.p is undefined, whatever omega is.
  double worst = 0.0;
  double weighted = 0.0;
  double total_weight = 0.0;
  for (const auto& e : spec.U.entries()) {
    const auto table = M.action_map(e.element);
    const auto undefined = static_cast<double>(std::count(table.begin(), table.end(), kNoPoint));
    worst = std::max(worst, undefined);
    weighted += e.weight * undefined;
    total_weight += e.weight;
  }
  eq_units_ = spec.mode == MapMode::averaged ? (total_weight > 0 ? weighted / total_weight : 0.0) : worst;

  const double budget = spec.delta * static_cast<double>(n);
  if (spec.engine == Engine::strict) {
    allowance_ = eq_units_ <= budget + kSlack ? 0 : -1;
  } else {
    const double room = budget - eq_units_;
    allowance_ = room < -kSlack ? -1 : static_cast<std::int64_t>(std::floor(room + kSlack));
  }
  if (spec.mode == MapMode::measure_preserving &&
      (!constraint_ || constraint_->kind != MeasureConstraint::Kind::exact_counts)) {
    throw std::invalid_argument("measure-preserving mode needs exact target counts");
  }
}

std::int64_t MicrostateRules::defective_points(const Labeling& omega) const {
  if (omega.size() != model_->size()) throw std::invalid_argument("labeling size differs from the model");
  std::vector<bool> bad = certain_;
  for (const auto& c : checks_) {
    if (bad[c.point]) continue;
    bool match = true;
    for (std::size_t i = 0; i < c.cells.size() && match; ++i) match = omega[c.cells[i]] == c.symbols[i];
    if (match) bad[c.point] = true;
  }
  return std::count(bad.begin(), bad.end(), true);
}

std::vector<std::int64_t> MicrostateRules::window_counts(const Labeling& omega) const {
  if (!constraint_) return {};
  std::vector<std::int64_t> counts(
      static_cast<std::size_t>(universe_size(alphabet_size_, constraint_->window.size())), 0);
  for (const auto& cells : window_cells_) {
    if (cells.empty() && !constraint_->window.empty()) continue;
    std::int64_t code = 0;
    for (auto c : cells) code = code * alphabet_size_ + omega[c];
    ++counts[static_cast<std::size_t>(code)];
  }
  return counts;
}

bool MicrostateRules::constraint_holds(const std::vector<std::int64_t>& counts) const {
  if (!constraint_) return true;
  const auto n = static_cast<double>(model_->size());
  const auto u = static_cast<double>(undefined_windows_);
  switch (constraint_->kind) {
    case MeasureConstraint::Kind::tv_ball: {
      double sum = std::abs(u / n - constraint_->center.undefined);
      for (std::size_t c = 0; c < counts.size(); ++c) {
        sum += std::abs(static_cast<double>(counts[c]) / n - constraint_->center.mass[c]);
      }
      return 0.5 * sum <= constraint_->eta + 1e-12;
    }
    case MeasureConstraint::Kind::exact_counts:
      return undefined_windows_ == 0 && counts == constraint_->counts;
    case MeasureConstraint::Kind::boxes:
      return std::any_of(constraint_->boxes.begin(), constraint_->boxes.end(), [&](const MarginalBox& b) {
        for (std::size_t c = 0; c < counts.size(); ++c) {
          const auto k = static_cast<double>(counts[c]);
          if (k < b.lower[c] * n - kSlack || k > b.upper[c] * n + kSlack) return false;
        }
        return true;
      });
  }
  return false;
}

bool MicrostateRules::accepts(const Labeling& omega) const {
  if (allowance_ < 0) return false;
  if (defective_points(omega) > allowance_) return false;
  return constraint_holds(window_counts(omega));
}

double equivariance_defect(const LocalGSpace& M, const Labeling& omega, const GroupElement& g) {
  if (omega.size() != M.size()) throw std::invalid_argument("labeling size differs from the model");
  const auto& G = M.group();
  // phi(p)(h) = omega(h^-1.p)
  auto name_at = [&](std::size_t p, const GroupElement& h) -> std::optional<int> {
    const auto q = M.act(G.inverse(h), p);
    if (!q) return std::nullopt;
    return omega[*q];
  };
  std::size_t bad = 0;
  for (std::size_t p = 0; p < M.size(); ++p) {
    const auto gp = M.act(g, p);
    if (!gp) {
      ++bad;
      continue;
    }
    const auto lhs = name_at(*gp, G.identity());
    const auto rhs = name_at(p, G.inverse(g));
    if (!lhs || !rhs || *lhs != *rhs) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(M.size());
}

double sft_defect(const LocalGSpace& M, const Labeling& omega, const ShiftSystem& system) {
  MapSpaceSpec spec;
  spec.U.insert(M.group().identity(), M.group().point_weight());
  spec.delta = 1.0;
  MicrostateRules rules(M, system, spec);
  return static_cast<double>(rules.defective_points(omega)) / static_cast<double>(M.size());
}

bool is_member(const LocalGSpace& M, const Labeling& omega, const MapSpaceSpec& spec,
               const ShiftSystem& system) {
  return MicrostateRules(M, system, spec).accepts(omega);
}

EmpiricalCounts empirical_measure(const LocalGSpace& M, const Labeling& omega,
                                  const std::vector<GroupElement>& window, int alphabet_size) {
  if (omega.size() != M.size()) throw std::invalid_argument("labeling size differs from the model");
  EmpiricalCounts out;
  out.alphabet_size = alphabet_size;
  out.window_size = window.size();
  out.total = static_cast<std::int64_t>(M.size());
  out.counts.assign(static_cast<std::size_t>(universe_size(alphabet_size, window.size())), 0);
  MapCache cache(M);
  std::vector<const ActionMap*> maps;
  for (const auto& f : window) maps.push_back(&cache.cells_for(f));
  for (std::size_t p = 0; p < M.size(); ++p) {
    std::int64_t code = 0;
    bool defined = true;
    for (const auto* m : maps) {
      const auto cell = (*m)[p];
      if (cell == kNoPoint) {
        defined = false;
        break;
      }
      code = code * alphabet_size + label_at(omega, cell);
    }
    if (defined) {
      ++out.counts[static_cast<std::size_t>(code)];
    } else {
      ++out.undefined;
    }
  }
  return out;
}

double rho_M_distance(const LocalGSpace& M, const Labeling& a, const Labeling& b) {
  if (a.size() != M.size() || b.size() != M.size()) {
    throw std::invalid_argument("labelings live on different models");
  }
  std::size_t differ = 0;
  for (std::size_t p = 0; p < a.size(); ++p) differ += a[p] != b[p] ? 1 : 0;
  return static_cast<double>(differ) / static_cast<double>(M.size());
}

std::vector<std::int64_t> quantize_marginal(const std::vector<double>& mass, std::int64_t n) {
  if (n < 0) throw std::invalid_argument("quantization size must be nonnegative");
  double total = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0)) throw std::invalid_argument("marginal has negative mass");
    total += m;
  }
  if (mass.empty() || std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("marginal is not a probability vector");
  std::vector<std::int64_t> counts(mass.size());
  std::vector<double> remainder(mass.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const double exact = mass[i] * static_cast<double>(n);
    // snap values within rounding noise of an integer
    const double snapped = std::abs(exact - std::round(exact)) < 1e-9 ? std::round(exact) : exact;
    counts[i] = static_cast<std::int64_t>(std::floor(snapped));
    remainder[i] = snapped - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(mass.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  // equal remainders move together when the whole group fits
  std::vector<bool> raised(mass.size(), false);
  for (std::size_t begin = 0; begin < order.size() && assigned < n;) {
    std::size_t end = begin + 1;
    while (end < order.size() && std::abs(remainder[order[end]] - remainder[order[begin]]) < 1e-12) ++end;
    if (static_cast<std::int64_t>(end - begin) <= n - assigned) {
      for (std::size_t k = begin; k < end; ++k) {
        ++counts[order[k]];
        raised[order[k]] = true;
        ++assigned;
      }
    }
    begin = end;
  }
  for (std::size_t k = 0; assigned < n; ++k) {
    const auto i = order[k % order.size()];
    if (raised[i] && k < order.size()) continue;
    ++counts[i];
    ++assigned;
  }
  return counts;
}

TransportResult transport_to_target(const LocalGSpace& M, const Labeling& omega,
                                    const std::vector<std::int64_t>& target) {
  if (omega.size() != M.size()) throw std::invalid_argument("labeling size differs from the model");
  const auto n = static_cast<std::int64_t>(M.size());
  if (std::accumulate(target.begin(), target.end(), std::int64_t{0}) != n) {
    throw std::invalid_argument("target counts do not sum to the number of points");
  }
  std::vector<std::int64_t> surplus(target.size(), 0);
  for (int s : omega) {
    if (s < 0 || static_cast<std::size_t>(s) >= target.size()) {
      throw std::invalid_argument("labeling uses a symbol outside the target alphabet");
    }
    ++surplus[static_cast<std::size_t>(s)];
  }
  for (std::size_t s = 0; s < target.size(); ++s) surplus[s] -= target[s];

  TransportResult out{omega, 0};
  std::size_t deficit = 0;
  for (auto& label : out.labels) {
    auto& extra = surplus[static_cast<std::size_t>(label)];
    if (extra <= 0) continue;
    while (surplus[deficit] >= 0) ++deficit;
    --extra;
    ++surplus[deficit];
    label = static_cast<int>(deficit);
    ++out.relabeled;
  }
  return out;
}

double perturbation_stability_bound(double kappa, double epsilon) {
  if (!(kappa >= 0.0) || !(epsilon >= 0.0)) throw std::invalid_argument("kappa and epsilon must be >= 0");
  return std::sqrt(epsilon) + epsilon + kappa;
}

std::string to_string(MapMode mode) {
  switch (mode) {
    case MapMode::strict:
      return "strict";
    case MapMode::averaged:
      return "averaged";
    case MapMode::measure_preserving:
      return "measure-preserving";
  }
  return "unknown";
}

std::string to_string(Engine engine) { return engine == Engine::strict ? "strict" : "soft"; }

}  // namespace sofic
